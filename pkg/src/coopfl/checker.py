"""Operational answer verification.

An answer is checked by substituting it into the initial goal's
constraints and deciding each one by innermost rewriting with the
program rules plus the primitive interpretations.  Conditions may bind
existential variables (bridge mates, flattening temporaries); these are
solved left-to-right with deferral, so the check needs no narrowing as
long as the constraints determine the existential values.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterator, Optional

from .constraints import Constraint, FALSE, TRUE
from .engine import Answer
from .mediatorial import int_equivalent
from .parser import Program
from .pretty import pp
from .terms import (App, Expression, IntLit, Kind, RealLit, Subst, Symbol,
                    Var, VarGen, free_vars, is_ground, lub, mk_app, spine)
from .typesys import BRIDGE, EQ, FD_LE, FD_OPS, R_LE, R_OPS


class CheckUndecided(Exception):
    """Residual constraints left the check undetermined."""

    def __init__(self, leftovers):
        super().__init__(
            "unverifiable residual constraints: "
            + "; ".join(repr(c) for c in leftovers))
        self.leftovers = list(leftovers)


class _Mismatch(Exception):
    pass


class Checker:
    def __init__(self, program: Program):
        self.program = program
        self.gen = VarGen(10_000_000)

    # ---- expression evaluation ----

    def eval(self, e: Expression, depth: int = 0) -> Expression:
        """Innermost rewriting to a value (a ground-enough pattern)."""
        if depth > 4000:
            raise CheckUndecided([])
        head, args = spine(e)
        args = [self.eval(a, depth + 1) for a in args]
        if isinstance(head, Symbol) and head.kind == Kind.DEFINED \
                and len(args) >= head.arity:
            for result in self._apply_rules(head, args, depth):
                return result
            raise _Mismatch()
        if isinstance(head, Symbol) and head.kind == Kind.PRIMITIVE \
                and len(args) == head.arity:
            v = _prim_value(head.name, args)
            if v is not None:
                return v
        return mk_app(head, args)

    def _apply_rules(self, f: Symbol, args: list[Expression],
                     depth: int) -> Iterator[Expression]:
        n = f.arity
        for rule in self.program.rules_for(f.name):
            ren = self.gen.rename(sorted(rule.variables(),
                                         key=lambda v: (v.name, v.gen)))
            env: dict[Var, Expression] = {}
            if not all(_match(ren.apply(p), a, env)
                       for p, a in zip(rule.patterns, args[:n])):
                continue
            sub = Subst(env)
            conds = [c.apply(ren).apply(sub) for c in rule.conditions]
            try:
                env2 = self.check_constraints(conds, depth + 1)
            except _Mismatch:
                continue
            rhs = Subst(env2).apply(sub.apply(ren.apply(rule.rhs)))
            result = self.eval(mk_app(rhs, args[n:]), depth + 1)
            yield result

    # ---- constraint deciding ----

    def check_constraints(self, constraints: list[Constraint],
                          depth: int = 0) -> dict[Var, Expression]:
        """Decide a conjunction, binding whatever existential variables
        the constraints determine; raises on failure or undecidability."""
        env: dict[Var, Expression] = {}
        queue = list(constraints)
        while queue:
            progress = False
            deferred: list[Constraint] = []
            for c in queue:
                c2 = c.apply(Subst(env))
                outcome = self._decide(c2, env, depth)
                if outcome == "again":
                    deferred.append(c)
                else:
                    progress = True
            if not progress:
                raise CheckUndecided(deferred)
            queue = deferred
        return env

    def _decide(self, c: Constraint, env: dict[Var, Expression],
                depth: int) -> str:
        name = c.prim.name
        args = [self.eval(a, depth) for a in c.args]
        result = c.result
        if name == BRIDGE:
            return _decide_bridge(args, result, env)
        if name == EQ:
            a, b = args
            if is_ground(a) and is_ground(b):
                equal = a == b
                if (result == TRUE) != equal and result in (TRUE, FALSE):
                    raise _Mismatch()
                if isinstance(result, Var):
                    env[result] = TRUE if equal else FALSE
                return "ok"
            if result == TRUE:
                if isinstance(a, Var) and is_ground(b):
                    env[a] = b
                    return "ok"
                if isinstance(b, Var) and is_ground(a):
                    env[b] = a
                    return "ok"
            return "again"
        value = _prim_value(name, args)
        if value is None:
            return "again"
        if value == result:
            return "ok"
        if isinstance(result, Var):
            env[result] = value
            return "ok"
        raise _Mismatch()

    # ---- public API ----

    def check_answer(self, pool: list[Constraint], answer: Answer) -> bool:
        sub = Subst(dict(answer.substitution))
        try:
            self.check_constraints([c.apply(sub) for c in pool])
            return True
        except _Mismatch:
            return False


def _decide_bridge(args, result, env) -> str:
    a, b = args
    if isinstance(a, IntLit) and isinstance(b, RealLit):
        eq = int_equivalent(b.value, Fraction(0)) == a.value
        want = result == TRUE
        if isinstance(result, Var):
            env[result] = TRUE if eq else FALSE
            return "ok"
        if eq != want:
            raise _Mismatch()
        return "ok"
    if result == TRUE:
        if isinstance(a, IntLit) and isinstance(b, Var):
            env[b] = RealLit(Fraction(a.value))
            return "ok"
        if isinstance(b, RealLit) and isinstance(a, Var):
            u = int_equivalent(b.value, Fraction(0))
            if u is None:
                raise _Mismatch()
            env[a] = IntLit(u)
            return "ok"
    return "again"


def _num(e: Expression) -> Optional[Fraction]:
    if isinstance(e, IntLit):
        return Fraction(e.value)
    if isinstance(e, RealLit):
        return e.value
    return None


def _prim_value(name: str, args: list[Expression]) -> Optional[Expression]:
    """Ground primitive interpretation; None when not decidable."""
    from .fd import _expr_list, _trunc_div
    if name == EQ:
        a, b = args
        if is_ground(a) and is_ground(b):
            return TRUE if a == b else FALSE
        return None
    if name in R_OPS:
        a, b = _num(args[0]), _num(args[1])
        if a is None or b is None:
            return None
        if name == "/" and b == 0:
            return None
        out = {"+": a + b, "-": a - b, "*": a * b,
               "/": a / b if b else None}[name]
        return RealLit(out)
    if name in FD_OPS:
        if not all(isinstance(x, IntLit) for x in args):
            return None
        a, b = args[0].value, args[1].value
        if name == "#/" and b == 0:
            return None
        out = {"#+": a + b, "#-": a - b, "#*": a * b,
               "#/": _trunc_div(a, b) if b else None}[name]
        return IntLit(out)
    if name == R_LE:
        a, b = _num(args[0]), _num(args[1])
        if a is None or b is None:
            return None
        return TRUE if a <= b else FALSE
    if name == FD_LE:
        if not all(isinstance(x, IntLit) for x in args):
            return None
        return TRUE if args[0].value <= args[1].value else FALSE
    if name == "domain":
        items = _expr_list(args[0])
        if (items is None or not all(isinstance(i, IntLit) for i in items)
                or not isinstance(args[1], IntLit)
                or not isinstance(args[2], IntLit)):
            return None
        lo, hi = args[1].value, args[2].value
        if lo > hi or not items:
            return FALSE
        return TRUE if all(lo <= i.value <= hi for i in items) else FALSE
    if name == "belongs":
        items = _expr_list(args[1])
        if (items is None or not all(isinstance(i, IntLit) for i in items)
                or not isinstance(args[0], IntLit)):
            return None
        return TRUE if args[0].value in [i.value for i in items] else FALSE
    if name == "labeling":
        items = _expr_list(args[1])
        if items is None or not all(isinstance(i, IntLit) for i in items):
            return None
        return TRUE
    return None


def _match(pattern: Expression, value: Expression,
           env: dict[Var, Expression]) -> bool:
    if isinstance(pattern, Var):
        if pattern in env:
            return env[pattern] == value
        env[pattern] = value
        return True
    if isinstance(pattern, (IntLit, RealLit, Symbol)):
        return pattern == value
    if isinstance(pattern, App) and isinstance(value, App):
        return (_match(pattern.fun, value.fun, env)
                and _match(pattern.arg, value.arg, env))
    return False


def check_answer(program: Program, pool: list[Constraint],
                 answer: Answer) -> bool:
    """True iff substituting the answer into the initial goal makes all
    of its constraints hold under the rules and interpretations."""
    return Checker(program).check_answer(pool, answer)
