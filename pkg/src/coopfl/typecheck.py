"""Hindley-Milner type inference for expressions, rules and goals."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .pretty import pp
from .terms import (App, BOTTOM, Expression, IntLit, RealLit, Symbol, Var,
                    free_vars, spine)
from .typesys import (BOOL, INT, REAL, Signature, TCon, TFun, TVar, Type,
                      fresh_tvar, instantiate, tvars, uncurry)


class TypeInferenceError(Exception):
    def __init__(self, message: str, subterm: Optional[Expression] = None):
        if subterm is not None:
            message = f"{message} (in {pp(subterm)})"
        super().__init__(message)
        self.subterm = subterm


class Unifier:
    """Destructive type unification with occurs check.

    Integer literals are typed with per-occurrence type variables so an
    int literal written in a real position coerces to the exact real;
    ``coerce`` rewrites the checked AST accordingly.
    """

    def __init__(self) -> None:
        self.binding: dict[TVar, Type] = {}
        self.literals: dict[int, tuple[IntLit, TVar]] = {}

    def lit_tvar(self, node: IntLit) -> TVar:
        entry = self.literals.get(id(node))
        if entry is None:
            entry = (node, fresh_tvar())
            self.literals[id(node)] = entry
        return entry[1]

    def settle_literals(self) -> None:
        for node, tv in self.literals.values():
            t = self.resolve(tv)
            if isinstance(t, TVar):
                self.unify(t, INT)
            elif t not in (INT, REAL):
                raise TypeInferenceError(
                    f"numeric literal used at type {t!r}", node)

    def coerce(self, e: Expression) -> Expression:
        if isinstance(e, IntLit):
            entry = self.literals.get(id(e))
            if entry is not None and self.resolve(entry[1]) == REAL:
                return RealLit(Fraction(e.value))
            return e
        if isinstance(e, App):
            return App(self.coerce(e.fun), self.coerce(e.arg))
        return e

    def resolve(self, t: Type) -> Type:
        if isinstance(t, TVar):
            b = self.binding.get(t)
            if b is None:
                return t
            r = self.resolve(b)
            self.binding[t] = r
            return r
        if isinstance(t, TFun):
            return TFun(self.resolve(t.arg), self.resolve(t.res))
        if isinstance(t, TCon):
            return TCon(t.name, tuple(self.resolve(a) for a in t.args))
        return t

    def unify(self, t1: Type, t2: Type, where: Optional[Expression] = None) -> None:
        t1, t2 = self.resolve(t1), self.resolve(t2)
        if t1 == t2:
            return
        if isinstance(t1, TVar):
            if t1 in tvars(t2):
                raise TypeInferenceError(
                    f"circular type {t1!r} = {t2!r}", where)
            self.binding[t1] = t2
            return
        if isinstance(t2, TVar):
            self.unify(t2, t1, where)
            return
        if isinstance(t1, TFun) and isinstance(t2, TFun):
            self.unify(t1.arg, t2.arg, where)
            self.unify(t1.res, t2.res, where)
            return
        if (isinstance(t1, TCon) and isinstance(t2, TCon)
                and t1.name == t2.name and len(t1.args) == len(t2.args)):
            for a, b in zip(t1.args, t2.args):
                self.unify(a, b, where)
            return
        raise TypeInferenceError(f"type clash: {t1!r} vs {t2!r}", where)


class TypeEnv:
    def __init__(self, assumptions: Optional[dict[Var, Type]] = None):
        self.assumptions: dict[Var, Type] = dict(assumptions or {})

    def copy(self) -> "TypeEnv":
        return TypeEnv(self.assumptions)


def infer(sig: Signature, env: TypeEnv, e: Expression,
          unifier: Optional[Unifier] = None) -> Type:
    """Principal type of an expression; unbound variables get fresh
    monomorphic type variables recorded into the environment."""
    u = unifier or Unifier()
    t = _infer(sig, env, e, u)
    u.settle_literals()
    return u.resolve(t)


def _infer(sig: Signature, env: TypeEnv, e: Expression, u: Unifier) -> Type:
    if e is BOTTOM:
        return fresh_tvar()
    if isinstance(e, IntLit):
        return u.lit_tvar(e)
    if isinstance(e, RealLit):
        return REAL
    if isinstance(e, Var):
        if e not in env.assumptions:
            env.assumptions[e] = fresh_tvar()
        return env.assumptions[e]
    if isinstance(e, Symbol):
        if e.name not in sig.types:
            raise TypeInferenceError(f"unknown symbol {e.name}", e)
        return instantiate(sig.expand_alias(sig.types[e.name]))
    assert isinstance(e, App)
    tf = _infer(sig, env, e.fun, u)
    ta = _infer(sig, env, e.arg, u)
    res = fresh_tvar()
    u.unify(tf, TFun(ta, res), e)
    return res


def infer_constraint(sig: Signature, env: TypeEnv, c, u: Optional[Unifier] = None) -> None:
    """Type-check an atomic constraint p args ->! result."""
    u = u or Unifier()
    pt = instantiate(sig.expand_alias(sig.types[c.prim.name]))
    arg_ts, res_t = uncurry(pt, len(c.args))
    for a, t in zip(c.args, arg_ts):
        u.unify(_infer(sig, env, a, u), t, a)
    u.unify(_infer(sig, env, c.result, u), res_t, c.result)
    for v in list(env.assumptions):
        env.assumptions[v] = u.resolve(env.assumptions[v])


def is_opaque(sig: Signature, name: str, m: int) -> bool:
    """True iff the symbol hides argument type information when applied
    to m arguments."""
    t = sig.expand_alias(sig.types[name])
    args, res = uncurry(t, m)
    arg_vars: set[TVar] = set()
    for a in args:
        arg_vars |= tvars(a)
    return not arg_vars <= tvars(res)


def check_program(sig: Signature, rules_by_fun: dict[str, list],
                  declared: dict[str, Type]) -> list[str]:
    """Check every rule against its function's principal type; rules get
    their resolved variable environments attached.  Undeclared functions
    are inferred with monomorphic recursion and their types recorded."""
    warnings: list[str] = []
    u = Unifier()
    skeletons: dict[str, Type] = {}
    for fname, rules in rules_by_fun.items():
        if fname in declared:
            continue
        arity = rules[0].arity()
        t: Type = fresh_tvar()
        for _ in range(arity):
            t = TFun(fresh_tvar(), t)
        skeletons[fname] = t
        sig.types[fname] = t

    envs: list[tuple] = []
    for fname, rules in rules_by_fun.items():
        for rule in rules:
            env = TypeEnv()
            if fname in declared:
                ft = instantiate(sig.expand_alias(declared[fname]))
            else:
                ft = skeletons[fname]
            try:
                arg_ts, res_t = uncurry(ft, rule.arity())
                for p, t in zip(rule.patterns, arg_ts):
                    u.unify(_infer(sig, env, p, u), t, p)
                u.unify(_infer(sig, env, rule.rhs, u), res_t, rule.rhs)
                for c in rule.conditions:
                    infer_constraint(sig, env, c, u)
            except TypeInferenceError as err:
                raise TypeInferenceError(
                    f"rule for {fname} at {rule.location}: {err}") from err
            envs.append((rule, env))

    u.settle_literals()
    for rule, env in envs:
        rule.patterns = tuple(u.coerce(p) for p in rule.patterns)
        rule.rhs = u.coerce(rule.rhs)
        rule.conditions = tuple(
            type(c)(c.prim, tuple(u.coerce(a) for a in c.args),
                    u.coerce(c.result))
            for c in rule.conditions)
        rule.type_env = {v: u.resolve(t) for v, t in env.assumptions.items()}
    for fname in skeletons:
        sig.types[fname] = u.resolve(skeletons[fname])
    return warnings


def check_goal(sig: Signature, constraints) -> tuple[dict[Var, Type], list]:
    """Type-check a goal's constraint pool.  Returns the inferred goal
    variable types and the pool with numeric literals coerced."""
    env = TypeEnv()
    u = Unifier()
    for c in constraints:
        infer_constraint(sig, env, c, u)
    u.settle_literals()
    coerced = [type(c)(c.prim, tuple(u.coerce(a) for a in c.args),
                       u.coerce(c.result)) for c in constraints]
    types = {v: u.resolve(t) for v, t in env.assumptions.items()}
    return types, coerced
