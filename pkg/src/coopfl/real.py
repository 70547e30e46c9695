"""Linear real-arithmetic solver over exact rationals.

Equalities are solved by Gaussian elimination, inequalities by
Fourier-Motzkin with strictness flags, so satisfiability decisions and
forced values are exact.  Atoms that are non-linear after constant
folding (a product of two non-constant factors, or division by a
non-constant) are delayed; substitutions arising during solving awaken
them once some factor becomes ground.  Disequalities are delayed until
their two sides differ by a constant.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from .constraints import Constraint, FALSE, Store, TRUE, is_proper_r
from .terms import Expression, IntLit, RealLit, Subst, Var, free_vars
from .typesys import EQ, R_LE, R_OPS


class NotRSpecific(Exception):
    pass


class _DivZero(Exception):
    pass


LinForm = tuple[dict[Var, Fraction], Fraction]


def _lf_const(q: Fraction) -> LinForm:
    return {}, q


def _lf_add(a: LinForm, b: LinForm, k: Fraction = Fraction(1)) -> LinForm:
    coeffs = dict(a[0])
    for v, c in b[0].items():
        coeffs[v] = coeffs.get(v, Fraction(0)) + k * c
        if coeffs[v] == 0:
            del coeffs[v]
    return coeffs, a[1] + k * b[1]


def _lf_scale(a: LinForm, k: Fraction) -> LinForm:
    if k == 0:
        return _lf_const(Fraction(0))
    return {v: k * c for v, c in a[0].items()}, k * a[1]


def linform(e: Expression) -> Optional[LinForm]:
    """Linear form of an arithmetic expression after constant folding;
    None when non-linear, _DivZero when a division by zero is forced."""
    if isinstance(e, Var):
        return {e: Fraction(1)}, Fraction(0)
    if isinstance(e, RealLit):
        return _lf_const(e.value)
    if isinstance(e, IntLit):
        return _lf_const(Fraction(e.value))
    from .terms import spine, Symbol
    head, args = spine(e)
    if isinstance(head, Symbol) and head.name in R_OPS and len(args) == 2:
        a, b = linform(args[0]), linform(args[1])
        if a is None or b is None:
            return None
        if head.name == "+":
            return _lf_add(a, b)
        if head.name == "-":
            return _lf_add(a, b, Fraction(-1))
        if head.name == "*":
            if not a[0]:
                return _lf_scale(b, a[1])
            if not b[0]:
                return _lf_scale(a, b[1])
            return None
        if not b[0]:
            if b[1] == 0:
                raise _DivZero()
            return _lf_scale(a, 1 / b[1])
        return None
    return None


@dataclass
class _Norm:
    """One atom, normalized."""
    kind: str  # eq | le | diseq | delayed
    lf: Optional[LinForm] = None
    strict: bool = False
    source: Optional[Constraint] = None


def _normalize(c: Constraint) -> _Norm:
    name = c.prim.name
    if name == EQ:
        if c.result not in (TRUE, FALSE):
            raise NotRSpecific(f"equality with variable result: {c!r}")
        try:
            a, b = linform(c.args[0]), linform(c.args[1])
        except _DivZero:
            return _Norm("unsat", source=c)
        if a is None or b is None:
            return _Norm("delayed", source=c)
        diff = _lf_add(a, b, Fraction(-1))
        return _Norm("eq" if c.result == TRUE else "diseq", diff, source=c)
    if not is_proper_r(c):
        raise NotRSpecific(f"not a real-arithmetic atom: {c!r}")
    if name == R_LE:
        if c.result not in (TRUE, FALSE):
            raise NotRSpecific(f"inequality with variable result: {c!r}")
        try:
            a, b = linform(c.args[0]), linform(c.args[1])
        except _DivZero:
            return _Norm("unsat", source=c)
        if a is None or b is None:
            return _Norm("delayed", source=c)
        if c.result == TRUE:  # a - b <= 0
            return _Norm("le", _lf_add(a, b, Fraction(-1)), strict=False, source=c)
        # not (a <= b): b - a < 0
        return _Norm("le", _lf_add(b, a, Fraction(-1)), strict=True, source=c)
    # arithmetic: args (+,-,*,/) with result pattern
    try:
        a, b = linform(c.args[0]), linform(c.args[1])
        r = linform(c.result)
    except _DivZero:
        return _Norm("unsat", source=c)
    if r is None:
        return _Norm("delayed", source=c)
    if name in ("+", "-"):
        if a is None or b is None:
            return _Norm("delayed", source=c)
        s = _lf_add(a, b, Fraction(1) if name == "+" else Fraction(-1))
        return _Norm("eq", _lf_add(s, r, Fraction(-1)), source=c)
    if name == "*":
        if a is not None and not a[0] and b is not None:
            return _Norm("eq", _lf_add(_lf_scale(b, a[1]), r, Fraction(-1)), source=c)
        if b is not None and not b[0] and a is not None:
            return _Norm("eq", _lf_add(_lf_scale(a, b[1]), r, Fraction(-1)), source=c)
        return _Norm("delayed", source=c)
    if name == "/":
        if b is not None and not b[0]:
            if b[1] == 0:
                return _Norm("unsat", source=c)
            if a is not None:
                return _Norm("eq", _lf_add(_lf_scale(a, 1 / b[1]), r, Fraction(-1)),
                             source=c)
        return _Norm("delayed", source=c)
    raise NotRSpecific(f"not a real-arithmetic atom: {c!r}")


def is_delayed(c: Constraint) -> bool:
    return _normalize(c).kind == "delayed"


# ---- Fourier-Motzkin over (coeffs, const, strict) meaning lf (<|<=) 0 ----

Ineq = tuple[dict[Var, Fraction], Fraction, bool]


def _fm_eliminate(ineqs: list[Ineq], v: Var) -> Optional[list[Ineq]]:
    pos, neg, rest = [], [], []
    for co, k, st in ineqs:
        c = co.get(v, Fraction(0))
        if c > 0:
            pos.append((co, k, st))
        elif c < 0:
            neg.append((co, k, st))
        else:
            rest.append((co, k, st))
    for pco, pk, pst in pos:
        for nco, nk, nst in neg:
            a, b = pco[v], -nco[v]
            co = {}
            for w in set(pco) | set(nco):
                if w == v:
                    continue
                val = b * pco.get(w, Fraction(0)) + a * nco.get(w, Fraction(0))
                if val != 0:
                    co[w] = val
            k = b * pk + a * nk
            row = (co, k, pst or nst)
            if not co:
                if k > 0 or (k == 0 and row[2]):
                    return None
            else:
                rest.append(row)
    return rest


def _fm_sat(ineqs: list[Ineq]) -> bool:
    ineqs = [r for r in ineqs]
    for co, k, st in ineqs:
        if not co and (k > 0 or (k == 0 and st)):
            return False
    while True:
        vs = set()
        for co, _, _ in ineqs:
            vs |= set(co)
        if not vs:
            return True
        v = min(vs, key=lambda x: (sum(1 for co, _, _ in ineqs if x in co),
                                   x.name, x.gen))
        nxt = _fm_eliminate(ineqs, v)
        if nxt is None:
            return False
        ineqs = [r for r in nxt if r[0] or r[1] > 0 or (r[1] == 0 and r[2])]
        for co, k, st in ineqs:
            if not co and (k > 0 or (k == 0 and st)):
                return False


def _fm_bounds(ineqs: list[Ineq], v: Var) -> tuple[
        Optional[tuple[Fraction, bool]], Optional[tuple[Fraction, bool]]]:
    """Implied (lower, upper) bounds of v, each (value, strict)."""
    rows = list(ineqs)
    others = set()
    for co, _, _ in rows:
        others |= set(co)
    others.discard(v)
    for w in sorted(others, key=lambda x: (x.name, x.gen)):
        nxt = _fm_eliminate(rows, w)
        if nxt is None:
            return None, None  # unsat: caller handles
        rows = nxt
    lo: Optional[tuple[Fraction, bool]] = None
    hi: Optional[tuple[Fraction, bool]] = None
    for co, k, st in rows:
        c = co.get(v, Fraction(0))
        if c == 0:
            continue
        bound = -k / c
        if c > 0:  # v <= bound (or <)
            if hi is None or bound < hi[0] or (bound == hi[0] and st):
                hi = (bound, st)
        else:  # v >= bound
            if lo is None or bound > lo[0] or (bound == lo[0] and st):
                lo = (bound, st)
    return lo, hi


class RSolveResult:
    def __init__(self, atoms: list[Constraint], subst: Subst,
                 delayed: list[Constraint]):
        self.atoms = atoms
        self.subst = subst
        self.delayed = delayed

    def as_store(self) -> Store:
        return Store(tuple(self.atoms), self.subst)


def _lf_to_binding(lf: LinForm) -> Optional[Expression]:
    """A pivot definition that can be exposed as a store binding."""
    coeffs, k = lf
    if not coeffs:
        return RealLit(k)
    if len(coeffs) == 1 and k == 0:
        (v, c), = coeffs.items()
        if c == 1:
            return v
    return None


def solve(atoms: Iterable[Constraint]) -> Optional[RSolveResult]:
    """Single-alternative solving: decide the linear part, bind variables
    forced to a unique value, keep delayed atoms.  None means unsat."""
    original = list(atoms)
    binding: dict[Var, Expression] = {}
    work = list(original)

    while True:
        sub = Subst(binding)
        eqs: list[LinForm] = []
        les: list[Ineq] = []
        diseqs: list[LinForm] = []
        delayed: list[Constraint] = []
        for c in work:
            n = _normalize(c.apply(sub))
            if n.kind == "unsat":
                return None
            if n.kind == "delayed":
                delayed.append(c)
            elif n.kind == "eq":
                eqs.append(n.lf)
            elif n.kind == "diseq":
                diseqs.append(n.lf)
            else:
                les.append((n.lf[0], n.lf[1], n.strict))

        # Gaussian elimination; pivot the most recently created variable
        solved: list[tuple[Var, LinForm]] = []
        for row in eqs:
            co, k = dict(row[0]), row[1]
            for pv, plf in solved:
                if pv in co:
                    c = co.pop(pv)
                    co, k = _lf_add((co, k), plf, c)
            if not co:
                if k != 0:
                    return None
                continue
            pv = max(co, key=lambda v: (v.gen, v.name))
            c = co.pop(pv)
            deflf = _lf_scale((co, k), Fraction(-1) / c)
            renorm: list[tuple[Var, LinForm]] = []
            for w, (lco, lk) in solved:
                lco = dict(lco)
                if pv in lco:
                    cc = lco.pop(pv)
                    lco, lk = _lf_add((lco, lk), deflf, cc)
                renorm.append((w, (lco, lk)))
            solved = renorm
            solved.append((pv, deflf))
        pivots: dict[Var, LinForm] = dict(solved)

        # substitute pivots into the inequalities
        sub_les: list[Ineq] = []
        for co, k, st in les:
            co2, k2 = dict(co), k
            for pv, plf in pivots.items():
                if pv in co2:
                    c = co2.pop(pv)
                    co2, k2 = _lf_add((co2, k2), plf, c)
            if not co2:
                if k2 > 0 or (k2 == 0 and st):
                    return None
                continue
            sub_les.append((co2, k2, st))
        if not _fm_sat(sub_les):
            return None

        new_bindings: dict[Var, Expression] = {}
        for pv, plf in pivots.items():
            b = _lf_to_binding(plf)
            if b is not None and pv not in binding:
                new_bindings[pv] = b
        # forced values from the inequality system
        ineq_vars: set[Var] = set()
        for co, _, _ in sub_les:
            ineq_vars |= set(co)
        for v in sorted(ineq_vars, key=lambda x: (x.name, x.gen)):
            if v in new_bindings or v in binding:
                continue
            lo, hi = _fm_bounds(sub_les, v)
            if (lo is not None and hi is not None and lo[0] == hi[0]
                    and not lo[1] and not hi[1]):
                new_bindings[v] = RealLit(lo[0])

        for lf in diseqs:
            co, k = lf
            co2, k2 = dict(co), k
            for pv, plf in pivots.items():
                if pv in co2:
                    c = co2.pop(pv)
                    co2, k2 = _lf_add((co2, k2), plf, c)
            if not co2 and k2 == 0:
                return None

        if not new_bindings:
            final = Subst(binding)
            residual = []
            for c in original:
                c2 = c.apply(final)
                g = eval_ground(c2)
                if g is False:
                    return None
                if g is True:
                    continue
                if c2 not in residual:
                    residual.append(c2)
            return RSolveResult(residual, final,
                                [c.apply(final) for c in delayed])
        # bindings must be idempotent: chase variable targets
        for v, t in new_bindings.items():
            binding[v] = t
        closed = Subst(binding)
        binding = {v: closed.apply(t) for v, t in binding.items()}


def eval_ground(c: Constraint) -> Optional[bool]:
    """Exact evaluation of a ground real atom; None if not ground."""
    def val(e: Expression) -> Optional[Fraction]:
        if isinstance(e, RealLit):
            return e.value
        if isinstance(e, IntLit):
            return Fraction(e.value)
        if isinstance(e, Var):
            return None
        from .terms import spine, Symbol
        head, args = spine(e)
        if isinstance(head, Symbol) and head.name in R_OPS and len(args) == 2:
            a, b = val(args[0]), val(args[1])
            if a is None or b is None:
                return None
            if head.name == "+":
                return a + b
            if head.name == "-":
                return a - b
            if head.name == "*":
                return a * b
            if b == 0:
                raise _DivZero()
            return a / b
        return None

    name = c.prim.name
    try:
        if name == EQ:
            a, b = val(c.args[0]), val(c.args[1])
            if a is None or b is None:
                return None
            return (a == b) == (c.result == TRUE)
        if name == R_LE:
            a, b = val(c.args[0]), val(c.args[1])
            if a is None or b is None:
                return None
            return (a <= b) == (c.result == TRUE)
        if name in R_OPS:
            a, b, r = val(c.args[0]), val(c.args[1]), val(c.result)
            if a is None or b is None or r is None:
                return None
            if name == "+":
                return a + b == r
            if name == "-":
                return a - b == r
            if name == "*":
                return a * b == r
            return b != 0 and a / b == r
    except _DivZero:
        return False
    return None


def is_solved(atoms: Iterable[Constraint]) -> bool:
    atoms = list(atoms)
    res = solve(atoms)
    if res is None:
        return False
    return res.atoms == atoms and not res.subst


def negate(c: Constraint) -> Constraint:
    """Negation of a (non-)strict linear inequality atom."""
    if c.prim.name != R_LE or c.result not in (TRUE, FALSE):
        raise NotRSpecific(f"can only negate inequality atoms: {c!r}")
    return Constraint(c.prim, c.args, FALSE if c.result == TRUE else TRUE)


def entails(atoms: Iterable[Constraint], c: Constraint) -> bool:
    """Entailment by refutation: the store plus the negated atom is unsat."""
    return solve(list(atoms) + [negate(c)]) is None


def bounds(atoms: Iterable[Constraint], v: Var) -> tuple[
        Optional[tuple[Fraction, bool]], Optional[tuple[Fraction, bool]]]:
    """Implied (lower, upper) bounds of v in the linear part."""
    les: list[Ineq] = []
    eqs: list[LinForm] = []
    for c in atoms:
        n = _normalize(c)
        if n.kind == "eq":
            eqs.append(n.lf)
        elif n.kind == "le":
            les.append((n.lf[0], n.lf[1], n.strict))
    for co, k in eqs:
        les.append((dict(co), k, False))
        les.append(({w: -cw for w, cw in co.items()}, -k, False))
    return _fm_bounds(les, v)
