"""Solver for bridge and antibridge constraints.

Atoms have the form ``t #== s ->! b`` with an integer side, a real side
and a boolean result.  A variable result is split into the bridge and
antibridge instances (true branch first); ground sides are checked
against the int/real equivalence, binding the variable side when the
other side is known.  Equivalence is exact by default; a nonzero
tolerance ``eps`` accepts ``|s - round(s)| <= eps``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional

from .constraints import Constraint, FALSE, Store, TRUE, store
from .terms import IntLit, RealLit, Subst, Var
from .typesys import BRIDGE


class NotMSpecific(Exception):
    pass


def _check_shape(c: Constraint) -> None:
    if c.prim.name != BRIDGE:
        raise NotMSpecific(f"not a mediatorial atom: {c!r}")
    t, s = c.args
    if not isinstance(t, (Var, IntLit)) or not isinstance(s, (Var, RealLit)):
        raise NotMSpecific(f"mediatorial atom with bad sides: {c!r}")
    if not (isinstance(c.result, Var) or c.result in (TRUE, FALSE)):
        raise NotMSpecific(f"mediatorial atom with bad result: {c!r}")


def int_equivalent(s: Fraction, eps: Fraction) -> Optional[int]:
    """The integer equivalent of a real under the tolerance, if any."""
    nearest = round(s)  # round-half-even is fine: eps >= 1/2 accepts both
    if abs(s - nearest) <= eps:
        return int(nearest)
    return None


def _step(st: Store, eps: Fraction) -> Optional[list[tuple[str, Optional[Store]]]]:
    """Successors of the leftmost reducible atom, or None if solved."""
    for idx, c in enumerate(st.atoms):
        t, s = c.args
        r = c.result
        rest = st.atoms[:idx] + st.atoms[idx + 1:]
        if isinstance(r, Var):
            out = []
            for rule, val in (("M1", TRUE), ("M2", FALSE)):
                sub = Subst({r: val})
                new = Constraint(c.prim, c.args, val)
                atoms = (new,) + tuple(a.apply(sub) for a in rest)
                out.append((rule, Store(atoms, st.subst.compose(sub))))
            return out
        if r == TRUE:
            if isinstance(t, Var) and isinstance(s, RealLit):
                u = int_equivalent(s.value, eps)
                if u is None:
                    return [("M4", None)]
                sub = Subst({t: IntLit(u)})
                atoms = tuple(a.apply(sub) for a in rest)
                return [("M3", Store(atoms, st.subst.compose(sub)))]
            if isinstance(t, IntLit) and isinstance(s, Var):
                sub = Subst({s: RealLit(Fraction(t.value))})
                atoms = tuple(a.apply(sub) for a in rest)
                return [("M5", Store(atoms, st.subst.compose(sub)))]
            if isinstance(t, IntLit) and isinstance(s, RealLit):
                u = int_equivalent(s.value, eps)
                if u == t.value:
                    return [("M6", Store(rest, st.subst))]
                return [("M7", None)]
        if r == FALSE:
            if isinstance(t, IntLit) and isinstance(s, RealLit):
                u = int_equivalent(s.value, eps)
                if u == t.value:
                    return [("M9", None)]
                return [("M8", Store(rest, st.subst))]
    return None


def is_solved(atoms, eps: Fraction = Fraction(0)) -> bool:
    return _step(store(atoms), eps) is None


def solve(atoms, eps: Fraction = Fraction(0)) -> list[Store]:
    """Disjunction of irreducible stores; empty list means failure.
    Branches from variable-result splits keep true before false."""
    for c in atoms:
        _check_shape(c)
    results: list[Store] = []
    stack: list[Store] = [store(atoms)]
    while stack:
        st = stack.pop(0)
        steps = _step(st, eps)
        if steps is None:
            if st not in results:
                results.append(st)
            continue
        for _, nxt in steps:
            if nxt is not None:
                stack.append(nxt)
    return results


def bridges(atoms) -> list[Constraint]:
    """The bridge subset: atoms t #== s with result true."""
    return [c for c in atoms if c.prim.name == BRIDGE and c.result == TRUE]


def bridge_lookup(bridge_set, side: str, v: Var):
    """Mate pattern of v across #==, looking on the given side."""
    i, j = (0, 1) if side == "left" else (1, 0)
    for b in bridge_set:
        if b.args[i] == v:
            return b.args[j]
    return None
