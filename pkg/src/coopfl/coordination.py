"""Bridge generation, bidirectional constraint projection, inference of
domain-specific equality constraints, and the bridge-merging rules.

A bridge ``X #== RX`` links an integer variable to a real variable.
Projections translate a finite-domain atom into real-arithmetic atoms
(and vice versa) through the available bridges; integer bounds go over
exactly, real bounds are rounded with ceil/floor according to the
strictness and the side they appear on.  Integer division is never
projected; real division projects as multiplication.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .constraints import (Constraint, FALSE, TRUE, atom, is_extended_herbrand,
                          is_mediatorial, is_proper_fd, is_proper_r)
from .mediatorial import bridge_lookup, bridges as bridge_subset, int_equivalent
from .terms import (Expression, IntLit, Kind, RealLit, Subst, Symbol, Var,
                    VarGen)
from .typesys import BRIDGE, EQ, FD_LE, INT, R_LE, REAL

_BRIDGE_SYM = Symbol(Kind.PRIMITIVE, BRIDGE, 2)
_EQ_SYM = Symbol(Kind.PRIMITIVE, EQ, 2)
_R_LE_SYM = Symbol(Kind.PRIMITIVE, R_LE, 2)
_FD_LE_SYM = Symbol(Kind.PRIMITIVE, FD_LE, 2)

_FD_TO_R_ARITH = {"#+": "+", "#-": "-", "#*": "*"}
_R_TO_FD_ARITH = {"+": "#+", "-": "#-", "*": "#*"}


@dataclass
class ProjectionResult:
    new_bridges: list[Constraint] = field(default_factory=list)
    projected: list[Constraint] = field(default_factory=list)


def mk_bridge(left: Expression, right: Expression) -> Constraint:
    return Constraint(_BRIDGE_SYM, (left, right), TRUE)


def _real_mate_name(x: Var) -> str:
    return "R" + x.name


def _int_mate_name(rx: Var) -> str:
    if rx.name.startswith("R") and len(rx.name) > 1:
        return rx.name[1:]
    return "I" + rx.name


def _items(e: Expression) -> Optional[list[Expression]]:
    from .fd import _expr_list
    return _expr_list(e)


def _fd_var_to_r(x: Expression, b) -> Optional[Expression]:
    """t^R of a finite-domain side: exact real of an int constant, or
    the bridge mate of a bridged variable."""
    if isinstance(x, IntLit):
        return RealLit(Fraction(x.value))
    if isinstance(x, Var):
        mate = bridge_lookup(b, "left", x)
        if isinstance(mate, Var):
            return mate
        if isinstance(mate, RealLit):
            return mate
    return None


def _r_side_to_fd(x: Expression, b) -> Optional[Expression]:
    """t^FD of a real side: the integer of an integral real constant, or
    the bridge mate of a bridged variable."""
    if isinstance(x, RealLit):
        if x.value.denominator == 1:
            return IntLit(int(x.value))
        return None
    if isinstance(x, Var):
        mate = bridge_lookup(b, "right", x)
        if isinstance(mate, (Var, IntLit)):
            return mate
    return None


def bridges_fd_to_r(pi: Constraint, bridge_set,
                    gen: VarGen) -> list[Constraint]:
    """New bridges for the finite-domain variables of an atom that lack
    one; integer division creates nothing."""
    name = pi.prim.name
    b = list(bridge_set)
    out: list[Constraint] = []

    def need(x: Expression) -> None:
        if (isinstance(x, Var) and bridge_lookup(b, "left", x) is None
                and all(nb.args[0] != x for nb in out)):
            out.append(mk_bridge(x, gen.fresh(_real_mate_name(x))))

    if name == "domain" and pi.result == TRUE:
        items = _items(pi.args[0])
        for item in items or []:
            need(item)
    elif name == "belongs" and pi.result == TRUE:
        need(pi.args[0])
    elif name == FD_LE and pi.result in (TRUE, FALSE):
        need(pi.args[0])
        need(pi.args[1])
    elif name == EQ and pi.result in (TRUE, FALSE):
        t1, t2 = pi.args
        if isinstance(t1, IntLit) and isinstance(t2, Var):
            need(t2)
        elif isinstance(t2, IntLit) and isinstance(t1, Var):
            need(t1)
    elif name in _FD_TO_R_ARITH:
        need(pi.args[0])
        need(pi.args[1])
        need(pi.result)
    return out


def proj_fd_to_r(pi: Constraint, bridge_set) -> list[Constraint]:
    """Real projection of a finite-domain atom through the bridges."""
    name = pi.prim.name
    b = list(bridge_set)
    out: list[Constraint] = []
    if name == "domain" and pi.result == TRUE:
        items = _items(pi.args[0])
        lo, hi = pi.args[1], pi.args[2]
        if items is None or not isinstance(lo, IntLit) or not isinstance(hi, IntLit):
            return []
        rlo, rhi = RealLit(Fraction(lo.value)), RealLit(Fraction(hi.value))
        for item in items:
            if isinstance(item, Var):
                mate = bridge_lookup(b, "left", item)
                if mate is not None:
                    out.append(atom(_R_LE_SYM, (rlo, mate), TRUE))
                    out.append(atom(_R_LE_SYM, (mate, rhi), TRUE))
        return out
    if name == "belongs" and pi.result == TRUE:
        items = _items(pi.args[1])
        x = pi.args[0]
        if items is None or not all(isinstance(i, IntLit) for i in items) or not items:
            return []
        if isinstance(x, Var):
            mate = bridge_lookup(b, "left", x)
            if mate is not None:
                lo = RealLit(Fraction(min(i.value for i in items)))
                hi = RealLit(Fraction(max(i.value for i in items)))
                return [atom(_R_LE_SYM, (lo, mate), TRUE),
                        atom(_R_LE_SYM, (mate, hi), TRUE)]
        return []
    if name == FD_LE and pi.result in (TRUE, FALSE):
        sides = [_fd_var_to_r(x, b) for x in pi.args]
        if None in sides:
            return []
        return [atom(_R_LE_SYM, tuple(sides), pi.result)]
    if name == EQ and pi.result in (TRUE, FALSE):
        sides = [_fd_var_to_r(x, b) for x in pi.args]
        if None in sides:
            return []
        return [atom(_EQ_SYM, tuple(sides), pi.result)]
    if name in _FD_TO_R_ARITH:
        sides = [_fd_var_to_r(x, b) for x in (*pi.args, pi.result)]
        if None in sides:
            return []
        rsym = Symbol(Kind.PRIMITIVE, _FD_TO_R_ARITH[name], 2)
        return [atom(rsym, (sides[0], sides[1]), sides[2])]
    return []


def bridges_r_to_fd(pi: Constraint, bridge_set,
                    gen: VarGen) -> list[Constraint]:
    """Only an equality against an integral constant and the result of
    linear arithmetic create bridges; inequalities never do."""
    name = pi.prim.name
    b = list(bridge_set)
    out: list[Constraint] = []
    if name == EQ and pi.result == TRUE:
        t1, t2 = pi.args
        for const, var in ((t1, t2), (t2, t1)):
            if (isinstance(const, RealLit) and const.value.denominator == 1
                    and isinstance(var, Var)
                    and bridge_lookup(b, "right", var) is None):
                out.append(mk_bridge(gen.fresh(_int_mate_name(var)), var))
                return out
    if name in _R_TO_FD_ARITH:
        t3 = pi.result
        if (isinstance(t3, Var) and bridge_lookup(b, "right", t3) is None
                and all(_r_side_to_fd(t, b) is not None for t in pi.args)):
            out.append(mk_bridge(gen.fresh(_int_mate_name(t3)), t3))
    return out


def proj_r_to_fd(pi: Constraint, bridge_set) -> list[Constraint]:
    """Finite-domain projection of a real atom: bounds are rounded by
    ceil/floor according to side and strictness; division projects as a
    multiplication."""
    name = pi.prim.name
    b = list(bridge_set)
    if name == R_LE and pi.result in (TRUE, FALSE):
        if pi.result == TRUE:
            lhs, rhs, strict = pi.args[0], pi.args[1], False
        else:
            lhs, rhs, strict = pi.args[1], pi.args[0], True
        # lhs (< | <=) rhs
        fl: Optional[Expression]
        if isinstance(lhs, RealLit):
            q = lhs.value
            fl = IntLit(math.floor(q) if strict else math.ceil(q))
        else:
            fl = _r_side_to_fd(lhs, b) if isinstance(lhs, Var) else None
            if isinstance(lhs, Var) and not isinstance(fl, (Var, IntLit)):
                fl = None
        if isinstance(rhs, RealLit):
            q = rhs.value
            fr: Optional[Expression] = IntLit(math.ceil(q) if strict else math.floor(q))
        else:
            fr = _r_side_to_fd(rhs, b) if isinstance(rhs, Var) else None
        if fl is None or fr is None:
            return []
        if isinstance(lhs, RealLit) and isinstance(rhs, RealLit):
            return []
        if strict:
            return [atom(_FD_LE_SYM, (fr, fl), FALSE)]  # fl #< fr
        return [atom(_FD_LE_SYM, (fl, fr), TRUE)]
    if name == EQ and pi.result in (TRUE, FALSE):
        sides = [_r_side_to_fd(x, b) for x in pi.args]
        if None in sides:
            return []
        return [atom(_EQ_SYM, tuple(sides), pi.result)]
    if name in _R_TO_FD_ARITH:
        sides = [_r_side_to_fd(x, b) for x in (*pi.args, pi.result)]
        if None in sides:
            return []
        fdsym = Symbol(Kind.PRIMITIVE, _R_TO_FD_ARITH[name], 2)
        return [atom(fdsym, (sides[0], sides[1]), sides[2])]
    if name == "/":
        sides = [_r_side_to_fd(x, b) for x in (*pi.args, pi.result)]
        if None in sides:
            return []
        # t1 / t2 = t3 becomes t2 #* t3 = t1
        return [atom(Symbol(Kind.PRIMITIVE, "#*", 2),
                     (sides[1], sides[2]), sides[0])]
    return []


def bridges_and_projection(pi: Constraint, bridge_set, direction: str,
                           gen: VarGen) -> ProjectionResult:
    """Bridge creation followed by projection against the enlarged set."""
    if direction == "fd_to_r":
        nb = bridges_fd_to_r(pi, bridge_set, gen)
        proj = proj_fd_to_r(pi, list(bridge_set) + nb)
    else:
        nb = bridges_r_to_fd(pi, bridge_set, gen)
        proj = proj_r_to_fd(pi, list(bridge_set) + nb)
    return ProjectionResult(nb, proj)


def infer_specific(m_atoms, pi: Constraint,
                   var_types: Optional[dict] = None) -> Optional[str]:
    """Classify an equality/disequality atom as finite-domain or real
    specific using constants, bridge occurrences and known types."""
    if pi.prim.name != EQ or pi.result not in (TRUE, FALSE):
        return None
    t1, t2 = pi.args
    if not all(isinstance(t, (Var, IntLit, RealLit)) for t in (t1, t2)):
        return None
    var_types = var_types or {}
    lefts = {a.args[0] for a in m_atoms if a.prim.name == BRIDGE}
    rights = {a.args[1] for a in m_atoms if a.prim.name == BRIDGE}
    for t in (t1, t2):
        if isinstance(t, IntLit):
            return "fd"
        if isinstance(t, Var) and (t in lefts or var_types.get(t) == INT):
            return "fd"
    for t in (t1, t2):
        if isinstance(t, RealLit):
            return "r"
        if isinstance(t, Var) and (t in rights or var_types.get(t) == REAL):
            return "r"
    return None


def ie_step(m_atoms) -> Optional[tuple[list[Constraint], list[Constraint],
                                       list[Constraint]]]:
    """Merge the first pair of bridges sharing a variable side; returns
    (new mediatorial atoms, emitted FD-store atoms, emitted R-store
    atoms), or None when no pair exists."""
    atoms = list(m_atoms)
    for i, b1 in enumerate(atoms):
        if b1.prim.name != BRIDGE or b1.result != TRUE:
            continue
        for j in range(i + 1, len(atoms)):
            b2 = atoms[j]
            if b2.prim.name != BRIDGE or b2.result != TRUE:
                continue
            x1, r1 = b1.args
            x2, r2 = b2.args
            if isinstance(r1, Var) and r1 == r2 and x1 != x2:
                rest = atoms[:j] + atoms[j + 1:]
                return rest, [atom(_EQ_SYM, (x1, x2), TRUE)], []
            if isinstance(x1, Var) and x1 == x2 and r1 != r2:
                rest = atoms[:j] + atoms[j + 1:]
                return rest, [], [atom(_EQ_SYM, (r1, r2), TRUE)]
    return None


def id_step(m_atoms, eps: Fraction = Fraction(0)) -> Optional[tuple[
        list[Constraint], list[Constraint], list[Constraint]]]:
    """Turn the first decidable antibridge into a Herbrand disequality
    for the proper store."""
    atoms = list(m_atoms)
    for i, c in enumerate(atoms):
        if c.prim.name != BRIDGE or c.result != FALSE:
            continue
        t, s = c.args
        rest = atoms[:i] + atoms[i + 1:]
        if isinstance(t, Var) and isinstance(s, RealLit):
            u = int_equivalent(s.value, eps)
            if u is not None:
                return rest, [atom(_EQ_SYM, (t, IntLit(u)), FALSE)], []
        if isinstance(t, IntLit) and isinstance(s, Var):
            return rest, [], [atom(_EQ_SYM, (s, RealLit(Fraction(t.value))), FALSE)]
    return None
