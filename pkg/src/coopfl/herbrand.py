"""Extensible glass-box Herbrand solver.

Stores over strict equality/disequality atoms are reduced by a store
transformation system with thirteen rules (H1..H13), parameterized by a
set ``chi`` of critical variables the solver must discriminate on.
Rules H3/H7 decompose under a shared rigid head (opaque heads are
flagged, not forbidden), H5 propagates bindings and leaves totality
atoms ``Y == Y`` behind, H11/H12 split a disequality against a
constructor pattern containing critical variables, and H13 gives up
(incomplete, flagged) when that pattern is rooted by a non-constructor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from .constraints import (Constraint, FALSE, Store, TRUE, atom, odvar_set,
                          store)
from .terms import (App, Expression, IntLit, Kind, RealLit, Subst, Symbol,
                    Var, VarGen, free_vars, mk_app, size, spine)
from .typesys import EQ, Signature, uncurry
from . import typecheck

_EQSYM = Symbol(Kind.PRIMITIVE, EQ, 2)


@dataclass
class HOutcome:
    """Disjunction of solved stores plus invocation-level safety flags."""
    alternatives: list[Store]
    opaque_used: bool = False
    h13_used: bool = False

    def is_safe(self) -> bool:
        return not (self.opaque_used or self.h13_used)


def _rigid_parts(e: Expression) -> Optional[tuple[Expression, list[Expression]]]:
    """(head, args) when e is rigid: a symbol application or a literal
    (literals act as nullary constructor heads)."""
    head, args = spine(e)
    if isinstance(head, (Symbol, IntLit, RealLit)):
        return head, args
    return None


def _head_is_constructorlike(head: Expression) -> bool:
    return (isinstance(head, (IntLit, RealLit))
            or (isinstance(head, Symbol) and head.kind == Kind.CONSTRUCTOR))


def _full_constructor(head: Expression, nargs: int) -> bool:
    if isinstance(head, (IntLit, RealLit)):
        return nargs == 0
    return (isinstance(head, Symbol) and head.kind == Kind.CONSTRUCTOR
            and head.arity == nargs)


def _eq(a: Expression, b: Expression, result: Expression = TRUE) -> Constraint:
    return Constraint(_EQSYM, (a, b), result)


def _tot(t: Expression) -> list[Constraint]:
    return [_eq(v, v) for v in sorted(free_vars(t), key=lambda v: (v.name, v.gen))]


def _opaque_head(sig: Signature, head: Expression, m: int) -> bool:
    if not isinstance(head, Symbol) or head.kind == Kind.CONSTRUCTOR:
        return False
    if head.name not in sig.types:
        return False
    try:
        return typecheck.is_opaque(sig, head.name, m)
    except ValueError:
        return False


@dataclass(frozen=True)
class _Step:
    rule: str
    result: Optional[Store]  # None encodes a failing step
    opaque: bool = False
    h13: bool = False


def _bind(st: Store, idx: int, sub: Subst, new_atoms: list[Constraint]) -> Store:
    rest = st.atoms[:idx] + st.atoms[idx + 1:]
    atoms = tuple(new_atoms) + tuple(a.apply(sub) for a in rest)
    out: list[Constraint] = []
    for a in atoms:
        if a not in out:
            out.append(a)
    return Store(tuple(out), st.subst.compose(sub))


def _replace(st: Store, idx: int, new_atoms: list[Constraint]) -> Store:
    rest = st.atoms[:idx] + st.atoms[idx + 1:]
    atoms = tuple(new_atoms) + rest
    out: list[Constraint] = []
    for a in atoms:
        if a not in out:
            out.append(a)
    return Store(tuple(out), st.subst)


def atom_steps(st: Store, idx: int, chi: frozenset[Var], sig: Signature,
               gen: VarGen) -> list[_Step]:
    """All one-step successors taking the idx-th atom as selected."""
    c = st.atoms[idx]
    if c.prim.name != EQ:
        return []
    t, s = c.args
    r = c.result
    steps: list[_Step] = []

    if isinstance(r, Var):
        for rule, val in (("H1", TRUE), ("H2", FALSE)):
            sub = Subst({r: val})
            new = _eq(sub.apply(t), sub.apply(s), val)
            steps.append(_Step(rule, _bind(st, idx, sub, [new])))
        return steps

    if r == TRUE:
        tp, sp = _rigid_parts(t), _rigid_parts(s)
        if tp and sp and tp[0] == sp[0] and len(tp[1]) == len(sp[1]):
            new = [_eq(a, b) for a, b in zip(tp[1], sp[1])]
            steps.append(_Step("H3", _replace(st, idx, new),
                               opaque=_opaque_head(sig, tp[0], len(tp[1]))))
        if not isinstance(t, Var) and isinstance(s, Var):
            steps.append(_Step("H4", _replace(st, idx, [_eq(s, t)])))
        if isinstance(t, Var):
            if t not in chi and t != s and t not in free_vars(s):
                sub = Subst({t: s})
                steps.append(_Step("H5", _bind(st, idx, sub, _tot(s))))
            if t != s and t in free_vars(s):
                steps.append(_Step("H6", None))
        return steps

    assert r == FALSE
    tp, sp = _rigid_parts(t), _rigid_parts(s)
    if tp and sp:
        if tp[0] == sp[0] and len(tp[1]) == len(sp[1]):
            for i in range(len(tp[1])):
                steps.append(_Step("H7",
                                   _replace(st, idx, [_eq(tp[1][i], sp[1][i], FALSE)]),
                                   opaque=_opaque_head(sig, tp[0], len(tp[1]))))
        else:
            steps.append(_Step("H8", _replace(st, idx, [])))
    if t == s and (isinstance(t, (Var, Symbol, IntLit, RealLit))):
        steps.append(_Step("H9", None))
    if not isinstance(t, Var) and isinstance(s, Var):
        steps.append(_Step("H10", _replace(st, idx, [_eq(s, t, FALSE)])))
    if isinstance(t, Var) and t not in chi and sp is not None:
        head, args = sp
        if chi & free_vars(s):
            if _full_constructor(head, len(args)):
                assert isinstance(head, Symbol)
                fresh = [gen.fresh("Z") for _ in args]
                sub = Subst({t: mk_app(head, fresh)})
                for i, (z, ti) in enumerate(zip(fresh, args)):
                    steps.append(_Step("H11",
                                       _bind(st, idx, sub,
                                             [_eq(z, sub.apply(ti), FALSE)])))
                for d in sig.siblings(head.name):
                    zs = [gen.fresh("Z") for _ in range(d.arity)]
                    sub_d = Subst({t: mk_app(d, zs)})
                    steps.append(_Step("H12", _bind(st, idx, sub_d, [])))
            else:
                steps.append(_Step("H13", None, h13=True))
    return steps


def select(st: Store, chi: frozenset[Var], sig: Signature,
           gen: VarGen) -> tuple[int, list[_Step]]:
    """Leftmost atom with an applicable rule; (-1, []) if solved."""
    for idx in range(len(st.atoms)):
        steps = atom_steps(st, idx, chi, sig, gen)
        if steps:
            return idx, steps
    return -1, []


def h_step(st: Store, chi: frozenset[Var], sig: Signature,
           gen: Optional[VarGen] = None) -> list[Optional[Store]]:
    """One-step successors of the leftmost reducible atom; None in the
    output list encodes a failing step."""
    _, steps = select(st, chi, sig, gen or VarGen())
    return [s.result for s in steps]


def is_solved(st: Store, chi: frozenset[Var], sig: Signature) -> bool:
    return select(st, chi, sig, VarGen())[0] == -1


def solve(atoms, chi, sig: Signature,
          gen: Optional[VarGen] = None) -> HOutcome:
    """All irreducible stores reachable from ``atoms [] e``; the outcome
    is flagged unsafe if any explored step used an opaque decomposition
    or the lossy H13 failure."""
    gen = gen or VarGen()
    chi = frozenset(chi)
    out = HOutcome([])
    stack: list[Store] = [store(atoms)]
    while stack:
        st = stack.pop()
        _, steps = select(st, chi, sig, gen)
        if not steps:
            if st not in out.alternatives:
                out.alternatives.append(st)
            continue
        for s in reversed(steps):
            out.opaque_used = out.opaque_used or s.opaque
            out.h13_used = out.h13_used or s.h13
            if s.result is not None:
                stack.append(s.result)
    return out


def measure(st: Store, chi: frozenset[Var], sig: Signature) -> tuple[int, int, int, int, int]:
    """Lexicographic termination measure (P1..P5) of a store."""
    gen = VarGen()
    p1 = sum(1 for i in range(len(st.atoms))
             if atom_steps(st, i, chi, sig, gen))
    p2 = 0
    p3 = 0
    for c in st.atoms:
        for e in (*c.args, c.result):
            p2 += sum(d for v, d in _var_depths(e) if v in chi)
            p3 += size(e)
    demanded = odvar_set(st.atoms)
    p4 = 0
    for c in st.atoms:
        solved_tot = (c.prim.name == EQ and c.result == TRUE
                      and isinstance(c.args[0], Var) and c.args[0] == c.args[1])
        for e in (*c.args, c.result):
            occ = sum(1 for v, _ in _var_depths(e) if v in demanded)
            if not solved_tot:
                p4 += occ
    p5 = sum(1 for c in st.atoms
             if c.prim.name == EQ and c.result in (TRUE, FALSE)
             and isinstance(c.args[1], Var) and not isinstance(c.args[0], Var))
    return (p1, p2, p3, p4, p5)


def _var_depths(e: Expression, depth: int = 0) -> Iterator[tuple[Var, int]]:
    if isinstance(e, Var):
        yield e, depth
        return
    if isinstance(e, App):
        _, args = spine(e)
        for a in args:
            yield from _var_depths(a, depth + 1)
