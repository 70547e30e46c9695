"""Atomic constraints and constraint stores.

An atomic constraint ``p args ->! result`` asserts that the primitive
call returns a total value matching ``result``.  Relational sugar
(`/=`, `<`, `#>=`, `#/==`, ...) is resolved onto the canonical
primitives ``==``, ``<=``, ``#<=``, ``#==`` at construction time and
reintroduced when printing.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

from .pretty import pp
from .terms import (App, Expression, IntLit, RealLit, Subst, Symbol, Var,
                    free_vars, is_pattern, is_total, spine)
from .typesys import BRIDGE, EQ, FD_LE, FD_OPS, R_LE, R_OPS

TRUE = Symbol("constructor", "true", 0)
FALSE = Symbol("constructor", "false", 0)

_PROPER_FD = set(FD_OPS) | {FD_LE, "domain", "belongs", "labeling"}
_PROPER_R = set(R_OPS) | {R_LE}

_BOOL_RESULT = {EQ, BRIDGE, R_LE, FD_LE, "domain", "belongs", "labeling"}


@dataclass(frozen=True)
class Constraint:
    prim: Symbol
    args: tuple[Expression, ...]
    result: Expression

    def __post_init__(self) -> None:
        if not is_total(self.result):
            raise ValueError("constraint result pattern must be total")

    def __repr__(self) -> str:
        name = self.prim.name
        a = self.args
        rel = {EQ: ("==", "/="), BRIDGE: ("#==", "#/=="),
               R_LE: ("<=", ">"), FD_LE: ("#<=", "#>")}
        if name in rel and len(a) == 2:
            pos, neg = rel[name]
            if self.result == TRUE:
                return f"{pp(a[0], 2)} {pos} {pp(a[1], 2)}"
            if self.result == FALSE:
                return f"{pp(a[0], 2)} {neg} {pp(a[1], 2)}"
            return f"({pp(a[0], 2)} {pos} {pp(a[1], 2)}) ->! {pp(self.result, 5)}"
        if name in ("domain", "belongs", "labeling"):
            call = " ".join([name] + [pp(x, 5) for x in a])
            if self.result == TRUE:
                return call
            return f"{call} ->! {pp(self.result, 5)}"
        if len(a) == 2:  # arithmetic infix
            return f"{pp(a[0], 3)} {name} {pp(a[1], 4)} ->! {pp(self.result, 5)}"
        return " ".join([name] + [pp(x, 5) for x in a]) + f" ->! {pp(self.result, 5)}"

    def variables(self) -> set[Var]:
        out = free_vars(self.result)
        for e in self.args:
            out |= free_vars(e)
        return out

    def apply(self, s: Subst) -> "Constraint":
        if not s:
            return self
        return Constraint(self.prim, tuple(s.apply(e) for e in self.args),
                          s.apply(self.result))

    def is_primitive(self) -> bool:
        return all(is_pattern(e) for e in self.args)


def atom(prim: Symbol, args: Sequence[Expression],
         result: Expression) -> Constraint:
    return Constraint(prim, tuple(args), result)


def strict_eq(a: Expression, b: Expression, result: Expression = TRUE) -> Constraint:
    return Constraint(Symbol("primitive", EQ, 2), (a, b), result)


def is_extended_herbrand(c: Constraint) -> bool:
    return c.prim.name == EQ


def is_mediatorial(c: Constraint) -> bool:
    return c.prim.name == BRIDGE


def is_proper_fd(c: Constraint) -> bool:
    return c.prim.name in _PROPER_FD


def is_proper_r(c: Constraint) -> bool:
    return c.prim.name in _PROPER_R


def odvar(c: Constraint) -> set[Var]:
    """Obviously demanded variables of one atomic primitive constraint."""
    if is_extended_herbrand(c):
        t1, t2 = c.args
        r = c.result
        if isinstance(r, Var):
            return {r}
        both_vars = isinstance(t1, Var) and isinstance(t2, Var)
        if r == TRUE:
            if both_vars:
                return {t1, t2}
        elif r == FALSE:
            if both_vars and t1 != t2:
                return {t1, t2}
        if isinstance(t1, Var) and not isinstance(t2, Var):
            return {t1}
        if isinstance(t2, Var) and not isinstance(t1, Var):
            return {t2}
        return set()
    # every variable of a proper FD/R/M primitive atom is demanded
    return c.variables()


def odvar_set(cs: Iterable[Constraint]) -> set[Var]:
    out: set[Var] = set()
    for c in cs:
        out |= odvar(c)
    return out


def cvar_set(cs: Iterable[Constraint]) -> set[Var]:
    demanded = odvar_set(cs)
    out: set[Var] = set()
    for c in cs:
        out |= c.variables()
    return out - demanded


@dataclass(frozen=True)
class Store:
    """Constraint store: atoms plus an idempotent answer substitution
    whose domain is disjoint from the atoms' variables."""

    atoms: tuple[Constraint, ...] = ()
    subst: Subst = field(default_factory=Subst)

    def __repr__(self) -> str:
        inner = ", ".join(repr(a) for a in self.atoms) or "<>"
        return f"{inner} [] {self.subst!r}"

    def variables(self) -> set[Var]:
        out: set[Var] = set()
        for a in self.atoms:
            out |= a.variables()
        return out

    def all_variables(self) -> set[Var]:
        return self.variables() | self.subst.domain() | self.subst.vran()

    def add(self, new: Iterable[Constraint]) -> "Store":
        extra = [c for c in new if c not in self.atoms]
        if not extra:
            return self
        return replace(self, atoms=self.atoms + tuple(extra))

    def apply(self, s: Subst, owner: bool = False) -> "Store":
        """Propagate bindings: rewrite the atoms and either compose the
        substitution fully (owner store) or over its own domain only."""
        if not s:
            return self
        atoms = _dedup(a.apply(s) for a in self.atoms)
        sub = self.subst.compose(s) if owner else self.subst.star(s)
        return Store(atoms, sub)

    def check_invariant(self) -> None:
        assert not (self.subst.domain() & self.variables()), \
            f"store substitution overlaps constraints: {self!r}"
        assert self.subst.is_idempotent(), f"non-idempotent store subst: {self!r}"


def _dedup(atoms: Iterable[Constraint]) -> tuple[Constraint, ...]:
    seen: list[Constraint] = []
    for a in atoms:
        if a not in seen:
            seen.append(a)
    return tuple(seen)


def store(atoms: Iterable[Constraint] = (),
          subst: Optional[Subst] = None) -> Store:
    return Store(_dedup(atoms), subst or Subst())


FAIL = "FAIL"
