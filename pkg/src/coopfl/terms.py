"""Applicative term language: expressions, patterns, substitutions.

Expressions are immutable trees built from variables, base literals
(exact ints and rationals), symbols (constructors, defined functions,
primitives) and left-nested applications.  ``BOTTOM`` denotes the
undefined value and is only ever built by semantic test oracles, never
by the parser.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Union


class Kind:
    CONSTRUCTOR = "constructor"
    DEFINED = "defined"
    PRIMITIVE = "primitive"


@dataclass(frozen=True)
class Var:
    name: str
    gen: int = 0

    def __repr__(self) -> str:
        return self.name if self.gen == 0 else f"{self.name}_{self.gen}"


@dataclass(frozen=True)
class IntLit:
    value: int

    def __repr__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class RealLit:
    value: Fraction

    def __repr__(self) -> str:
        return format_real(self.value)


@dataclass(frozen=True)
class Symbol:
    kind: str
    name: str
    arity: int

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class App:
    fun: "Expression"
    arg: "Expression"


class _Bottom:
    _instance: Optional["_Bottom"] = None

    def __new__(cls) -> "_Bottom":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "_|_"


BOTTOM = _Bottom()

Expression = Union[Var, IntLit, RealLit, Symbol, App, _Bottom]


def format_real(q: Fraction) -> str:
    """Render an exact rational the way real literals are written."""
    if q.denominator == 1:
        return f"{q.numerator}.0"
    scaled, d = q.numerator, q.denominator
    # decimal expansion exists iff the denominator is 2^a * 5^b
    e2 = e5 = 0
    while d % 2 == 0:
        d //= 2
        e2 += 1
    while d % 5 == 0:
        d //= 5
        e5 += 1
    if d == 1:
        digits = max(e2, e5)
        scaled = q.numerator * 10**digits // q.denominator
        text = str(abs(scaled)).rjust(digits + 1, "0")
        sign = "-" if scaled < 0 else ""
        return f"{sign}{text[:-digits]}.{text[-digits:]}"
    return f"({q.numerator}/{q.denominator})"


def real(x: Union[int, str, Fraction]) -> RealLit:
    return RealLit(Fraction(x))


def mk_app(head: Expression, args: Iterable[Expression]) -> Expression:
    e = head
    for a in args:
        e = App(e, a)
    return e


def spine(e: Expression) -> tuple[Expression, list[Expression]]:
    """Flatten nested applications into (head, [args])."""
    args: list[Expression] = []
    while isinstance(e, App):
        args.append(e.arg)
        e = e.fun
    args.reverse()
    return e, args


def subterms(e: Expression) -> Iterator[Expression]:
    stack = [e]
    while stack:
        t = stack.pop()
        yield t
        if isinstance(t, App):
            stack.append(t.fun)
            stack.append(t.arg)


def free_vars(e: Expression) -> set[Var]:
    return {t for t in subterms(e) if isinstance(t, Var)}


def is_ground(e: Expression) -> bool:
    return not any(isinstance(t, Var) for t in subterms(e))


def is_total(e: Expression) -> bool:
    return not any(t is BOTTOM for t in subterms(e))


def is_linear(e: Expression) -> bool:
    seen: set[Var] = set()
    for t in subterms(e):
        if isinstance(t, Var):
            if t in seen:
                return False
            seen.add(t)
    return True


def size(e: Expression) -> int:
    return sum(1 for _ in subterms(e))


def depth(e: Expression) -> int:
    if isinstance(e, App):
        _, args = spine(e)
        return 1 + max(depth(a) for a in args)
    return 0


def is_pattern(e: Expression) -> bool:
    """Check the pattern grammar: constructors may be fully applied,
    defined/primitive symbols only partially."""
    if e is BOTTOM or isinstance(e, (Var, IntLit, RealLit)):
        return True
    head, args = spine(e)
    if not isinstance(head, Symbol):
        return False
    if head.kind == Kind.CONSTRUCTOR:
        if len(args) > head.arity:
            return False
    else:
        if len(args) >= head.arity:
            return False
    return all(is_pattern(a) for a in args)


def is_flexible(e: Expression) -> bool:
    head, _ = spine(e)
    return isinstance(head, Var)


def is_passive(e: Expression) -> bool:
    """Rigid expressions whose outermost shape is already a pattern."""
    head, args = spine(e)
    if not isinstance(head, Symbol):
        return False
    if head.kind == Kind.CONSTRUCTOR:
        return len(args) <= head.arity
    return len(args) < head.arity


def is_active(e: Expression) -> bool:
    head, args = spine(e)
    if isinstance(head, Symbol) and head.kind != Kind.CONSTRUCTOR:
        return len(args) >= head.arity
    return False


def rigid_head(e: Expression) -> Optional[Expression]:
    """Head symbol or literal of a rigid expression, else None."""
    head, _ = spine(e)
    if isinstance(head, (Symbol, IntLit, RealLit)):
        return head
    return None


def info_leq(e1: Expression, e2: Expression) -> bool:
    """Information ordering: BOTTOM below everything, applications
    compared componentwise, everything else by identity."""
    if e1 is BOTTOM:
        return True
    if isinstance(e1, App) and isinstance(e2, App):
        return info_leq(e1.fun, e2.fun) and info_leq(e1.arg, e2.arg)
    return e1 == e2


def lub(e1: Expression, e2: Expression) -> Optional[Expression]:
    """Least upper bound in the information ordering, or None."""
    if e1 is BOTTOM:
        return e2
    if e2 is BOTTOM:
        return e1
    if isinstance(e1, App) and isinstance(e2, App):
        f = lub(e1.fun, e2.fun)
        a = lub(e1.arg, e2.arg)
        if f is None or a is None:
            return None
        return App(f, a)
    return e1 if e1 == e2 else None


class Subst:
    """Finite map from variables to patterns, applied structurally.

    Instances are immutable; all operations return new substitutions.
    """

    __slots__ = ("mapping",)

    def __init__(self, mapping: Optional[dict[Var, Expression]] = None):
        object.__setattr__(self, "mapping", dict(mapping) if mapping else {})

    def __bool__(self) -> bool:
        return bool(self.mapping)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Subst) and self.mapping == other.mapping

    def __repr__(self) -> str:
        from .pretty import pp
        inner = ", ".join(f"{v!r} -> {pp(t)}" for v, t in sorted(
            self.mapping.items(), key=lambda kv: (kv[0].name, kv[0].gen)))
        return "{" + inner + "}"

    def lookup(self, v: Var) -> Optional[Expression]:
        return self.mapping.get(v)

    def domain(self) -> set[Var]:
        return set(self.mapping)

    def vran(self) -> set[Var]:
        out: set[Var] = set()
        for t in self.mapping.values():
            out |= free_vars(t)
        return out

    def apply(self, e: Expression) -> Expression:
        if not self.mapping:
            return e
        return self._apply(e)

    def _apply(self, e: Expression) -> Expression:
        if isinstance(e, Var):
            return self.mapping.get(e, e)
        if isinstance(e, App):
            f = self._apply(e.fun)
            a = self._apply(e.arg)
            if f is e.fun and a is e.arg:
                return e
            return App(f, a)
        return e

    def bind(self, v: Var, t: Expression) -> "Subst":
        m = dict(self.mapping)
        m[v] = t
        return Subst(m)

    def compose(self, other: "Subst") -> "Subst":
        """sigma.compose(theta) applies as e -> (e sigma) theta."""
        m = {v: other.apply(t) for v, t in self.mapping.items()}
        for v, t in other.mapping.items():
            if v not in m:
                m[v] = t
        return Subst(m)

    def star(self, other: "Subst") -> "Subst":
        """Composition restricted to this substitution's domain."""
        return Subst({v: other.apply(t) for v, t in self.mapping.items()})

    def restrict(self, vs: Iterable[Var]) -> "Subst":
        keep = set(vs)
        return Subst({v: t for v, t in self.mapping.items() if v in keep})

    def is_idempotent(self) -> bool:
        return all(self.apply(t) == t for t in self.mapping.values())


EMPTY_SUBST = Subst()


class VarGen:
    """Fresh-variable supply; generation numbers are globally unique
    within one computation."""

    def __init__(self, start: int = 1):
        self._counter = itertools.count(start)

    def fresh(self, base: str = "V") -> Var:
        return Var(base, next(self._counter))

    def rename(self, vs: Iterable[Var]) -> Subst:
        return Subst({v: self.fresh(v.name) for v in vs})
