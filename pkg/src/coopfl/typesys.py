"""Type grammar and signatures.

A signature records every symbol's principal type, the datatype each
constructor belongs to (needed to enumerate sibling constructors), and
type aliases.  The builtin signature carries booleans, lists, tuples,
the numeric primitives of the four cooperating domains and the labeling
strategy datatype.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .terms import Kind, Symbol


@dataclass(frozen=True)
class TVar:
    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class TBase:
    name: str  # "int" | "real"

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class TCon:
    name: str
    args: tuple["Type", ...] = ()

    def __repr__(self) -> str:
        if self.name == "list" and len(self.args) == 1:
            return f"[{self.args[0]!r}]"
        if self.name.startswith("tup_"):
            return "(" + ", ".join(repr(a) for a in self.args) + ")"
        if not self.args:
            return self.name
        return self.name + " " + " ".join(
            f"({a!r})" if isinstance(a, (TCon, TFun)) and _needs_parens(a) else repr(a)
            for a in self.args)


@dataclass(frozen=True)
class TFun:
    arg: "Type"
    res: "Type"

    def __repr__(self) -> str:
        left = repr(self.arg)
        if isinstance(self.arg, TFun):
            left = f"({left})"
        return f"{left} -> {self.res!r}"


Type = Union[TVar, TBase, TCon, TFun]

INT = TBase("int")
REAL = TBase("real")
BOOL = TCon("bool")


def _needs_parens(t: Type) -> bool:
    return (isinstance(t, TCon) and bool(t.args) and t.name != "list"
            and not t.name.startswith("tup_")) or isinstance(t, TFun)


def tfun(*ts: Type) -> Type:
    out = ts[-1]
    for t in reversed(ts[:-1]):
        out = TFun(t, out)
    return out


def tlist(t: Type) -> Type:
    return TCon("list", (t,))


def ttup(*ts: Type) -> Type:
    return TCon(f"tup_{len(ts)}", tuple(ts))


def tvars(t: Type) -> set[TVar]:
    if isinstance(t, TVar):
        return {t}
    if isinstance(t, TFun):
        return tvars(t.arg) | tvars(t.res)
    if isinstance(t, TCon):
        out: set[TVar] = set()
        for a in t.args:
            out |= tvars(a)
        return out
    return set()


def uncurry(t: Type, n: int) -> tuple[list[Type], Type]:
    """Split the first n arrows off a type."""
    args: list[Type] = []
    for _ in range(n):
        if not isinstance(t, TFun):
            raise ValueError(f"type has fewer than {n} arguments: {t!r}")
        args.append(t.arg)
        t = t.res
    return args, t


def is_datatype(t: Type) -> bool:
    if isinstance(t, TFun):
        return False
    if isinstance(t, TCon):
        return all(is_datatype(a) for a in t.args)
    return True


_fresh_tv = itertools.count(1)


def fresh_tvar() -> TVar:
    return TVar(f"t{next(_fresh_tv)}")


def instantiate(t: Type) -> Type:
    """Replace the type variables of a principal type by fresh ones."""
    ren = {v: fresh_tvar() for v in tvars(t)}

    def go(t: Type) -> Type:
        if isinstance(t, TVar):
            return ren[t]
        if isinstance(t, TFun):
            return TFun(go(t.arg), go(t.res))
        if isinstance(t, TCon):
            return TCon(t.name, tuple(go(a) for a in t.args))
        return t

    return go(t)


class SignatureError(Exception):
    pass


class Signature:
    def __init__(self) -> None:
        self.symbols: dict[str, Symbol] = {}
        self.types: dict[str, Type] = {}
        self.datatype_of: dict[str, str] = {}
        self.datatypes: dict[str, list[str]] = {}
        self.aliases: dict[str, tuple[list[TVar], Type]] = {}

    def declare(self, kind: str, name: str, typ: Type,
                datatype: Optional[str] = None) -> Symbol:
        arity = 0
        t = typ
        while isinstance(t, TFun):
            arity += 1
            t = t.res
        sym = Symbol(kind, name, arity)
        if name in self.symbols and self.symbols[name] != sym:
            raise SignatureError(f"conflicting declaration for {name}")
        self.symbols[name] = sym
        self.types[name] = typ
        if kind == Kind.CONSTRUCTOR and datatype is not None:
            self.datatype_of[name] = datatype
            self.datatypes.setdefault(datatype, [])
            if name not in self.datatypes[datatype]:
                self.datatypes[datatype].append(name)
        return sym

    def declare_function(self, name: str, typ: Type, arity: int) -> Symbol:
        """Defined functions: arity comes from the rule left-hand sides
        and may be smaller than the number of arrows in the type."""
        sym = Symbol(Kind.DEFINED, name, arity)
        old = self.symbols.get(name)
        if old is not None and old != sym:
            raise SignatureError(f"conflicting declaration for {name}")
        self.symbols[name] = sym
        self.types[name] = typ
        return sym

    def lookup(self, name: str) -> Optional[Symbol]:
        return self.symbols.get(name)

    def type_of(self, name: str) -> Type:
        return self.types[name]

    def siblings(self, cname: str) -> list[Symbol]:
        """Other constructors of the same datatype."""
        dt = self.datatype_of.get(cname)
        if dt is None:
            return []
        return [self.symbols[n] for n in self.datatypes[dt] if n != cname]

    def tuple_con(self, n: int) -> Symbol:
        name = f"tup_{n}"
        if name not in self.symbols:
            vs = [TVar(f"A{i}") for i in range(1, n + 1)]
            self.declare(Kind.CONSTRUCTOR, name, tfun(*vs, TCon(name, tuple(vs))),
                         datatype=name)
        return self.symbols[name]

    def expand_alias(self, t: Type) -> Type:
        if isinstance(t, TCon) and t.name in self.aliases:
            params, body = self.aliases[t.name]
            if len(params) != len(t.args):
                raise SignatureError(f"alias {t.name} applied to wrong arity")
            sub = dict(zip(params, (self.expand_alias(a) for a in t.args)))

            def repl(u: Type) -> Type:
                if isinstance(u, TVar):
                    return sub.get(u, u)
                if isinstance(u, TFun):
                    return TFun(repl(u.arg), repl(u.res))
                if isinstance(u, TCon):
                    return TCon(u.name, tuple(repl(a) for a in u.args))
                return u

            return self.expand_alias(repl(body))
        if isinstance(t, TFun):
            return TFun(self.expand_alias(t.arg), self.expand_alias(t.res))
        if isinstance(t, TCon):
            return TCon(t.name, tuple(self.expand_alias(a) for a in t.args))
        return t


A = TVar("A")
B = TVar("B")

# canonical primitive names; sugar forms are resolved onto these
EQ = "=="
BRIDGE = "#=="
R_LE = "<="
FD_LE = "#<="
R_OPS = ("+", "-", "*", "/")
FD_OPS = ("#+", "#-", "#*", "#/")


def builtin_signature() -> Signature:
    sig = Signature()
    sig.declare(Kind.CONSTRUCTOR, "false", BOOL, datatype="bool")
    sig.declare(Kind.CONSTRUCTOR, "true", BOOL, datatype="bool")
    sig.declare(Kind.CONSTRUCTOR, "[]", tlist(A), datatype="list")
    sig.declare(Kind.CONSTRUCTOR, ":", tfun(A, tlist(A), tlist(A)), datatype="list")
    sig.declare(Kind.CONSTRUCTOR, "naiveOrder", TCon("labelType"), datatype="labelType")
    sig.declare(Kind.CONSTRUCTOR, "ff", TCon("labelType"), datatype="labelType")

    sig.declare(Kind.PRIMITIVE, EQ, tfun(A, A, BOOL))
    sig.declare(Kind.PRIMITIVE, BRIDGE, tfun(INT, REAL, BOOL))
    for op in R_OPS:
        sig.declare(Kind.PRIMITIVE, op, tfun(REAL, REAL, REAL))
    sig.declare(Kind.PRIMITIVE, R_LE, tfun(REAL, REAL, BOOL))
    for op in FD_OPS:
        sig.declare(Kind.PRIMITIVE, op, tfun(INT, INT, INT))
    sig.declare(Kind.PRIMITIVE, FD_LE, tfun(INT, INT, BOOL))
    sig.declare(Kind.PRIMITIVE, "domain", tfun(tlist(INT), INT, INT, BOOL))
    sig.declare(Kind.PRIMITIVE, "belongs", tfun(INT, tlist(INT), BOOL))
    sig.declare(Kind.PRIMITIVE, "labeling",
                tfun(tlist(TCon("labelType")), tlist(INT), BOOL))
    return sig
