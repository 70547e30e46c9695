"""Rendering of expressions and constraints back to concrete syntax."""

from __future__ import annotations

from .terms import (App, BOTTOM, Expression, IntLit, RealLit, Symbol, Var,
                    spine)

_INFIX = {"+", "-", "*", "/", "#+", "#-", "#*", "#/", ":",
          "==", "/=", "<=", "<", ">", ">=", "#<=", "#<", "#>", "#>=",
          "#==", "#/=="}

_MUL = {"*", "/", "#*", "#/"}
_ADD = {"+", "-", "#+", "#-"}


def _prec(op: str) -> int:
    if op in _MUL:
        return 4
    if op in _ADD:
        return 3
    if op == ":":
        return 2
    return 1  # relational


def _list_items(e: Expression) -> list[Expression] | None:
    items: list[Expression] = []
    while True:
        head, args = spine(e)
        if isinstance(head, Symbol) and head.name == "[]" and not args:
            return items
        if isinstance(head, Symbol) and head.name == ":" and len(args) == 2:
            items.append(args[0])
            e = args[1]
            continue
        return None


def pp(e: Expression, prec: int = 0) -> str:
    """Pretty-print an expression; prec is the surrounding binding level
    (0 outermost, 5 argument position)."""
    if e is BOTTOM:
        return "_|_"
    if isinstance(e, (Var, IntLit, RealLit)):
        return repr(e)
    if isinstance(e, Symbol):
        if e.name in _INFIX:
            return f"({e.name})"
        return e.name
    head, args = spine(e)
    if isinstance(head, Symbol):
        if head.name.startswith("tup_") and len(args) == head.arity:
            return "(" + ", ".join(pp(a, 0) for a in args) + ")"
        items = _list_items(e)
        if items is not None:
            return "[" + ", ".join(pp(a, 0) for a in items) + "]"
        if head.name == ":" and len(args) == 2:
            s = f"{pp(args[0], 3)} : {pp(args[1], 2)}"
            return f"({s})" if prec > 2 else s
        if head.name in _INFIX and len(args) == 2:
            p = _prec(head.name)
            s = f"{pp(args[0], p)} {head.name} {pp(args[1], p + 1)}"
            return f"({s})" if prec > p else s
    s = " ".join([pp(head, 5)] + [pp(a, 5) for a in args])
    return f"({s})" if prec >= 5 else s
