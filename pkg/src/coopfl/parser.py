"""Concrete syntax for programs and goals.

Programs are sequences of datatype declarations, type aliases, type
signatures and rewrite rules.  Rules use ``f p1 .. pn = rhs``,
optionally conditioned with ``<== c1, .., cm``; the clause form
``f p1 .. pn :- c1, .., cm`` abbreviates a rule with right-hand side
``true``.  Items end at a newline where all brackets are closed and the
last token can end an expression; ``;`` also terminates an item.
Comments run from ``%`` or ``--`` to end of line.

Conditions and goals are comma-separated constraints.  A bare boolean
expression ``e`` abbreviates ``e == true`` unless it is a primitive
application (those become ``p args ->! true`` directly).  The strict
relational forms ``< > >= /= #< #> #>= #/==`` are constraint-level
sugar for ``<= == #<= #==`` with a flipped result and are not allowed
nested inside expressions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .constraints import Constraint, FALSE, TRUE, atom
from .pretty import pp
from .terms import (App, Expression, IntLit, Kind, RealLit, Subst, Symbol,
                    Var, free_vars, is_linear, is_pattern, mk_app, spine,
                    subterms)
from .typesys import (BOOL, BRIDGE, EQ, FD_LE, INT, R_LE, REAL, Signature,
                      TCon, TFun, TVar, Type, builtin_signature, is_datatype,
                      tfun)
from . import typecheck


class ParseError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0,
                 filename: str = "<input>"):
        super().__init__(f"{filename}:{line}:{col}: {message}")
        self.line, self.col = line, col


@dataclass
class Token:
    kind: str  # ident | variable | int | real | op | punct | term | eof
    text: str
    line: int
    col: int


_OPS = ["#/==", "#==", "#<=", "#>=", "#<", "#>", "#+", "#-", "#*", "#/",
        "<==", "::", ":-", "->!", "->", "==", "/=", "<=", ">=", "<", ">",
        "=", "+", "-", "*", "/", ":", "|"]
_PUNCT = "()[],;"

# sugar operator -> (canonical primitive, swap args, result)
_REL_SUGAR = {
    "==": (EQ, False, TRUE), "/=": (EQ, False, FALSE),
    "#==": (BRIDGE, False, TRUE), "#/==": (BRIDGE, False, FALSE),
    "<=": (R_LE, False, TRUE), "<": (R_LE, True, FALSE),
    ">": (R_LE, False, FALSE), ">=": (R_LE, True, TRUE),
    "#<=": (FD_LE, False, TRUE), "#<": (FD_LE, True, FALSE),
    "#>": (FD_LE, False, FALSE), "#>=": (FD_LE, True, TRUE),
}
_RELS = set(_REL_SUGAR)
_MUL_OPS = {"*", "/", "#*", "#/"}
_ADD_OPS = {"+", "-", "#+", "#-"}

# tokens that may end an item; a newline after anything else continues
_CLOSERS = {"ident", "variable", "int", "real"}
_CLOSING_PUNCT = {")", "]"}


def tokenize(text: str, filename: str = "<input>") -> list[Token]:
    toks: list[Token] = []
    depth = 0
    line_no = 1
    i = 0
    n = len(text)
    col0 = 0

    def err(msg: str, col: int) -> ParseError:
        return ParseError(msg, line_no, col, filename)

    while i < n:
        ch = text[i]
        col = i - col0 + 1
        if ch == "\n":
            if depth == 0 and toks and toks[-1].kind != "term" and (
                    toks[-1].kind in _CLOSERS or toks[-1].text in _CLOSING_PUNCT):
                toks.append(Token("term", ";", line_no, col))
            line_no += 1
            i += 1
            col0 = i
            continue
        if ch in " \t\r":
            i += 1
            continue
        if ch == "%" or text.startswith("--", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch.isdigit():
            m = re.match(r"\d+\.\d+|\d+", text[i:])
            lit = m.group(0)
            kind = "real" if "." in lit else "int"
            toks.append(Token(kind, lit, line_no, col))
            i += len(lit)
            continue
        if ch.isalpha() or ch == "_":
            m = re.match(r"[A-Za-z_][A-Za-z0-9_']*", text[i:])
            word = m.group(0)
            kind = "variable" if word[0].isupper() or word[0] == "_" else "ident"
            toks.append(Token(kind, word, line_no, col))
            i += len(word)
            continue
        if ch in _PUNCT:
            if ch in "([":
                depth += 1
            elif ch in ")]":
                depth -= 1
                if depth < 0:
                    raise err(f"unbalanced '{ch}'", col)
            if ch == ";":
                toks.append(Token("term", ";", line_no, col))
            else:
                toks.append(Token("punct", ch, line_no, col))
            i += 1
            continue
        for op in _OPS:
            if text.startswith(op, i):
                toks.append(Token("op", op, line_no, col))
                i += len(op)
                break
        else:
            raise err(f"unexpected character {ch!r}", col)
    toks.append(Token("term", ";", line_no, 0))
    toks.append(Token("eof", "", line_no, 0))
    return toks


@dataclass
class ProgramRule:
    fname: str
    patterns: tuple[Expression, ...]
    rhs: Expression
    conditions: tuple[Constraint, ...]
    location: str = ""
    type_env: dict = field(default_factory=dict)

    def arity(self) -> int:
        return len(self.patterns)

    def variables(self) -> set[Var]:
        out: set[Var] = set()
        for p in self.patterns:
            out |= free_vars(p)
        out |= free_vars(self.rhs)
        for c in self.conditions:
            out |= c.variables()
        return out

    def __repr__(self) -> str:
        head = " ".join([self.fname] + [pp(p, 5) for p in self.patterns])
        s = f"{head} = {pp(self.rhs)}"
        if self.conditions:
            s += " <== " + ", ".join(repr(c) for c in self.conditions)
        return s


@dataclass
class Program:
    signature: Signature
    rules: dict[str, list[ProgramRule]]
    declared: dict[str, Type]
    warnings: list[str] = field(default_factory=list)

    def rules_for(self, fname: str) -> list[ProgramRule]:
        return self.rules.get(fname, [])

    def pretty(self) -> str:
        lines = []
        for fname, t in self.declared.items():
            lines.append(f"{fname} :: {t!r}")
        for rules in self.rules.values():
            for r in rules:
                lines.append(repr(r))
        return "\n".join(lines) + "\n"


class _Parser:
    def __init__(self, toks: list[Token], sig: Signature, filename: str):
        self.toks = toks
        self.pos = 0
        self.sig = sig
        self.filename = filename

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, msg: str, tok: Optional[Token] = None) -> ParseError:
        tok = tok or self.peek()
        return ParseError(msg, tok.line, tok.col, self.filename)

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            raise self.error(f"expected {want!r}, found {t.text!r}")
        return self.next()

    def skip_terms(self) -> None:
        while self.peek().kind == "term":
            self.next()

    def at_term(self) -> bool:
        return self.peek().kind in ("term", "eof")

    # ---- types ----

    def parse_type(self) -> Type:
        left = self.parse_type_app()
        if self.peek().kind == "op" and self.peek().text == "->":
            self.next()
            return TFun(left, self.parse_type())
        return left

    def parse_type_app(self) -> Type:
        t = self.peek()
        if t.kind == "ident" and (t.text in self.sig.datatypes
                                  or t.text in self.sig.aliases
                                  or t.text in ("int", "real")):
            name = self.next().text
            if name == "int":
                return INT
            if name == "real":
                return REAL
            params = (len(self.sig.aliases[name][0]) if name in self.sig.aliases
                      else _datatype_params(self.sig, name))
            args = [self.parse_type_atom() for _ in range(params)]
            return self.sig.expand_alias(TCon(name, tuple(args)))
        return self.parse_type_atom()

    def parse_type_atom(self) -> Type:
        t = self.peek()
        if t.kind == "ident":
            name = self.next().text
            if name == "int":
                return INT
            if name == "real":
                return REAL
            if name in self.sig.datatypes or name in self.sig.aliases:
                return self.sig.expand_alias(TCon(name))
            raise self.error(f"unknown type {name!r}", t)
        if t.kind == "variable":
            self.next()
            return TVar(t.text)
        if t.kind == "punct" and t.text == "[":
            self.next()
            inner = self.parse_type()
            self.expect("punct", "]")
            return TCon("list", (inner,))
        if t.kind == "punct" and t.text == "(":
            self.next()
            parts = [self.parse_type()]
            while self.peek().text == ",":
                self.next()
                parts.append(self.parse_type())
            self.expect("punct", ")")
            if len(parts) == 1:
                return parts[0]
            return TCon(f"tup_{len(parts)}", tuple(parts))
        raise self.error(f"expected a type, found {t.text!r}", t)

    # ---- expressions ----

    def parse_expr(self) -> Expression:
        left = self.parse_cons()
        t = self.peek()
        if t.kind == "op" and t.text in _RELS:
            self.next()
            right = self.parse_cons()
            op = Symbol(Kind.PRIMITIVE, t.text, 2)
            e = App(App(op, left), right)
            u = self.peek()
            if u.kind == "op" and u.text in _RELS:
                raise self.error("relational operators are non-associative", u)
            return e
        return left

    def parse_cons(self) -> Expression:
        left = self.parse_additive()
        t = self.peek()
        if t.kind == "op" and t.text == ":":
            self.next()
            right = self.parse_cons()
            return mk_app(self.sig.symbols[":"], [left, right])
        return left

    def parse_additive(self) -> Expression:
        left = self.parse_multiplicative()
        while self.peek().kind == "op" and self.peek().text in _ADD_OPS:
            op = self.next().text
            right = self.parse_multiplicative()
            left = mk_app(Symbol(Kind.PRIMITIVE, op, 2), [left, right])
        return left

    def parse_multiplicative(self) -> Expression:
        left = self.parse_application()
        while self.peek().kind == "op" and self.peek().text in _MUL_OPS:
            op = self.next().text
            right = self.parse_application()
            left = mk_app(Symbol(Kind.PRIMITIVE, op, 2), [left, right])
        return left

    def parse_application(self) -> Expression:
        e = self.parse_atom()
        while self.starts_atom():
            e = App(e, self.parse_atom())
        return e

    def starts_atom(self) -> bool:
        # '-' never continues an application: a negative literal is only
        # recognized where an expression starts
        t = self.peek()
        return (t.kind in ("ident", "variable", "int", "real")
                or (t.kind == "punct" and t.text in "(["))

    def parse_atom(self) -> Expression:
        t = self.next()
        if t.kind == "int":
            return IntLit(int(t.text))
        if t.kind == "real":
            return RealLit(Fraction(t.text))
        if t.kind == "op" and t.text == "-":
            lit = self.next()
            if lit.kind == "int":
                return IntLit(-int(lit.text))
            if lit.kind == "real":
                return RealLit(-Fraction(lit.text))
            raise self.error("'-' is only allowed before a numeric literal", lit)
        if t.kind == "variable":
            return Var(t.text)
        if t.kind == "ident":
            sym = self.sig.lookup(t.text)
            if sym is None:
                raise self.error(f"unknown symbol {t.text!r}", t)
            return sym
        if t.kind == "punct" and t.text == "(":
            if self.peek().kind == "op" and self.peek(1).text == ")":
                op = self.next()
                self.next()
                name = op.text
                if name in _RELS and name not in (EQ, BRIDGE, R_LE, FD_LE):
                    raise self.error(
                        f"operator {name!r} is constraint-level sugar", op)
                return Symbol(Kind.PRIMITIVE, name, 2)
            parts = [self.parse_expr()]
            while self.peek().text == ",":
                self.next()
                parts.append(self.parse_expr())
            self.expect("punct", ")")
            if len(parts) == 1:
                return parts[0]
            return mk_app(self.sig.tuple_con(len(parts)), parts)
        if t.kind == "punct" and t.text == "[":
            items: list[Expression] = []
            if not (self.peek().kind == "punct" and self.peek().text == "]"):
                items.append(self.parse_expr())
                while self.peek().text == ",":
                    self.next()
                    items.append(self.parse_expr())
            self.expect("punct", "]")
            out: Expression = self.sig.symbols["[]"]
            for item in reversed(items):
                out = mk_app(self.sig.symbols[":"], [item, out])
            return out
        raise self.error(f"unexpected token {t.text!r}", t)

    # ---- constraints ----

    def expr_to_constraint(self, e: Expression, tok: Token) -> Constraint:
        head, args = spine(e)
        if isinstance(head, Symbol) and head.name in _REL_SUGAR and len(args) == 2:
            canon, swap, result = _REL_SUGAR[head.name]
            a, b = args
            if swap:
                a, b = b, a
            for side in (a, b):
                _reject_nested_sugar(self, side, tok)
            return atom(Symbol(Kind.PRIMITIVE, canon, 2), (a, b), result)
        _reject_nested_sugar(self, e, tok)
        if (isinstance(head, Symbol) and head.kind == Kind.PRIMITIVE
                and head.name in self.sig.types
                and len(args) == head.arity
                and _result_type_is_bool(self.sig, head)):
            return atom(head, tuple(args), TRUE)
        return atom(Symbol(Kind.PRIMITIVE, EQ, 2), (e, TRUE), TRUE)

    def parse_constraints(self) -> list[Constraint]:
        out = []
        while True:
            tok = self.peek()
            e = self.parse_expr()
            if self.peek().kind == "op" and self.peek().text == "->!":
                self.next()
                result = self.parse_cons()
                out.append(self._explicit_atom(e, result, tok))
            else:
                out.append(self.expr_to_constraint(e, tok))
            if self.peek().text == ",":
                self.next()
                continue
            return out

    def _explicit_atom(self, e: Expression, result: Expression,
                       tok: Token) -> Constraint:
        head, args = spine(e)
        if isinstance(head, Symbol) and head.name in _REL_SUGAR and len(args) == 2:
            canon, swap, res0 = _REL_SUGAR[head.name]
            if res0 != TRUE:
                raise self.error(
                    f"{head.name!r} cannot take an explicit result", tok)
            a, b = args
            return atom(Symbol(Kind.PRIMITIVE, canon, 2), (a, b), result)
        if (isinstance(head, Symbol) and head.kind == Kind.PRIMITIVE
                and head.name in self.sig.types and len(args) == head.arity):
            if not is_pattern(result):
                raise self.error("result of ->! must be a pattern", tok)
            return atom(head, tuple(args), result)
        raise self.error("left side of ->! must be a primitive call", tok)

    # ---- program items ----

    def parse_program(self) -> Program:
        rules: dict[str, list[ProgramRule]] = {}
        declared: dict[str, Type] = {}
        arities: dict[str, int] = {}
        pending: list[tuple[int, Token]] = []

        # first pass: declarations and rule spans
        while True:
            self.skip_terms()
            if self.peek().kind == "eof":
                break
            start = self.pos
            tok = self.peek()
            if tok.kind == "ident" and tok.text == "data":
                self.parse_data_decl()
            elif tok.kind == "ident" and tok.text == "type":
                self.parse_type_alias()
            elif (tok.kind == "ident" and self.peek(1).kind == "op"
                  and self.peek(1).text == "::"):
                name = self.next().text
                self.next()
                declared[name] = self.sig.expand_alias(self.parse_type())
                if not self.at_term():
                    raise self.error("junk after type declaration")
            else:
                head = self.expect("ident")
                arity = self.scan_rule_head()
                prev = arities.get(head.text)
                if prev is not None and prev != arity:
                    raise self.error(
                        f"{head.text} used with {arity} arguments, "
                        f"previously {prev}", head)
                arities[head.text] = arity
                pending.append((start, head))
                while not self.at_term():
                    self.next()
            self.skip_terms()

        for name, arity in arities.items():
            t = declared.get(name)
            if t is None:
                t = tfun(*([TVar(f"_A{i}") for i in range(arity)] + [TVar("_R")]))
            self.sig.declare_function(name, t, arity)

        # second pass: rule bodies
        for start, head in pending:
            self.pos = start
            rule = self.parse_rule()
            rules.setdefault(rule.fname, []).append(rule)

        for name in declared:
            if name not in rules and name not in self.sig.symbols:
                self.sig.declare_function(name, declared[name], 0)
        return Program(self.sig, rules, declared)

    def scan_rule_head(self) -> int:
        """Count argument patterns without building them."""
        count = 0
        while True:
            t = self.peek()
            if t.kind == "op" and t.text in ("=", ":-"):
                return count
            if self.at_term():
                raise self.error("rule has no '=' or ':-'", t)
            if t.kind == "punct" and t.text in "([":
                depth = 0
                while True:
                    u = self.next()
                    if u.kind == "punct" and u.text in "([":
                        depth += 1
                    elif u.kind == "punct" and u.text in ")]":
                        depth -= 1
                        if depth == 0:
                            break
                    elif u.kind == "eof":
                        raise self.error("unterminated bracket", t)
                count += 1
                continue
            self.next()
            count += 1

    def parse_data_decl(self) -> None:
        self.expect("ident", "data")
        name = self.expect("ident").text
        params: list[TVar] = []
        while self.peek().kind == "variable":
            params.append(TVar(self.next().text))
        self.expect("op", "=")
        result = TCon(name, tuple(params))
        self.sig.datatypes.setdefault(name, [])
        while True:
            ctor = self.expect("ident").text
            arg_types: list[Type] = []
            while not self.at_term() and self.peek().text != "|":
                arg_types.append(self.parse_type_atom())
            for at in arg_types:
                if not is_datatype(at):
                    raise self.error(
                        f"constructor {ctor} has non-datatype argument")
            self.sig.declare(Kind.CONSTRUCTOR, ctor, tfun(*arg_types, result),
                             datatype=name)
            if self.peek().text == "|":
                self.next()
                continue
            break

    def parse_type_alias(self) -> None:
        self.expect("ident", "type")
        name = self.expect("ident").text
        params: list[TVar] = []
        while self.peek().kind == "variable":
            params.append(TVar(self.next().text))
        self.expect("op", "=")
        body = self.parse_type()
        self.sig.aliases[name] = (params, body)

    def parse_rule(self) -> ProgramRule:
        head = self.expect("ident")
        patterns: list[Expression] = []
        while not (self.peek().kind == "op" and self.peek().text in ("=", ":-")):
            patterns.append(self.parse_atom())
        sep = self.next().text
        if sep == ":-":
            rhs: Expression = TRUE
            conds = self.parse_constraints()
        else:
            rhs = self.parse_expr()
            conds = []
            if self.peek().kind == "op" and self.peek().text == "<==":
                self.next()
                conds = self.parse_constraints()
        if not self.at_term():
            raise self.error("junk after rule")
        combined = mk_app(Symbol(Kind.CONSTRUCTOR, "_head", len(patterns)),
                          patterns)
        for p in patterns:
            if not is_pattern(p):
                raise self.error(f"argument {pp(p)} is not a pattern", head)
        if not is_linear(combined):
            raise self.error(
                f"left-hand side of {head.text} is not linear", head)
        return ProgramRule(head.text, tuple(patterns), rhs, tuple(conds),
                           location=f"{self.filename}:{head.line}")


def _reject_nested_sugar(p: _Parser, e: Expression, tok: Token) -> None:
    for sub in subterms(e):
        if isinstance(sub, Symbol) and sub.name in _RELS and sub.name not in (
                EQ, BRIDGE, R_LE, FD_LE):
            raise ParseError(
                f"operator {sub.name!r} only allowed as a top-level constraint",
                tok.line, tok.col, p.filename)


def _result_type_is_bool(sig: Signature, head: Symbol) -> bool:
    t = sig.types.get(head.name)
    for _ in range(head.arity):
        if not isinstance(t, TFun):
            return False
        t = t.res
    return t == BOOL


def _datatype_params(sig: Signature, name: str) -> int:
    ctors = sig.datatypes.get(name, [])
    if not ctors:
        return 0
    t = sig.types[ctors[0]]
    while isinstance(t, TFun):
        t = t.res
    assert isinstance(t, TCon)
    return len(t.args)


def parse_program(text: str, filename: str = "<input>") -> Program:
    """Parse and desugar a program; syntax errors carry file:line:col."""
    sig = builtin_signature()
    p = _Parser(tokenize(text, filename), sig, filename)
    return p.parse_program()


def check(program: Program) -> Program:
    """Type-check all rules; attaches per-rule variable environments."""
    program.warnings = typecheck.check_program(
        program.signature, program.rules, program.declared)
    return program


def load_program(text: str, filename: str = "<input>") -> Program:
    return check(parse_program(text, filename))


def parse_goal(text: str, program: Optional[Program] = None) -> list[Constraint]:
    """Parse a comma-separated constraint pool."""
    if not text.strip():
        raise ParseError("empty goal", 1, 1)
    sig = program.signature if program else builtin_signature()
    p = _Parser(tokenize(text, "<goal>"), sig, "<goal>")
    out = p.parse_constraints()
    p.skip_terms()
    if p.peek().kind != "eof":
        raise p.error("junk after goal")
    return out


def parse_expression(text: str, program: Optional[Program] = None) -> Expression:
    sig = program.signature if program else builtin_signature()
    p = _Parser(tokenize(text, "<expr>"), sig, "<expr>")
    e = p.parse_expr()
    p.skip_terms()
    if p.peek().kind != "eof":
        raise p.error("junk after expression")
    return e
