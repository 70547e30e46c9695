"""Goal-transformation engine: constrained lazy narrowing with four
cooperating constraint stores.

A goal is ``exists U. P [] C [] M [] H [] F [] R``: productions P
(lazy-narrowing obligations ``expression -> pattern``), the constraint
pool C, and the mediatorial, Herbrand, finite-domain and real stores.
The strategy processes the leftmost processable production, then
applies bridge-merging rules and invokes solvers on unsolved stores
whose constraints contain no produced variables, then takes the
leftmost pool constraint: non-primitive atoms are flattened, primitive
atoms go through a set-bridges / propagate-projections / submit burst
into their store.  Disjunctive choices (program rules, solver
alternatives, labeling) are explored depth-first.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterator, Optional

from . import coordination, fd, herbrand, mediatorial, real, typecheck
from .constraints import (Constraint, FALSE, Store, TRUE, atom,
                          is_extended_herbrand, is_mediatorial, is_proper_fd,
                          is_proper_r, odvar_set, store)
from .parser import Program, ProgramRule
from .pretty import pp
from .terms import (App, Expression, IntLit, Kind, RealLit, Subst, Symbol,
                    Var, VarGen, free_vars, is_pattern, mk_app, rigid_head,
                    spine)
from .typesys import BOOL, EQ, INT, REAL, Signature, TBase, TFun, Type, uncurry


class EngineError(Exception):
    pass


class InvariantError(EngineError):
    pass


@dataclass
class Config:
    projections: bool = True
    label: str = "naive"  # "naive" keeps program strategies, "ff" overrides
    answers: Optional[int] = 1  # None = all
    epsilon: Fraction = Fraction(0)
    trace: Optional[Callable[["TraceStep"], None]] = None
    debug: bool = False
    max_steps: Optional[int] = None


@dataclass
class TraceStep:
    number: int
    rule: str
    part: str
    sizes: tuple[int, int, int, int]

    def line(self) -> str:
        m, h, f, r = self.sizes
        return f"{self.number}\t{self.rule}\t{self.part}\t{m},{h},{f},{r}"


@dataclass(frozen=True)
class Goal:
    prefix: frozenset[Var] = frozenset()
    productions: tuple[tuple[Expression, Expression], ...] = ()
    pool: tuple[Constraint, ...] = ()
    m: Store = field(default_factory=store)
    h: Store = field(default_factory=store)
    f: Store = field(default_factory=store)
    r: Store = field(default_factory=store)
    unsafe_h: bool = False
    opaque_dc: bool = False

    def pvar(self) -> set[Var]:
        out: set[Var] = set()
        for _, t in self.productions:
            out |= free_vars(t)
        return out

    def odvar(self) -> set[Var]:
        # demand is read off the stores and the pool: a variable
        # obviously demanded by a pool conjunct is demanded by the goal
        # just the same (the worked derivations rely on this when the
        # flattened defining atom must precede its use)
        out: set[Var] = set()
        for s in (self.m, self.h, self.f, self.r):
            out |= odvar_set(s.atoms)
        out |= odvar_set(self.pool)
        return out

    def stores(self) -> tuple[Store, Store, Store, Store]:
        return self.m, self.h, self.f, self.r

    def all_vars(self) -> set[Var]:
        out: set[Var] = set(self.prefix)
        for e, t in self.productions:
            out |= free_vars(e) | free_vars(t)
        for c in self.pool:
            out |= c.variables()
        for s in self.stores():
            out |= s.all_variables()
        return out

    def apply_everywhere(self, sub: Subst, owner: Optional[str] = None) -> "Goal":
        """Binding propagation: apply the substitution to the whole goal
        but compose it only into the owner store's substitution."""
        if not sub:
            return self
        prods = tuple((sub.apply(e), sub.apply(t)) for e, t in self.productions)
        pool = tuple(c.apply(sub) for c in self.pool)
        new_stores = {}
        for name, s in zip("mhfr", self.stores()):
            new_stores[name] = s.apply(sub, owner=(name == owner))
        return replace(self, productions=prods, pool=pool, **new_stores)

    def bridges(self) -> list[Constraint]:
        return mediatorial.bridges(self.m.atoms)

    def summary(self) -> str:
        parts = []
        if self.productions:
            parts.append(", ".join(f"{pp(e)} -> {pp(t)}"
                                   for e, t in self.productions))
        parts.append(", ".join(repr(c) for c in self.pool) or "<>")
        for s in self.stores():
            parts.append(repr(s))
        return " [] ".join(parts)


@dataclass
class Answer:
    substitution: dict[Var, Expression]
    residual: dict[str, tuple[Constraint, ...]]
    unsafe_h: bool = False
    opaque_dc: bool = False

    def pretty(self, show_totality: bool = False) -> str:
        inner = ", ".join(
            f"{v!r} -> {pp(t)}" for v, t in sorted(
                self.substitution.items(), key=lambda kv: (kv[0].name, kv[0].gen)))
        text = "{" + inner + "}"
        extras = []
        for key in "mhfr":
            for c in self.residual.get(key, ()):
                if not show_totality and _is_totality(c):
                    continue
                extras.append(repr(c))
        if extras:
            text += " subject to " + ", ".join(extras)
        return text


def _is_totality(c: Constraint) -> bool:
    return (c.prim.name == EQ and c.result == TRUE
            and isinstance(c.args[0], Var) and c.args[0] == c.args[1])


@dataclass
class _Out:
    kind: str  # "solved" | "fail" | "branch"
    rule: str = ""
    part: str = ""
    successors: Optional[Iterator[Goal]] = None


class Engine:
    """One engine instance = one computation; counters and the fresh
    variable supply are per-instance."""

    def __init__(self, program: Program, config: Optional[Config] = None):
        self.program = program
        self.sig: Signature = program.signature
        self.config = config or Config()
        self.gen = VarGen()
        self.steps = 0
        self.solver_calls = 0
        self.label_counter = fd.ChoiceCounter()
        self.var_types: dict[Var, Type] = {}
        self.initial_vars: set[Var] = set()
        self.trace_log: list[TraceStep] = []

    # ---- public API ----

    def solve_goal(self, pool: list[Constraint],
                   var_types: Optional[dict[Var, Type]] = None) -> Iterator[Answer]:
        if var_types is None:
            var_types, pool = typecheck.check_goal(self.sig, pool)
        self.var_types = dict(var_types)
        self.initial_vars = set()
        for c in pool:
            self.initial_vars |= c.variables()
        goal = Goal(pool=tuple(pool))
        yield from self._search(goal)

    def _search(self, root: Goal) -> Iterator[Answer]:
        stack: list[Iterator[Goal]] = [iter([root])]
        while stack:
            g = next(stack[-1], None)
            if g is None:
                stack.pop()
                continue
            out = self.step(g)
            if out.kind == "solved":
                yield self._answer(g)
            elif out.kind == "branch":
                stack.append(out.successors)

    # ---- single strategy step ----

    def step(self, g: Goal) -> _Out:
        self.steps += 1
        if self.config.max_steps and self.steps > self.config.max_steps:
            raise EngineError("step limit exceeded")
        if self.config.debug:
            check_admissibility(g)
        out = self._choose(g)
        if self.config.trace and out.kind != "solved":
            rec = TraceStep(self.steps, out.rule, out.part,
                            tuple(len(s.atoms) for s in g.stores()))
            self.trace_log.append(rec)
            self.config.trace(rec)
        return out

    def _choose(self, g: Goal) -> _Out:
        out = self._production_step(g)
        if out is not None:
            return out
        out = self._store_step(g)
        if out is not None:
            return out
        out = self._pool_step(g)
        if out is not None:
            return out
        if g.productions:
            # only undischargeable suspensions remain: cannot happen for
            # admissible first-order goals, so treat it as finite failure
            if self.config.debug:
                raise InvariantError(f"stuck goal: {g.summary()}")
            return _Out("fail", "STUCK", g.summary())
        return _Out("solved")

    # ---- phase 1: productions ----

    def _production_step(self, g: Goal) -> Optional[_Out]:
        demanded = g.odvar()
        for idx, (e, t) in enumerate(g.productions):
            out = self._process_production(g, idx, e, t, demanded)
            if out is not None:
                return out
        return None

    def _process_production(self, g: Goal, idx: int, e: Expression,
                            t: Expression, demanded: set[Var]) -> Optional[_Out]:
        part = f"{pp(e)} -> {pp(t)}"
        rest = g.productions[:idx] + g.productions[idx + 1:]

        if not isinstance(t, Var):
            if isinstance(e, Var):
                sub = Subst({e: t})
                g2 = replace(g, productions=rest).apply_everywhere(sub, owner="h")
                return _Out("branch", "SP", part, iter([g2]))
            eh = rigid_head(e)
            th = rigid_head(t)
            if eh is not None and _passive(e):
                _, eargs = spine(e)
                _, targs = spine(t)
                if eh == th and len(eargs) == len(targs):
                    opaque = _opaque_app(self.sig, eh, len(eargs))
                    g2 = replace(g, productions=tuple(zip(eargs, targs)) + rest,
                                 opaque_dc=g.opaque_dc or opaque)
                    return _Out("branch", "DC", part, iter([g2]))
                return _Out("fail", "CF", part)
            if _active(e):
                return self._apply_call(g, idx, e, t)
            return None  # flexible application: out of scope, leave pending

        # t is a variable
        if is_pattern(e):
            sub = Subst({t: e})
            g2 = replace(g, productions=rest,
                         prefix=g.prefix - {t}).apply_everywhere(sub, owner="h")
            return _Out("branch", "SP", part, iter([g2]))
        if _passive(e) and not is_pattern(e):
            if t in demanded:
                head, args = spine(e)
                fresh = [self.gen.fresh("X") for _ in args]
                sub = Subst({t: mk_app(head, fresh)})
                prods = tuple(zip(args, fresh)) + rest
                g2 = replace(g, productions=prods,
                             prefix=(g.prefix | set(fresh)) - {t})
                g2 = g2.apply_everywhere(sub, owner="h")
                return _Out("branch", "IM", part, iter([g2]))
            return self._discharge(g, idx, e, t)
        if _active(e):
            if not isinstance(t, Var) or t in demanded:
                return self._apply_call(g, idx, e, t)
            return self._discharge(g, idx, e, t)
        return None

    def _discharge(self, g: Goal, idx: int, e: Expression,
                   t: Var) -> Optional[_Out]:
        rest = g.productions[:idx] + g.productions[idx + 1:]
        used: set[Var] = set()
        for e2, t2 in rest:
            used |= free_vars(e2) | free_vars(t2)
        for c in g.pool:
            used |= c.variables()
        for s in g.stores():
            used |= s.variables() | s.subst.vran()
        if t not in used:
            g2 = replace(g, productions=rest, prefix=g.prefix - {t})
            return _Out("branch", "EL", f"{pp(e)} -> {pp(t)}", iter([g2]))
        return None  # suspension stays

    def _apply_call(self, g: Goal, idx: int, e: Expression,
                    t: Expression) -> Optional[_Out]:
        part = f"{pp(e)} -> {pp(t)}"
        rest = g.productions[:idx] + g.productions[idx + 1:]
        head, args = spine(e)
        assert isinstance(head, Symbol)
        if head.kind == Kind.PRIMITIVE:
            c = atom(head, tuple(args), t)
            g2 = replace(g, productions=rest, pool=(c,) + g.pool)
            return _Out("branch", "PC", part, iter([g2]))
        rules = self.program.rules_for(head.name)
        if not rules:
            return _Out("fail", "DF", part)
        n = head.arity
        extra = args[n:]

        def variants() -> Iterator[Goal]:
            for rule in rules:
                ren = self.gen.rename(sorted(rule.variables(),
                                             key=lambda v: (v.name, v.gen)))
                pats = [ren.apply(p) for p in rule.patterns]
                rhs = ren.apply(rule.rhs)
                conds = tuple(c.apply(ren) for c in rule.conditions)
                fresh = set(ren.mapping.values())
                for v, ty in rule.type_env.items():
                    tgt = ren.apply(v)
                    if isinstance(tgt, Var):
                        self.var_types.setdefault(tgt, ty)
                new_prods = list(zip(args[:n], pats))
                if extra:
                    x = self.gen.fresh("X")
                    fresh.add(x)
                    new_prods.append((rhs, x))
                    new_prods.append((mk_app(x, extra), t))
                else:
                    new_prods.append((rhs, t))
                yield replace(g, productions=tuple(new_prods) + rest,
                              pool=conds + g.pool,
                              prefix=g.prefix | fresh)

        return _Out("branch", "DF", part, variants())

    # ---- phase 2: bridge merging and solver invocation ----

    def _store_step(self, g: Goal) -> Optional[_Out]:
        ie = coordination.ie_step(g.m.atoms)
        if ie is not None:
            new_m, to_f, to_r = ie
            before = len(mediatorial.bridges(g.m.atoms))
            g2 = replace(g, m=Store(tuple(new_m), g.m.subst),
                         f=g.f.add(to_f), r=g.r.add(to_r))
            if self.config.debug:
                after = len(mediatorial.bridges(g2.m.atoms))
                assert after < before, "bridge merge must drop a bridge"
            emitted = ", ".join(repr(c) for c in to_f + to_r)
            return _Out("branch", "IE", emitted, iter([g2]))
        idr = coordination.id_step(g.m.atoms, self.config.epsilon)
        if idr is not None:
            new_m, to_f, to_r = idr
            g2 = replace(g, m=Store(tuple(new_m), g.m.subst),
                         f=g.f.add(to_f), r=g.r.add(to_r))
            emitted = ", ".join(repr(c) for c in to_f + to_r)
            return _Out("branch", "ID", emitted, iter([g2]))

        pv = g.pvar()
        # MS
        if not (pv & g.m.variables()) and not mediatorial.is_solved(
                g.m.atoms, self.config.epsilon):
            self.solver_calls += 1
            alts = mediatorial.solve(list(g.m.atoms), self.config.epsilon)
            if not alts:
                return _Out("fail", "SF", "mediatorial store")
            return _Out("branch", "MS", repr(g.m),
                        iter([self._plug(g, "m", s) for s in alts]))
        # HS
        if not (pv & odvar_set(g.h.atoms)):
            chi = frozenset(pv & g.h.variables())
            if not herbrand.is_solved(g.h, chi, self.sig):
                self.solver_calls += 1
                outcome = herbrand.solve(list(g.h.atoms), chi, self.sig, self.gen)
                unsafe = not outcome.is_safe()
                if not outcome.alternatives:
                    return _Out("fail", "SF", "herbrand store")
                succ = [self._plug(replace(g, unsafe_h=g.unsafe_h or unsafe),
                                   "h", s) for s in outcome.alternatives]
                return _Out("branch", "HS", repr(g.h), iter(succ))
        # FS
        if not (pv & g.f.variables()) and not fd.is_solved(list(g.f.atoms)):
            self.solver_calls += 1
            override = "ff" if self.config.label == "ff" else None
            alts = fd.solve(list(g.f.atoms), self.label_counter, override)
            first = next(alts, None)
            if first is None:
                return _Out("fail", "SF", "finite-domain store")
            chained = itertools.chain([first], alts)
            return _Out("branch", "FS", repr(g.f),
                        (self._plug(g, "f", s) for s in chained))
        # RS
        if not (pv & g.r.variables()) and not real.is_solved(list(g.r.atoms)):
            self.solver_calls += 1
            res = real.solve(list(g.r.atoms))
            if res is None:
                return _Out("fail", "SF", "real store")
            return _Out("branch", "RS", repr(g.r),
                        iter([self._plug(g, "r", res.as_store())]))
        return None

    def _plug(self, g: Goal, which: str, result: Store) -> Goal:
        """Install a solver alternative and propagate its bindings."""
        old: Store = getattr(g, which)
        fresh = (result.variables() | result.subst.vran()) - g.all_vars()
        g2 = replace(g, prefix=g.prefix | fresh,
                     **{which: Store(result.atoms, old.subst)})
        g2 = g2.apply_everywhere(result.subst, owner=which)
        if self.config.debug:
            check_admissibility(g2)
        return g2

    # ---- phase 3: pool ----

    def _pool_step(self, g: Goal) -> Optional[_Out]:
        if not g.pool:
            return None
        c = g.pool[0]
        rest = g.pool[1:]
        if not c.is_primitive():
            return self._flatten(g, c, rest)
        return self._burst(g, c, rest)

    def _flatten(self, g: Goal, c: Constraint, rest) -> _Out:
        prods: list[tuple[Expression, Expression]] = []
        new_args: list[Expression] = []
        fresh: list[Var] = []
        for a in c.args:
            if is_pattern(a):
                new_args.append(a)
                continue
            base = "R" if self._expr_type(a) == REAL else "V"
            v = self.gen.fresh(base)
            ty = self._expr_type(a)
            if ty is not None:
                self.var_types[v] = ty
            fresh.append(v)
            prods.append((a, v))
            new_args.append(v)
        c2 = Constraint(c.prim, tuple(new_args), c.result)
        g2 = replace(g, productions=tuple(prods) + g.productions,
                     pool=(c2,) + rest, prefix=g.prefix | set(fresh))
        return _Out("branch", "FC", repr(c), iter([g2]))

    def _expr_type(self, e: Expression) -> Optional[Type]:
        head, args = spine(e)
        if isinstance(head, Symbol) and head.name in self.sig.types:
            t = self.sig.expand_alias(self.sig.types[head.name])
            try:
                _, res = uncurry(t, len(args))
            except ValueError:
                return None
            if isinstance(res, TBase):
                return res
        if isinstance(head, Var):
            return None
        return None

    def _burst(self, g: Goal, c: Constraint, rest) -> _Out:
        """SB + PP + SC on one primitive pool atom."""
        trace = self.config.trace
        kind = self._route(g, c)
        g2 = replace(g, pool=rest)
        if kind in ("fd", "r"):
            direction = "fd_to_r" if kind == "fd" else "r_to_fd"
            bridges = g2.bridges()
            res = coordination.bridges_and_projection(c, bridges, direction,
                                                      self.gen)
            if res.new_bridges:
                fresh = set()
                for nb in res.new_bridges:
                    fresh |= nb.variables() - g2.all_vars() - c.variables()
                for v in fresh:
                    self.var_types.setdefault(
                        v, REAL if kind == "fd" else INT)
                g2 = replace(g2, m=g2.m.add(res.new_bridges),
                             prefix=g2.prefix | fresh)
                self._trace_sub("SB", ", ".join(repr(b) for b in res.new_bridges))
            if self.config.projections and res.projected:
                fresh = set()
                for pc in res.projected:
                    fresh |= pc.variables() - g2.all_vars()
                if kind == "fd":
                    g2 = replace(g2, r=g2.r.add(res.projected),
                                 prefix=g2.prefix | fresh)
                else:
                    g2 = replace(g2, f=g2.f.add(res.projected),
                                 prefix=g2.prefix | fresh)
                self._trace_sub("PP", ", ".join(repr(p) for p in res.projected))
            g2 = replace(g2, **({"f": g2.f.add([c])} if kind == "fd"
                                else {"r": g2.r.add([c])}))
        elif kind == "m":
            g2 = replace(g2, m=g2.m.add([c]))
        else:
            g2 = replace(g2, h=g2.h.add([c]))
        self._note_types(c, kind)
        return _Out("branch", "SC", repr(c), iter([g2]))

    def _route(self, g: Goal, c: Constraint) -> str:
        if is_mediatorial(c):
            return "m"
        if is_proper_fd(c):
            return "fd"
        if is_proper_r(c):
            return "r"
        if is_extended_herbrand(c):
            inferred = coordination.infer_specific(g.m.atoms, c, self.var_types)
            if inferred is not None:
                return inferred
            return "h"
        raise EngineError(f"unroutable constraint {c!r}")

    def _note_types(self, c: Constraint, kind: str) -> None:
        """Record base types of variables as they reach typed stores."""
        if kind == "fd":
            for v in c.variables():
                self.var_types.setdefault(v, INT)
        elif kind == "r":
            for v in c.variables():
                self.var_types.setdefault(v, REAL)
        elif kind == "m":
            t, s = c.args
            if isinstance(t, Var):
                self.var_types.setdefault(t, INT)
            if isinstance(s, Var):
                self.var_types.setdefault(s, REAL)

    def _trace_sub(self, rule: str, part: str) -> None:
        if self.config.trace:
            rec = TraceStep(self.steps, rule, part, (0, 0, 0, 0))
            self.trace_log.append(rec)
            self.config.trace(rec)

    # ---- answers ----

    def _answer(self, g: Goal) -> Answer:
        combined: dict[Var, Expression] = {}
        for s in g.stores():
            combined.update(s.subst.mapping)
        sub = Subst(combined)
        restricted = {v: sub.apply(v) for v in sorted(
            self.initial_vars, key=lambda v: (v.name, v.gen))
            if sub.apply(v) != v}
        residual = {name: s.atoms for name, s in zip("mhfr", g.stores())}
        return Answer(restricted, residual, g.unsafe_h, g.opaque_dc)


def _passive(e: Expression) -> bool:
    from .terms import is_passive
    return is_passive(e)


def _active(e: Expression) -> bool:
    from .terms import is_active
    return is_active(e)


def _opaque_app(sig: Signature, head: Expression, m: int) -> bool:
    if not isinstance(head, Symbol) or head.kind == Kind.CONSTRUCTOR:
        return False
    if head.name not in sig.types:
        return False
    try:
        return typecheck.is_opaque(sig, head.name, m)
    except ValueError:
        return False


def check_admissibility(g: Goal) -> None:
    """Debug-mode invariants of admissible goals."""
    produced: list[Var] = []
    for _, t in g.productions:
        for v in free_vars(t):
            if v in produced:
                raise InvariantError(f"variable produced twice: {v!r}")
            produced.append(v)
    pv = set(produced)
    # the production relation must be acyclic
    edges: dict[Var, set[Var]] = {}
    for e, t in g.productions:
        for x in free_vars(e) & pv:
            edges.setdefault(x, set()).update(free_vars(t))
    seen: set[Var] = set()

    def dfs(v: Var, path: set[Var]) -> None:
        if v in path:
            raise InvariantError(f"cyclic production relation at {v!r}")
        if v in seen:
            return
        seen.add(v)
        for w in edges.get(v, ()):
            dfs(w, path | {v})

    for v in list(edges):
        dfs(v, set())
    domains: list[set[Var]] = []
    for name, s in zip("mhfr", g.stores()):
        s.check_invariant()
        dom = s.subst.domain()
        if dom & pv:
            raise InvariantError(f"produced variable bound in store {name}")
        for d in domains:
            if d & dom:
                raise InvariantError("store substitution domains overlap")
        domains.append(dom)
    for s in g.stores():
        for c in s.atoms:
            for other in g.stores():
                if other.subst.domain() & c.variables():
                    raise InvariantError(
                        "store constraint mentions a bound variable")
    for v, t in g.m.subst.mapping.items():
        if not isinstance(t, (IntLit, RealLit)) and t not in (TRUE, FALSE):
            raise InvariantError(f"mediatorial binding {v!r} -> {pp(t)}")
    for v, t in g.f.subst.mapping.items():
        if not isinstance(t, (IntLit, Var)):
            raise InvariantError(f"finite-domain binding {v!r} -> {pp(t)}")
    for v, t in g.r.subst.mapping.items():
        if not isinstance(t, RealLit) and not isinstance(t, Var):
            raise InvariantError(f"real binding {v!r} -> {pp(t)}")
