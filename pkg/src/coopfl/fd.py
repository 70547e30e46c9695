"""Finite-domain solver: propagation to a bounds-consistency fixpoint
plus depth-first labeling enumeration.

The solver accepts proper finite-domain atoms (``#+ #- #* #/ #<=
domain belongs labeling``) and int-specific equality/disequality atoms.
Internally, flattened ternary arithmetic is re-aggregated into exact
linear rows; connective temporaries (variables defined by a unit-pivot
equation and mentioned nowhere else) are eliminated by Gaussian
elimination and back-substituted at labeling leaves.  Propagation is
bounds-consistent for linear rows, interval-based for products and
truncated quotients, and hole-aware for disequalities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterator, Optional

from .constraints import (Constraint, FALSE, Store, TRUE, is_proper_fd,
                          store)
from .terms import (Expression, IntLit, Subst, Symbol, Var, free_vars,
                    spine)
from .typesys import EQ, FD_LE

INF = None  # unbounded domain side


class FDError(Exception):
    pass


class NotFDSpecific(FDError):
    pass


class UnboundedDomain(FDError):
    def __init__(self, var: Var):
        super().__init__(f"labeling variable {var!r} has an unbounded domain")
        self.var = var


class ChoiceCounter:
    """Counts every value tried during labeling."""

    def __init__(self) -> None:
        self.count = 0

    def tick(self) -> None:
        self.count += 1


@dataclass(frozen=True)
class FDDomain:
    lo: Optional[int] = INF
    hi: Optional[int] = INF
    holes: frozenset[int] = frozenset()

    def normalized(self) -> "FDDomain":
        lo, hi, holes = self.lo, self.hi, self.holes
        if lo is not None and hi is not None:
            holes = frozenset(h for h in holes if lo <= h <= hi)
            while lo is not None and hi is not None and lo <= hi and lo in holes:
                holes = holes - {lo}
                lo += 1
            while lo is not None and hi is not None and lo <= hi and hi in holes:
                holes = holes - {hi}
                hi -= 1
        return FDDomain(lo, hi, holes)

    def is_empty(self) -> bool:
        return self.lo is not None and self.hi is not None and self.lo > self.hi

    def is_bounded(self) -> bool:
        return self.lo is not None and self.hi is not None

    def is_singleton(self) -> bool:
        return self.is_bounded() and self.lo == self.hi

    def size(self) -> Optional[int]:
        if not self.is_bounded():
            return None
        return max(0, self.hi - self.lo + 1 - len(self.holes))

    def contains(self, v: int) -> bool:
        if self.lo is not None and v < self.lo:
            return False
        if self.hi is not None and v > self.hi:
            return False
        return v not in self.holes

    def with_lo(self, lo: int) -> "FDDomain":
        if self.lo is None or lo > self.lo:
            return FDDomain(lo, self.hi, self.holes).normalized()
        return self

    def with_hi(self, hi: int) -> "FDDomain":
        if self.hi is None or hi < self.hi:
            return FDDomain(self.lo, hi, self.holes).normalized()
        return self

    def without(self, v: int) -> "FDDomain":
        if not self.contains(v):
            return self
        return FDDomain(self.lo, self.hi, self.holes | {v}).normalized()

    def values(self) -> Iterator[int]:
        assert self.is_bounded()
        for v in range(self.lo, self.hi + 1):
            if v not in self.holes:
                yield v

    def __repr__(self) -> str:
        lo = "-inf" if self.lo is None else str(self.lo)
        hi = "+inf" if self.hi is None else str(self.hi)
        s = f"[{lo}..{hi}]"
        if self.holes:
            s += "\\" + "{" + ",".join(map(str, sorted(self.holes))) + "}"
        return s


TOP = FDDomain()

_BOOL_PRIMS = {FD_LE, "domain", "belongs", "labeling"}


def _ceil(q: Fraction) -> int:
    return math.ceil(q)


def _floor(q: Fraction) -> int:
    return math.floor(q)


@dataclass
class _Row:
    """Linear row sum(coeffs) <relation> const, relation '=' or '<='."""
    coeffs: dict[Var, Fraction]
    const: Fraction
    relation: str  # "=" | "<="

    def copy(self) -> "_Row":
        return _Row(dict(self.coeffs), self.const, self.relation)


def _trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


class FDStore:
    """Single-owner working state.  ``clone`` is used at labeling choice
    points; domains and rows are copied shallowly."""

    def __init__(self) -> None:
        self.domains: dict[Var, FDDomain] = {}
        self.alias: dict[Var, Var] = {}
        self.rows: list[_Row] = []
        self.products: list[tuple[Var | int, Var | int, Var | int]] = []
        self.quotients: list[tuple[Var | int, Var | int, Var | int]] = []
        self.neqs: list[tuple[Var | int, Var | int]] = []
        self.labelings: list[tuple[str, list[Var | int]]] = []
        self.parked: list[Constraint] = []
        self.defs: list[tuple[Var, _Row]] = []  # eliminated temporaries

    def clone(self) -> "FDStore":
        s = FDStore.__new__(FDStore)
        s.domains = dict(self.domains)
        s.alias = dict(self.alias)
        s.rows = [r.copy() for r in self.rows]
        s.products = list(self.products)
        s.quotients = list(self.quotients)
        s.neqs = list(self.neqs)
        s.labelings = list(self.labelings)
        s.parked = list(self.parked)
        s.defs = self.defs
        return s

    # ---- variable handling ----

    def find(self, v: Var) -> Var:
        while v in self.alias:
            v = self.alias[v]
        return v

    def dom(self, v: Var) -> FDDomain:
        return self.domains.get(self.find(v), TOP)

    def set_dom(self, v: Var, d: FDDomain) -> bool:
        d = d.normalized()
        if d.is_empty():
            return False
        self.domains[self.find(v)] = d
        return True

    def unify(self, a: Var, b: Var) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return True
        da, db = self.dom(ra), self.dom(rb)
        self.alias[rb] = ra
        self.domains.pop(rb, None)
        merged = FDDomain(
            _max_opt(da.lo, db.lo), _min_opt(da.hi, db.hi),
            da.holes | db.holes)
        for row in self.rows:
            if rb in row.coeffs:
                row.coeffs[ra] = row.coeffs.get(ra, Fraction(0)) + row.coeffs.pop(rb)
                if row.coeffs[ra] == 0:
                    del row.coeffs[ra]
        self.products = [tuple(ra if x == rb else x for x in p) for p in self.products]
        self.quotients = [tuple(ra if x == rb else x for x in p) for p in self.quotients]
        self.neqs = [tuple(ra if x == rb else x for x in p) for p in self.neqs]
        self.labelings = [(s, [ra if x == rb else x for x in vs])
                          for s, vs in self.labelings]
        return self.set_dom(ra, merged)

    def _side(self, e: Expression) -> Var | int:
        if isinstance(e, IntLit):
            return e.value
        if isinstance(e, Var):
            return self.find(e)
        raise NotFDSpecific(f"non-integer term in finite-domain atom: {e!r}")

    # ---- posting ----

    def post(self, c: Constraint) -> bool:
        """Register one atom; False on immediate inconsistency."""
        name = c.prim.name
        if name == EQ:
            return self._post_eq(c)
        if not is_proper_fd(c):
            raise NotFDSpecific(f"not a finite-domain atom: {c!r}")
        if name in _BOOL_PRIMS and isinstance(c.result, Var):
            # reified results are split into true/false instances upfront
            raise NotFDSpecific(f"unresolved variable result in {c!r}")
        if name in ("#+", "#-", "#*", "#/"):
            a, b = (self._side(x) for x in c.args)
            r = self._side(c.result)
            if name == "#+":
                return self._post_linear([(a, 1), (b, 1), (r, -1)], 0, "=")
            if name == "#-":
                return self._post_linear([(a, 1), (b, -1), (r, -1)], 0, "=")
            if name == "#*":
                if isinstance(a, int) or isinstance(b, int):
                    k, v = (a, b) if isinstance(a, int) else (b, a)
                    return self._post_linear([(v, k), (r, -1)], 0, "=")
                self.products.append((a, b, r))
                return True
            if isinstance(b, int):
                if b == 0:
                    return False
                self.quotients.append((a, b, r))
                return True
            self.quotients.append((a, b, r))
            return True
        if name == FD_LE:
            a, b = (self._side(x) for x in c.args)
            if c.result == TRUE:
                return self._post_linear([(a, 1), (b, -1)], 0, "<=")
            if c.result == FALSE:  # a > b, i.e. b - a <= -1
                return self._post_linear([(b, 1), (a, -1)], -1, "<=")
            raise NotFDSpecific(f"bad result in {c!r}")
        if name == "domain":
            return self._post_domain(c)
        if name == "belongs":
            return self._post_belongs(c)
        if name == "labeling":
            return self._post_labeling(c)
        raise NotFDSpecific(f"not a finite-domain atom: {c!r}")

    def _post_eq(self, c: Constraint) -> bool:
        a, b = (self._side(x) for x in c.args)
        if c.result == TRUE:
            if isinstance(a, int) and isinstance(b, int):
                return a == b
            if isinstance(a, Var) and isinstance(b, Var):
                return self.unify(a, b)
            v, k = (a, b) if isinstance(a, Var) else (b, a)
            return self.set_dom(v, self.dom(v).with_lo(k).with_hi(k))
        if c.result == FALSE:
            if isinstance(a, int) and isinstance(b, int):
                return a != b
            self.neqs.append((a, b))
            return True
        raise NotFDSpecific(f"bad result in {c!r}")

    def _post_linear(self, terms: list, const: int, relation: str) -> bool:
        cs: dict[Var, Fraction] = {}
        k = Fraction(const)
        for x, co in terms:
            if isinstance(x, int):
                k -= co * x
            else:
                cs[x] = cs.get(x, Fraction(0)) + Fraction(co)
                if cs[x] == 0:
                    del cs[x]
        if not cs:
            return k == 0 if relation == "=" else 0 <= k
        self.rows.append(_Row(cs, k, relation))
        return True

    def _post_domain(self, c: Constraint) -> bool:
        items = _int_list(c.args[0])
        lo, hi = c.args[1], c.args[2]
        if items is None or not isinstance(lo, IntLit) or not isinstance(hi, IntLit):
            self.parked.append(c)
            return True
        if c.result == FALSE:
            if lo.value > hi.value:
                return True
            self.parked.append(c)
            return True
        if c.result != TRUE:
            raise NotFDSpecific(f"bad result in {c!r}")
        if lo.value > hi.value:
            return False
        for item in items:
            x = self._side(item)
            if isinstance(x, int):
                if not lo.value <= x <= hi.value:
                    return False
            elif not self.set_dom(x, self.dom(x).with_lo(lo.value).with_hi(hi.value)):
                return False
        return True

    def _post_belongs(self, c: Constraint) -> bool:
        items = _int_list(c.args[1])
        if items is None or not all(isinstance(i, IntLit) for i in items):
            self.parked.append(c)
            return True
        values = sorted(i.value for i in items)
        x = self._side(c.args[0])
        if c.result == TRUE:
            if not values:
                return False
            if isinstance(x, int):
                return x in values
            d = self.dom(x).with_lo(values[0]).with_hi(values[-1])
            for v in range(values[0], values[-1] + 1):
                if v not in values:
                    d = d.without(v)
            return self.set_dom(x, d)
        if c.result == FALSE:
            if isinstance(x, int):
                return x not in values
            d = self.dom(x)
            for v in values:
                d = d.without(v)
            return self.set_dom(x, d)
        raise NotFDSpecific(f"bad result in {c!r}")

    def _post_labeling(self, c: Constraint) -> bool:
        if c.result == FALSE:
            return False  # labeling never returns false
        if c.result != TRUE:
            raise NotFDSpecific(f"bad result in {c!r}")
        strat_list = _expr_list(c.args[0])
        strategy = "naive"
        if strat_list is None:
            raise NotFDSpecific(f"labeling strategy is not a list: {c!r}")
        if strat_list:
            head = strat_list[0]
            if isinstance(head, Symbol) and head.name == "ff":
                strategy = "ff"
        items = _expr_list(c.args[1])
        if items is None:
            self.parked.append(c)
            return True
        self.labelings.append((strategy, [self._side(i) for i in items]))
        return True

    # ---- propagation ----

    def propagate(self) -> bool:
        """Bounds-consistency fixpoint; False on a domain wipe-out."""
        changed = True
        while changed:
            changed = False
            for row in self.rows:
                res = self._prop_row(row)
                if res is None:
                    return False
                changed = changed or res
            for trip in self.products:
                res = self._prop_product(trip)
                if res is None:
                    return False
                changed = changed or res
            for trip in self.quotients:
                res = self._prop_quotient(trip)
                if res is None:
                    return False
                changed = changed or res
            for a, b in self.neqs:
                res = self._prop_neq(a, b)
                if res is None:
                    return False
                changed = changed or res
        return True

    def _bounds(self, x: Var | int) -> tuple[Optional[int], Optional[int]]:
        if isinstance(x, int):
            return x, x
        d = self.dom(x)
        return d.lo, d.hi

    def _prop_row(self, row: _Row) -> Optional[bool]:
        changed = False
        for v, co in list(row.coeffs.items()):
            # interval [slo, shi] of the sum of the other terms
            slo: Optional[Fraction] = Fraction(0)
            shi: Optional[Fraction] = Fraction(0)
            for w, cw in row.coeffs.items():
                if w == v:
                    continue
                wlo, whi = self._bounds(w)
                tlo = cw * wlo if wlo is not None else None
                thi = cw * whi if whi is not None else None
                if cw < 0:
                    tlo, thi = thi, tlo
                slo = None if slo is None or tlo is None else slo + tlo
                shi = None if shi is None or thi is None else shi + thi
            # co*v + S (=|<=) const with S >= slo gives one bound on v;
            # for equalities S <= shi gives the other
            d = self.dom(v)
            if slo is not None:
                bound = (row.const - slo) / co
                nd = d.with_hi(_floor(bound)) if co > 0 else d.with_lo(_ceil(bound))
                if nd != d:
                    d, changed = nd, True
            if row.relation == "=" and shi is not None:
                bound = (row.const - shi) / co
                nd = d.with_lo(_ceil(bound)) if co > 0 else d.with_hi(_floor(bound))
                if nd != d:
                    d, changed = nd, True
            if d.is_empty():
                return None
            self.domains[self.find(v)] = d
        if not row.coeffs:
            if row.relation == "=" and row.const != 0:
                return None
            if row.relation == "<=" and row.const < 0:
                return None
        return changed

    def _prop_product(self, trip) -> Optional[bool]:
        a, b, r = trip
        alo, ahi = self._bounds(a)
        blo, bhi = self._bounds(b)
        changed = False
        if None not in (alo, ahi, blo, bhi):
            corners = [x * y for x in (alo, ahi) for y in (blo, bhi)]
            if isinstance(r, int):
                if not (min(corners) <= r <= max(corners)):
                    return None
            else:
                d = self.dom(r).with_lo(min(corners)).with_hi(max(corners))
                if d.is_empty():
                    return None
                if d != self.dom(r):
                    changed = True
                self.domains[self.find(r)] = d
        # backward: a singleton nonzero factor forces y = r / k exactly
        for x, y in ((a, b), (b, a)):
            xlo, xhi = self._bounds(x)
            if xlo is None or xlo != xhi:
                continue
            k = xlo
            rlo, rhi = self._bounds(r)
            if k == 0:
                if isinstance(r, Var):
                    d = self.dom(r).with_lo(0).with_hi(0)
                    if d.is_empty():
                        return None
                    changed = changed or d != self.dom(r)
                    self.domains[self.find(r)] = d
                elif r != 0:
                    return None
                continue
            if rlo is not None and rhi is not None and isinstance(y, Var):
                if k > 0:
                    ylo, yhi = _ceil(Fraction(rlo, k)), _floor(Fraction(rhi, k))
                else:
                    ylo, yhi = _ceil(Fraction(rhi, k)), _floor(Fraction(rlo, k))
                d = self.dom(y).with_lo(ylo).with_hi(yhi)
                if d.is_empty():
                    return None
                changed = changed or d != self.dom(y)
                self.domains[self.find(y)] = d
        # fully ground check
        if None not in (alo, ahi, blo, bhi) and alo == ahi and blo == bhi:
            rlo, rhi = self._bounds(r)
            if rlo is not None and rlo == rhi and alo * blo != rlo:
                return None
            if isinstance(r, Var):
                d = self.dom(r).with_lo(alo * blo).with_hi(alo * blo)
                if d.is_empty():
                    return None
                self.domains[self.find(r)] = d
        return changed

    def _prop_quotient(self, trip) -> Optional[bool]:
        a, b, r = trip
        blo, bhi = self._bounds(b)
        if blo is not None and bhi is not None and blo == bhi == 0:
            return None  # division by zero
        if isinstance(b, Var) and not self.set_dom(b, self.dom(b).without(0)):
            return None
        alo, ahi = self._bounds(a)
        blo, bhi = self._bounds(b)
        changed = False
        if None not in (alo, ahi, blo, bhi):
            cands = []
            bs = [v for v in (blo, bhi, -1, 1) if blo <= v <= bhi and v != 0]
            for x in (alo, ahi):
                for y in bs:
                    cands.append(_trunc_div(x, y))
            if cands:
                if isinstance(r, int):
                    if not (min(cands) <= r <= max(cands)):
                        return None
                else:
                    d = self.dom(r).with_lo(min(cands)).with_hi(max(cands))
                    if d.is_empty():
                        return None
                    if d != self.dom(r):
                        changed = True
                    self.domains[self.find(r)] = d
            if alo == ahi and blo == bhi:
                q = _trunc_div(alo, blo)
                rlo, rhi = self._bounds(r)
                if rlo is not None and rlo == rhi and rlo != q:
                    return None
                if isinstance(r, Var):
                    if not self.set_dom(r, self.dom(r).with_lo(q).with_hi(q)):
                        return None
        return changed

    def _prop_neq(self, a, b) -> Optional[bool]:
        alo, ahi = self._bounds(a)
        blo, bhi = self._bounds(b)
        if alo is not None and alo == ahi and blo is not None and blo == bhi:
            return None if alo == blo else False
        changed = False
        if alo is not None and alo == ahi and isinstance(b, Var):
            d = self.dom(b).without(alo)
            if d.is_empty():
                return None
            changed = d != self.dom(b)
            self.domains[self.find(b)] = d
        if blo is not None and blo == bhi and isinstance(a, Var):
            d = self.dom(a).without(blo)
            if d.is_empty():
                return None
            changed = changed or d != self.dom(a)
            self.domains[self.find(a)] = d
        if isinstance(a, Var) and isinstance(b, Var) and self.find(a) == self.find(b):
            return None
        return changed

    # ---- temporaries ----

    def eliminate_temporaries(self) -> None:
        """Gaussian-eliminate variables that only connect equality rows
        (no domain, no holes, no other attachments); keeps definitions
        for back-substitution at leaves."""
        protected: set[Var] = set(self.domains)
        for p in self.products + self.quotients:
            protected |= {x for x in p if isinstance(x, Var)}
        for a, b in self.neqs:
            protected |= {x for x in (a, b) if isinstance(x, Var)}
        for _, vs in self.labelings:
            protected |= {x for x in vs if isinstance(x, Var)}
        for c in self.parked:
            protected |= {self.find(v) for v in c.variables()}
        while True:
            target = None
            for i, row in enumerate(self.rows):
                if row.relation != "=":
                    continue
                for v in row.coeffs:
                    if v not in protected:
                        target = (i, v)
                        break
                if target:
                    break
            if not target:
                return
            i, v = target
            pivot = self.rows.pop(i)
            co = pivot.coeffs.pop(v)
            # v = (const - rest)/co
            definition = _Row({w: -cw / co for w, cw in pivot.coeffs.items()},
                              pivot.const / co, "=")
            self.defs = self.defs + [(v, definition)]
            for row in self.rows:
                if v in row.coeffs:
                    k = row.coeffs.pop(v)
                    for w, cw in definition.coeffs.items():
                        row.coeffs[w] = row.coeffs.get(w, Fraction(0)) + k * cw
                        if row.coeffs[w] == 0:
                            del row.coeffs[w]
                    row.const -= k * definition.const


def _max_opt(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


def _min_opt(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _expr_list(e: Expression) -> Optional[list[Expression]]:
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


def _int_list(e: Expression) -> Optional[list[Expression]]:
    items = _expr_list(e)
    if items is None:
        return None
    if all(isinstance(i, (Var, IntLit)) for i in items):
        return items
    return None


def post_all(atoms) -> Optional[FDStore]:
    st = FDStore()
    for c in atoms:
        if not st.post(c):
            return None
    st.eliminate_temporaries()
    return st


def _extract(st: FDStore, atoms) -> Optional[Store]:
    """Build the result store: singleton bindings + alias bindings, then
    residual (non-ground-true) atoms."""
    binding: dict[Var, Expression] = {}
    for v in st.alias:
        r = st.find(v)
        d = st.dom(r)
        binding[v] = IntLit(d.lo) if d.is_singleton() else r
    for v, d in st.domains.items():
        if d.is_singleton():
            binding[v] = IntLit(d.lo)
    # back-substitute eliminated temporaries where fully determined
    sub = Subst(binding)
    for v, definition in reversed(st.defs):
        val = definition.const
        ok = True
        for w, cw in definition.coeffs.items():
            got = sub.apply(st.find(w) if isinstance(w, Var) else w)
            if isinstance(got, IntLit):
                val += cw * got.value
            else:
                ok = False
                break
        if ok and val.denominator == 1:
            binding[v] = IntLit(int(val))
            sub = Subst(binding)
        elif ok:
            return None  # temp forced to a non-integer value
    residual = []
    for c in atoms:
        c2 = c.apply(sub)
        if not c2.variables():
            holds = ground_holds(c2)
            if holds is False:
                return None
            if holds is True:
                continue
        if c2 not in residual:
            residual.append(c2)
    return Store(tuple(residual), sub)


def ground_holds(c: Constraint) -> Optional[bool]:
    """Evaluate a ground finite-domain atom; None if not decidable."""
    name = c.prim.name

    def ival(e):
        return e.value if isinstance(e, IntLit) else None

    if name in ("#+", "#-", "#*", "#/"):
        a, b, r = ival(c.args[0]), ival(c.args[1]), ival(c.result)
        if None in (a, b, r):
            return None
        if name == "#+":
            return a + b == r
        if name == "#-":
            return a - b == r
        if name == "#*":
            return a * b == r
        return b != 0 and _trunc_div(a, b) == r
    if name == FD_LE:
        a, b = ival(c.args[0]), ival(c.args[1])
        if None in (a, b):
            return None
        return (a <= b) == (c.result == TRUE)
    if name == EQ:
        a, b = ival(c.args[0]), ival(c.args[1])
        if None in (a, b):
            return None
        return (a == b) == (c.result == TRUE)
    if name == "domain":
        items = _int_list(c.args[0])
        lo, hi = c.args[1], c.args[2]
        if items is None or not isinstance(lo, IntLit) or not isinstance(hi, IntLit):
            return None
        vals = [ival(i) for i in items]
        if None in vals:
            return None
        inside = (lo.value <= hi.value
                  and all(lo.value <= v <= hi.value for v in vals))
        return inside == (c.result == TRUE)
    if name == "belongs":
        x = ival(c.args[0])
        items = _int_list(c.args[1])
        if x is None or items is None:
            return None
        vals = [ival(i) for i in items]
        if None in vals:
            return None
        return (x in vals) == (c.result == TRUE)
    if name == "labeling":
        return c.result == TRUE
    return None


def _label_vars(st: FDStore) -> tuple[str, list[Var]]:
    strategy = st.labelings[0][0]
    seen: list[Var] = []
    for _, vs in st.labelings:
        for x in vs:
            if isinstance(x, Var):
                r = st.find(x)
                if r not in seen:
                    seen.append(r)
    return strategy, seen


def _enumerate(st: FDStore, variables: list[Var], strategy: str,
               counter: Optional[ChoiceCounter]) -> Iterator[FDStore]:
    pending = [v for v in variables if not st.dom(v).is_singleton()]
    if not pending:
        for v in variables:
            if counter:
                counter.tick()
        yield st
        return
    for v in variables:
        if not st.dom(v).is_bounded():
            raise UnboundedDomain(v)

    def rec(s: FDStore, todo: list[Var]) -> Iterator[FDStore]:
        if not todo:
            yield s
            return
        if strategy == "ff":
            todo = sorted(todo, key=lambda v: (s.dom(v).size(), todo.index(v)))
        v, rest = todo[0], todo[1:]
        for value in list(s.dom(v).values()):
            if counter:
                counter.tick()
            child = s.clone()
            if not child.set_dom(v, FDDomain(value, value)):
                continue
            if not child.propagate():
                continue
            yield from rec(child, rest)

    # count singleton variables once each, like an actual assignment
    for v in variables:
        if st.dom(v).is_singleton() and counter:
            counter.tick()
    yield from rec(st, pending)


def solve(atoms, counter: Optional[ChoiceCounter] = None,
          label_override: Optional[str] = None) -> Iterator[Store]:
    """Post + propagate + (labeling when present); yields solved-form
    alternatives lazily.  Yields nothing on failure."""
    atoms = list(atoms)
    for c in atoms:
        if c.prim.name in _BOOL_PRIMS and isinstance(c.result, Var):
            for val in (TRUE, FALSE):
                sub = Subst({c.result: val})
                inst = [a.apply(sub) for a in atoms]
                for st_out in solve(inst, counter, label_override):
                    yield Store(st_out.atoms, sub.compose(st_out.subst))
            return
    st = post_all(atoms)
    if st is None:
        return
    if label_override == "ff":
        st.labelings = [("ff", vs) for _, vs in st.labelings]
    if not st.propagate():
        return
    if not st.labelings:
        out = _extract(st, atoms)
        if out is not None:
            yield out
        return
    strategy, variables = _label_vars(st)
    for leaf in _enumerate(st, variables, strategy, counter):
        out = _extract(leaf, atoms)
        if out is not None:
            yield out


def is_solved(atoms) -> bool:
    """A store is solved iff solving returns it unchanged: no labeling
    pending, no simplification, no new bindings."""
    atoms = list(atoms)
    st = post_all(atoms)
    if st is None:
        return False
    if st.labelings:
        return False
    if not st.propagate():
        return False
    out = _extract(st, atoms)
    if out is None:
        return False
    return list(out.atoms) == atoms and not out.subst
