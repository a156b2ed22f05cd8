"""Lower global constraints into occupancy, bound and count variables.

AllDifferent/Permutation become interval-occupancy booleans ``A[i,l,u]``
(does ``X_i`` land in ``[l, u]``) plus one capacity sum per interval.  GCC and
Same add count variables ``N[l,u]`` tied together by prefix additivity
``N[1,u] = N[1,k] + N[k+1,u]``.  RC builds channel occupancies straight onto
the value set of ``X_i``; BC builds go through order literals
``B[i,l] <=> X_i <= l`` so only bounds of ``X_i`` are ever pruned.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .engine import Engine, Inconsistency
from .propagators import (
    AbsDiff,
    ChannelBound,
    ChannelConj,
    ChannelInterval,
    NotEqual,
    SumBool,
    Triangle,
)


class DecompositionError(ValueError):
    pass


class Consistency(enum.Enum):
    RC = "rc"
    BC = "bc"


class Kind(enum.Enum):
    ALLDIFFERENT = "alldifferent"
    PERMUTATION = "permutation"
    GCC = "gcc"
    SAME = "same"
    BICLIQUE = "biclique"


@dataclass(frozen=True)
class GlobalSpec:
    """A global constraint over positions ``0..n-1`` of a domain list.

    For ``SAME`` the first ``len(scope)`` positions are the X side and
    ``scope2`` names the Y side.  ``lower``/``upper`` are occurrence bounds for
    values ``base, base+1, ...``.
    """

    kind: Kind
    scope: Tuple[int, ...]
    consistency: Consistency = Consistency.RC
    lower: Optional[Tuple[int, ...]] = None
    upper: Optional[Tuple[int, ...]] = None
    scope2: Optional[Tuple[int, ...]] = None
    hall_cap: Optional[int] = None
    base: int = 1

    def __post_init__(self):
        if self.kind is Kind.GCC:
            if self.lower is None or self.upper is None or len(self.lower) != len(self.upper):
                raise DecompositionError("GCC needs equal-length lower/upper arrays")
            if any(lo > hi for lo, hi in zip(self.lower, self.upper)):
                raise DecompositionError("GCC lower bound exceeds upper bound")
        if self.kind is Kind.SAME and (self.scope2 is None or len(self.scope2) != len(self.scope)):
            raise DecompositionError("Same needs two scopes of equal length")
        if self.hall_cap is not None and self.hall_cap < 1:
            raise DecompositionError("hall_cap must be >= 1")


@dataclass
class DecompositionReport:
    occupancy_vars: int = 0
    bound_vars: int = 0
    count_vars: int = 0
    propagators: int = 0
    triangle_links: int = 0
    occupancy: Dict[Tuple[int, int, int], int] = field(default_factory=dict, repr=False)
    bounds: Dict[Tuple[int, int], int] = field(default_factory=dict, repr=False)
    counts: Dict[Tuple[int, int], int] = field(default_factory=dict, repr=False)

    def merge(self, other: "DecompositionReport") -> "DecompositionReport":
        self.occupancy_vars += other.occupancy_vars
        self.bound_vars += other.bound_vars
        self.count_vars += other.count_vars
        self.propagators += other.propagators
        self.triangle_links += other.triangle_links
        return self


def value_range(eng: Engine, xs: Sequence[int]) -> Tuple[int, int]:
    return min(eng.lb[x] for x in xs), max(eng.ub[x] for x in xs)


def hall_pairs(lo: int, hi: int, n: int, cap: Optional[int] = None) -> List[Tuple[int, int]]:
    """Intervals ``[l, u]`` inside ``[lo, hi]`` with ``u - l < n`` and width <= cap."""
    width = n if cap is None else min(n, cap)
    return [(l, u) for l in range(lo, hi + 1) for u in range(l, min(hi, l + width - 1) + 1)]


def all_pairs(lo: int, hi: int) -> List[Tuple[int, int]]:
    return [(l, u) for l in range(lo, hi + 1) for u in range(l, hi + 1)]


def _post(eng: Engine, rep: DecompositionReport, prop) -> None:
    eng.post(prop)
    rep.propagators += 1


def _restrict(eng: Engine, x: int, lo: int, hi: int) -> None:
    # root-level narrowing; a wipeout leaves the engine in sticky conflict
    try:
        eng.set_min(x, lo)
        eng.set_max(x, hi)
    except Inconsistency:
        eng._fail()


def _require_values(eng: Engine, xs: Sequence[int], what: str) -> None:
    for x in xs:
        if eng.vals[x] is None:
            raise DecompositionError(f"{what} needs value-set variables; {eng.names[x]} is bounds-only")


class _BoundLiterals:
    """Lazily created ``B[i,l] <=> X_i <= l`` literals with constant ends."""

    def __init__(self, eng: Engine, rep: DecompositionReport, lo: int, hi: int):
        self.eng, self.rep, self.lo, self.hi = eng, rep, lo, hi

    def get(self, i: int, x: int, l: int) -> int:
        if l < self.lo:
            return self.eng.const(0)
        if l >= self.hi:
            return self.eng.const(1)
        key = (i, l)
        b = self.rep.bounds.get(key)
        if b is None:
            b = self.eng.new_bool(f"B[{self.eng.names[x]},{l}]")
            self.rep.bounds[key] = b
            self.rep.bound_vars += 1
            _post(self.eng, self.rep, ChannelBound(b, x, l))
        return b


def _occupancy(
    eng: Engine,
    rep: DecompositionReport,
    xs: Sequence[int],
    pairs: Sequence[Tuple[int, int]],
    consistency: Consistency,
    lo: int,
    hi: int,
    tag: str = "A",
    offset: int = 0,
) -> Dict[Tuple[int, int], List[int]]:
    """Create ``A[i,l,u]`` for every pair; returns ``(l,u) -> [A_0, ..., A_n-1]``."""
    by_pair: Dict[Tuple[int, int], List[int]] = {p: [] for p in pairs}
    blits = _BoundLiterals(eng, rep, lo, hi) if consistency is Consistency.BC else None
    for i, x in enumerate(xs):
        for l, u in pairs:
            a = eng.new_bool(f"{tag}[{eng.names[x]},{l},{u}]")
            rep.occupancy[(offset + i, l, u)] = a
            rep.occupancy_vars += 1
            by_pair[(l, u)].append(a)
            if blits is None:
                _post(eng, rep, ChannelInterval(a, x, l, u))
            else:
                b_lo = blits.get(offset + i, x, l - 1)
                b_hi = blits.get(offset + i, x, u)
                _post(eng, rep, ChannelConj(a, b_lo, b_hi))
    return by_pair


def _post_hall(
    eng: Engine,
    xs: Sequence[int],
    consistency: Consistency,
    hall_cap: Optional[int],
    rel: str,
    lo: Optional[int] = None,
    hi: Optional[int] = None,
) -> DecompositionReport:
    rep = DecompositionReport()
    n = len(xs)
    if n == 0:
        return rep
    if consistency is Consistency.RC:
        _require_values(eng, xs, "RC decomposition")
    if lo is None:
        lo, hi = value_range(eng, xs)
    pairs = hall_pairs(lo, hi, n, hall_cap)
    by_pair = _occupancy(eng, rep, xs, pairs, consistency, lo, hi)
    for (l, u), occ in by_pair.items():
        _post(eng, rep, SumBool(occ, rel, u - l + 1))
    return rep


def post_alldiff_rc(eng: Engine, scope: Sequence[int], hall_cap: Optional[int] = None) -> DecompositionReport:
    """Occupancy channels on value sets plus ``sum_i A[i,l,u] <= u-l+1``."""
    return _post_hall(eng, scope, Consistency.RC, hall_cap, "<=")


def post_alldiff_bc(eng: Engine, scope: Sequence[int], hall_cap: Optional[int] = None) -> DecompositionReport:
    """Same capacity sums, with occupancies derived from order literals."""
    return _post_hall(eng, scope, Consistency.BC, hall_cap, "<=")


def post_alldiff(eng: Engine, scope: Sequence[int], consistency: Consistency, hall_cap: Optional[int] = None):
    if consistency is Consistency.RC:
        return post_alldiff_rc(eng, scope, hall_cap)
    return post_alldiff_bc(eng, scope, hall_cap)


def post_permutation(
    eng: Engine,
    scope: Sequence[int],
    consistency: Consistency = Consistency.RC,
    hall_cap: Optional[int] = None,
    base: Optional[int] = None,
) -> DecompositionReport:
    """Like AllDifferent but every interval sum is an equality.

    Values must be ``base .. base+n-1``; without ``base`` the union of the
    current domains has to span exactly ``n`` values.
    """
    n = len(scope)
    if n == 0:
        return DecompositionReport()
    if base is None:
        lo, hi = value_range(eng, scope)
        if hi - lo + 1 != n:
            raise DecompositionError(f"Permutation over {n} variables spans {hi - lo + 1} values")
    else:
        lo, hi = base, base + n - 1
        for x in scope:
            _restrict(eng, x, lo, hi)
        if eng.failed:
            return DecompositionReport()
    return _post_hall(eng, scope, consistency, hall_cap, "=", lo, hi)


def _count_family(
    eng: Engine,
    rep: DecompositionReport,
    lo: int,
    hi: int,
    n: int,
    lower: Optional[Sequence[int]] = None,
    upper: Optional[Sequence[int]] = None,
    tag: str = "N",
    singles: Optional[Dict[int, int]] = None,
) -> Dict[Tuple[int, int], int]:
    counts: Dict[Tuple[int, int], int] = {}
    for l, u in all_pairs(lo, hi):
        if singles is not None and l == u:
            counts[(l, u)] = singles[l]
            continue
        nv = eng.new_int(0, n, False, f"{tag}[{l},{u}]")
        rep.count_vars += 1
        counts[(l, u)] = nv
        if lower is not None:
            lsum = sum(lower[v - lo] for v in range(l, u + 1))
            usum = sum(upper[v - lo] for v in range(l, u + 1))
            _restrict(eng, nv, lsum, usum)
    _restrict(eng, counts[(lo, hi)], n, n)
    for u in range(lo + 1, hi + 1):
        for k in range(lo, u):
            _post(eng, rep, Triangle(counts[(lo, u)], counts[(lo, k)], counts[(k + 1, u)]))
            rep.triangle_links += 1
    return counts


def post_gcc(
    eng: Engine,
    scope: Sequence[int],
    lower: Sequence[int],
    upper: Sequence[int],
    consistency: Consistency = Consistency.RC,
    base: int = 1,
) -> DecompositionReport:
    """Value ``base + j`` must occur between ``lower[j]`` and ``upper[j]`` times."""
    if len(lower) != len(upper):
        raise DecompositionError("lower/upper length mismatch")
    if any(a > b for a, b in zip(lower, upper)):
        raise DecompositionError("GCC lower bound exceeds upper bound")
    rep = DecompositionReport()
    n = len(scope)
    d = len(lower)
    lo, hi = base, base + d - 1
    if consistency is Consistency.RC:
        _require_values(eng, scope, "RC decomposition")
    rep.counts = _count_family(eng, rep, lo, hi, n, lower, upper)
    if eng.failed:
        return rep
    by_pair = _occupancy(eng, rep, scope, all_pairs(lo, hi), consistency, lo, hi)
    for pair, occ in by_pair.items():
        _post(eng, rep, SumBool(occ, "=", rep.counts[pair], rhs_is_var=True))
    return rep


def post_same(
    eng: Engine,
    xs: Sequence[int],
    ys: Sequence[int],
    consistency: Consistency = Consistency.BC,
    share: bool = True,
    occurrence: Optional[Tuple[int, int]] = None,
) -> DecompositionReport:
    """``ys`` is a permutation of ``xs``.

    With ``share=True`` both sides count into one ``N[l,u]`` family.  With
    ``share=False`` each side gets its own family and only the per-value
    occurrence variables ``O_v`` (domain ``occurrence``, default ``[0, n]``)
    are common -- two extended GCCs glued at their cardinalities.
    """
    if len(xs) != len(ys):
        raise DecompositionError("Same needs scopes of equal length")
    rep = DecompositionReport()
    n = len(xs)
    if n == 0:
        return rep
    if consistency is Consistency.RC:
        _require_values(eng, list(xs) + list(ys), "RC decomposition")
    lo, hi = value_range(eng, list(xs) + list(ys))
    pairs = all_pairs(lo, hi)
    occ_x = _occupancy(eng, rep, xs, pairs, consistency, lo, hi, "A")
    occ_y = _occupancy(eng, rep, ys, pairs, consistency, lo, hi, "A'", offset=n)
    if share:
        cx = cy = _count_family(eng, rep, lo, hi, n)
        rep.counts = cx
    else:
        o_lo, o_hi = occurrence if occurrence is not None else (0, n)
        singles = {}
        for v in range(lo, hi + 1):
            singles[v] = eng.new_int(o_lo, o_hi, False, f"O[{v}]")
            rep.count_vars += 1
        cx = _count_family(eng, rep, lo, hi, n, tag="N", singles=singles)
        cy = _count_family(eng, rep, lo, hi, n, tag="N'", singles=singles)
        rep.counts = cx
    if eng.failed:
        return rep
    for pair in pairs:
        _post(eng, rep, SumBool(occ_x[pair], "=", cx[pair], rhs_is_var=True))
        _post(eng, rep, SumBool(occ_y[pair], "=", cy[pair], rhs_is_var=True))
    return rep


def post_bi_clique(eng: Engine, scope: Sequence[int], at_least_once: bool = False) -> DecompositionReport:
    """Pairwise ``X_i != X_j``.

    ``at_least_once`` adds, for each value, a width-1 occupancy channel per
    variable and ``sum_i A[i,v,v] >= 1`` (the permutation-strengthened clique).
    """
    rep = DecompositionReport()
    xs = list(scope)
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            _post(eng, rep, NotEqual(xs[i], xs[j]))
    if at_least_once and xs:
        _require_values(eng, xs, "value-support clauses")
        lo, hi = value_range(eng, xs)
        pairs = [(v, v) for v in range(lo, hi + 1)]
        by_pair = _occupancy(eng, rep, xs, pairs, Consistency.RC, lo, hi)
        for occ in by_pair.values():
            _post(eng, rep, SumBool(occ, ">=", 1))
    return rep


def post_abs_diff(eng: Engine, e: int, x: int, y: int) -> DecompositionReport:
    rep = DecompositionReport()
    _post(eng, rep, AbsDiff(e, x, y))
    return rep


def post_global(eng: Engine, con: GlobalSpec, xs: Sequence[int]) -> DecompositionReport:
    """Post ``con`` with its positions mapped to engine variables ``xs``."""
    scope = [xs[i] for i in con.scope]
    if con.kind is Kind.ALLDIFFERENT:
        return post_alldiff(eng, scope, con.consistency, con.hall_cap)
    if con.kind is Kind.PERMUTATION:
        return post_permutation(eng, scope, con.consistency, con.hall_cap, con.base)
    if con.kind is Kind.GCC:
        return post_gcc(eng, scope, con.lower, con.upper, con.consistency, con.base)
    if con.kind is Kind.SAME:
        return post_same(eng, scope, [xs[i] for i in con.scope2], con.consistency)
    if con.kind is Kind.BICLIQUE:
        return post_bi_clique(eng, scope)
    raise DecompositionError(f"unsupported kind {con.kind}")
