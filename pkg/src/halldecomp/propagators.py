"""Primitive propagators the global-constraint decompositions are built from.

Every class here enforces its relation to a fixpoint in one call, so the
engine never needs to re-wake a propagator because of its own pruning.
"""

from __future__ import annotations

from typing import Optional, Sequence

from .engine import NEG_INF, Engine, Event, Inconsistency, Propagator


class ChannelInterval(Propagator):
    """``A = 1  <=>  X in [l, u]`` at value level (holes allowed in X)."""

    kind = "channel_interval"

    def __init__(self, a: int, x: int, l: int, u: int):
        super().__init__()
        self.a, self.x, self.l, self.u = a, x, l, u

    def attach(self, eng):
        eng.watch(self.a, self, Event.ON_FIXED)
        eng.watch_interval(self.x, self, self.l, self.u)

    def variables(self):
        return (self.a, self.x)

    def propagate(self, eng):
        a, x, l, u = self.a, self.x, self.l, self.u
        if eng.lb[a] == 1:
            eng.set_min(x, l)
            eng.set_max(x, u)
            return
        if eng.ub[a] == 0:
            eng.remove_range(x, l, u)
            return
        xl, xu = eng.lb[x], eng.ub[x]
        if xu < l or xl > u:
            eng.assign(a, 0)
        elif l <= xl and xu <= u:
            eng.assign(a, 1)
        else:
            vs = eng.vals[x]
            if vs is not None:
                for v in range(max(l, xl), min(u, xu) + 1):
                    if v in vs:
                        return
                eng.assign(a, 0)


class ChannelBound(Propagator):
    """``B = 1  <=>  X <= l``, pruning only the bounds of X."""

    kind = "channel_bound"

    def __init__(self, b: int, x: int, l: int):
        super().__init__()
        self.b, self.x, self.l = b, x, l

    def attach(self, eng):
        eng.watch(self.b, self, Event.ON_FIXED)
        # wakes when X's bounds reach l from either side
        eng.watch_interval(self.x, self, NEG_INF, self.l)

    def variables(self):
        return (self.b, self.x)

    def propagate(self, eng):
        b, x, l = self.b, self.x, self.l
        if eng.lb[b] == 1:
            eng.set_max(x, l)
        elif eng.ub[b] == 0:
            eng.set_min(x, l + 1)
        elif eng.ub[x] <= l:
            eng.assign(b, 1)
        elif eng.lb[x] > l:
            eng.assign(b, 0)


class ChannelConj(Propagator):
    """``A = 1  <=>  (B_lo = 0 and B_hi = 1)`` on 0/1 variables."""

    kind = "channel_conj"

    def __init__(self, a: int, b_lo: int, b_hi: int):
        super().__init__()
        self.a, self.b_lo, self.b_hi = a, b_lo, b_hi

    def attach(self, eng):
        for v in (self.a, self.b_lo, self.b_hi):
            eng.watch(v, self, Event.ON_FIXED)

    def variables(self):
        return (self.a, self.b_lo, self.b_hi)

    def propagate(self, eng):
        a, lo, hi = self.a, self.b_lo, self.b_hi
        lb, ub = eng.lb, eng.ub
        if lb[a] == 1:
            eng.assign(lo, 0)
            eng.assign(hi, 1)
            return
        if lb[lo] == 1 or ub[hi] == 0:
            eng.assign(a, 0)
            return
        if ub[lo] == 0 and lb[hi] == 1:
            eng.assign(a, 1)
            return
        if ub[a] == 0:
            if ub[lo] == 0:
                eng.assign(hi, 0)
            elif lb[hi] == 1:
                eng.assign(lo, 1)


class SumBool(Propagator):
    """Bounds consistency on ``sum(bools) rel rhs``.

    ``rel`` is one of ``"<="``, ``"="``, ``">="``.  ``rhs`` is either an
    ``int`` or, with ``rhs_is_var=True``, the id of an integer variable (which
    only makes sense with ``"="``).  On 0/1 variables BC and DC coincide.
    """

    kind = "sum_bool"

    def __init__(self, bools: Sequence[int], rel: str, rhs: int, rhs_is_var: bool = False):
        super().__init__()
        if rel not in ("<=", "=", ">="):
            raise ValueError(f"bad relation {rel!r}")
        if rhs_is_var and rel != "=":
            raise ValueError("variable right-hand side requires '='")
        self.bools = tuple(bools)
        self.rel = rel
        self.rhs = rhs
        self.rhs_is_var = rhs_is_var

    def attach(self, eng):
        for b in self.bools:
            eng.watch(b, self, Event.ON_FIXED)
        if self.rhs_is_var:
            eng.watch(self.rhs, self, Event.ON_BOUNDS)

    def variables(self):
        return self.bools + ((self.rhs,) if self.rhs_is_var else ())

    def propagate(self, eng):
        lb, ub = eng.lb, eng.ub
        ones = 0
        free = 0
        for b in self.bools:
            if lb[b]:
                ones += 1
            elif ub[b]:
                free += 1
        if self.rhs_is_var:
            n = self.rhs
            eng.set_min(n, ones)
            eng.set_max(n, ones + free)
            lo, hi = lb[n], ub[n]
        else:
            c = self.rhs
            lo = c if self.rel != "<=" else 0
            hi = c if self.rel != ">=" else len(self.bools)
            if ones > hi or ones + free < lo:
                raise Inconsistency(self)
        if not free:
            return
        if ones == hi:
            for b in self.bools:
                if not lb[b] and ub[b]:
                    eng.assign(b, 0)
        elif ones + free == lo:
            for b in self.bools:
                if not lb[b] and ub[b]:
                    eng.assign(b, 1)


class Triangle(Propagator):
    """Bounds consistency on ``total = left + right``."""

    kind = "triangle"

    def __init__(self, total: int, left: int, right: int):
        super().__init__()
        self.total, self.left, self.right = total, left, right

    def attach(self, eng):
        for v in (self.total, self.left, self.right):
            eng.watch(v, self, Event.ON_BOUNDS)

    def variables(self):
        return (self.total, self.left, self.right)

    def propagate(self, eng):
        x, y, z = self.total, self.left, self.right
        lb, ub = eng.lb, eng.ub
        changed = True
        while changed:
            changed = eng.set_min(x, lb[y] + lb[z])
            changed |= eng.set_max(x, ub[y] + ub[z])
            changed |= eng.set_min(y, lb[x] - ub[z])
            changed |= eng.set_max(y, ub[x] - lb[z])
            changed |= eng.set_min(z, lb[x] - ub[y])
            changed |= eng.set_max(z, ub[x] - lb[y])


class NotEqual(Propagator):
    """``X != Y``, acting only once one side is fixed."""

    kind = "not_equal"

    def __init__(self, x: int, y: int):
        super().__init__()
        self.x, self.y = x, y

    def attach(self, eng):
        eng.watch(self.x, self, Event.ON_FIXED)
        eng.watch(self.y, self, Event.ON_FIXED)

    def variables(self):
        return (self.x, self.y)

    def propagate(self, eng):
        x, y = self.x, self.y
        if eng.lb[x] == eng.ub[x]:
            eng.remove(y, eng.lb[x])
        if eng.lb[y] == eng.ub[y]:
            eng.remove(x, eng.lb[y])


def _supported(y_lo, y_hi, e_lo, e_hi, x):
    """Is there y in [y_lo, y_hi] with |x - y| in [e_lo, e_hi]?"""
    e_lo = max(e_lo, 0)
    if e_lo > e_hi:
        return False
    # y in [x - e_hi, x - e_lo] or [x + e_lo, x + e_hi]
    if max(y_lo, x - e_hi) <= min(y_hi, x - e_lo):
        return True
    return max(y_lo, x + e_lo) <= min(y_hi, x + e_hi)


class AbsDiff(Propagator):
    """Bounds consistency on ``E = |X - Y|``."""

    kind = "abs_diff"

    def __init__(self, e: int, x: int, y: int):
        super().__init__()
        self.e, self.x, self.y = e, x, y

    def attach(self, eng):
        for v in (self.e, self.x, self.y):
            eng.watch(v, self, Event.ON_BOUNDS)

    def variables(self):
        return (self.e, self.x, self.y)

    def propagate(self, eng):
        e, x, y = self.e, self.x, self.y
        lb, ub = eng.lb, eng.ub
        changed = True
        while changed:
            changed = False
            # E from the range of X - Y
            dlo, dhi = lb[x] - ub[y], ub[x] - lb[y]
            if dlo > 0:
                emin, emax = dlo, dhi
            elif dhi < 0:
                emin, emax = -dhi, -dlo
            else:
                emin, emax = 0, max(-dlo, dhi)
            changed |= eng.set_min(e, emin)
            changed |= eng.set_max(e, emax)
            for a, b in ((x, y), (y, x)):
                while not _supported(lb[b], ub[b], lb[e], ub[e], lb[a]):
                    eng.set_min(a, lb[a] + 1)
                    changed = True
                while not _supported(lb[b], ub[b], lb[e], ub[e], ub[a]):
                    eng.set_max(a, ub[a] - 1)
                    changed = True
            # E's bounds need a witness pair with exactly that distance
            while not _e_supported(lb[x], ub[x], lb[y], ub[y], lb[e]):
                eng.set_min(e, lb[e] + 1)
                changed = True
            while not _e_supported(lb[x], ub[x], lb[y], ub[y], ub[e]):
                eng.set_max(e, ub[e] - 1)
                changed = True


def _e_supported(x_lo, x_hi, y_lo, y_hi, d):
    # x - y ranges over the full interval [x_lo - y_hi, x_hi - y_lo]
    lo, hi = x_lo - y_hi, x_hi - y_lo
    return lo <= d <= hi or lo <= -d <= hi


def post_channel_interval(eng: Engine, a: int, x: int, l: int, u: int) -> Propagator:
    return eng.post(ChannelInterval(a, x, l, u))


def post_channel_bound(eng: Engine, b: int, x: int, l: int) -> Propagator:
    return eng.post(ChannelBound(b, x, l))


def post_channel_conj(eng: Engine, a: int, b_lo: int, b_hi: int) -> Propagator:
    return eng.post(ChannelConj(a, b_lo, b_hi))


def post_sum_bool(eng: Engine, bools: Sequence[int], rel: str, rhs: int, rhs_var: Optional[int] = None) -> Propagator:
    if rhs_var is not None:
        return eng.post(SumBool(bools, rel, rhs_var, rhs_is_var=True))
    return eng.post(SumBool(bools, rel, rhs))


def post_triangle(eng: Engine, total: int, left: int, right: int) -> Propagator:
    return eng.post(Triangle(total, left, right))
