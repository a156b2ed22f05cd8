"""Brute-force DC / RC / BC enforcement for small instances.

Support search is plain backtracking over the constraint's semantics with a
cheap partial-assignment filter; nothing here is meant to be fast.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .decomp import GlobalSpec, Kind

DEFAULT_CAP = 10**7

Domains = List[frozenset]


class OracleCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleInstance:
    domains: Tuple[frozenset, ...]
    constraint: GlobalSpec

    @classmethod
    def of(cls, domains, constraint: GlobalSpec) -> "OracleInstance":
        return cls(tuple(frozenset(d) for d in domains), constraint)


def _positions(con: GlobalSpec) -> List[int]:
    pos = list(con.scope)
    if con.kind is Kind.SAME:
        pos += list(con.scope2)
    return pos


def satisfies(con: GlobalSpec, values: Dict[int, int]) -> bool:
    """Evaluate ``con`` on a total assignment ``position -> value``."""
    xs = [values[i] for i in con.scope]
    if con.kind in (Kind.ALLDIFFERENT, Kind.BICLIQUE):
        return len(set(xs)) == len(xs)
    if con.kind is Kind.PERMUTATION:
        return sorted(xs) == list(range(con.base, con.base + len(xs)))
    if con.kind is Kind.GCC:
        counts = Counter(xs)
        d = len(con.lower)
        if any(not con.base <= v < con.base + d for v in xs):
            return False
        return all(con.lower[j] <= counts[con.base + j] <= con.upper[j] for j in range(d))
    if con.kind is Kind.SAME:
        ys = [values[i] for i in con.scope2]
        return Counter(xs) == Counter(ys)
    raise ValueError(con.kind)


def _partial_ok(con: GlobalSpec) -> Callable[[Dict[int, int], Dict[int, Sequence[int]]], bool]:
    """Necessary condition for a partial assignment to extend."""
    if con.kind in (Kind.ALLDIFFERENT, Kind.BICLIQUE, Kind.PERMUTATION):
        scope = con.scope

        def ok(asg, _doms):
            seen = set()
            for i in scope:
                v = asg.get(i)
                if v is not None:
                    if v in seen:
                        return False
                    seen.add(v)
            return True

        return ok
    if con.kind is Kind.GCC:
        base, lower, upper = con.base, con.lower, con.upper
        scope = con.scope

        def ok(asg, doms):
            counts = Counter(asg[i] for i in scope if i in asg)
            for v, c in counts.items():
                j = v - base
                if j < 0 or j >= len(upper) or c > upper[j]:
                    return False
            # every value still short of its lower bound needs enough free variables
            free = [i for i in scope if i not in asg]
            need = sum(max(0, lower[j] - counts[base + j]) for j in range(len(lower)))
            if need > len(free):
                return False
            for j in range(len(lower)):
                short = lower[j] - counts[base + j]
                if short > 0 and sum(1 for i in free if base + j in doms[i]) < short:
                    return False
            return True

        return ok
    if con.kind is Kind.SAME:
        xs, ys = con.scope, con.scope2

        def ok(asg, doms):
            cx = Counter(asg[i] for i in xs if i in asg)
            cy = Counter(asg[i] for i in ys if i in asg)
            fx = [i for i in xs if i not in asg]
            fy = [i for i in ys if i not in asg]
            for v, c in cx.items():
                if c > cy[v] + sum(1 for i in fy if v in doms[i]):
                    return False
            for v, c in cy.items():
                if c > cx[v] + sum(1 for i in fx if v in doms[i]):
                    return False
            return True

        return ok
    raise ValueError(con.kind)


def _search(con, doms: Dict[int, Sequence[int]], order: Sequence[int], ok, first_only: bool, out: list) -> bool:
    asg: Dict[int, int] = {}

    def rec(k: int) -> bool:
        if k == len(order):
            if satisfies(con, asg):
                out.append(dict(asg))
                return first_only
            return False
        i = order[k]
        for v in doms[i]:
            asg[i] = v
            if ok(asg, doms) and rec(k + 1):
                return True
            del asg[i]
        return False

    return rec(0)


def _check_cap(domains, cap):
    space = math.prod(len(d) for d in domains)
    if space > cap:
        raise OracleCapExceeded(f"assignment space {space} exceeds cap {cap}")


def has_support(con: GlobalSpec, doms: Dict[int, Sequence[int]]) -> bool:
    out: list = []
    order = sorted(doms, key=lambda i: (len(doms[i]), i))
    return _search(con, doms, order, _partial_ok(con), True, out)


def _ranges(domains: Sequence[frozenset]) -> List[List[int]]:
    return [list(range(min(d), max(d) + 1)) for d in domains]


def _supported(con, i, v, relaxed: Sequence[List[int]], positions) -> bool:
    doms = {j: relaxed[j] for j in positions}
    doms[i] = [v]
    return has_support(con, doms)


def enforce(consistency: str, inst: OracleInstance, cap: int = DEFAULT_CAP) -> Optional[List[frozenset]]:
    """Return the pruned domains, or ``None`` when the constraint is infeasible.

    ``consistency`` is ``"dc"``, ``"rc"`` or ``"bc"``.  Only positions in the
    constraint's scope are touched.
    """
    consistency = consistency.lower()
    if consistency not in ("dc", "rc", "bc"):
        raise ValueError(consistency)
    con = inst.constraint
    domains = [frozenset(d) for d in inst.domains]
    _check_cap(domains, cap)
    positions = _positions(con)
    if any(not domains[i] for i in positions):
        return None
    changed = True
    while changed:
        changed = False
        if consistency == "dc":
            support_doms = [sorted(d) for d in domains]
        else:
            support_doms = _ranges(domains)
        for i in positions:
            dom = domains[i]
            if consistency == "bc":
                vals = sorted(dom)
                lo, hi = 0, len(vals) - 1
                while lo <= hi and not _supported(con, i, vals[lo], support_doms, positions):
                    lo += 1
                while hi >= lo and not _supported(con, i, vals[hi], support_doms, positions):
                    hi -= 1
                new = frozenset(vals[lo:hi + 1])
            else:
                new = frozenset(v for v in dom if _supported(con, i, v, support_doms, positions))
            if not new:
                return None
            if new != dom:
                domains[i] = new
                changed = True
                if consistency != "dc":
                    support_doms = _ranges(domains)
                else:
                    support_doms = [sorted(d) for d in domains]
    return domains


def enumerate_solutions(inst: OracleInstance, cap: int = DEFAULT_CAP) -> List[Tuple[int, ...]]:
    """All satisfying tuples over the scope positions, in lexicographic order."""
    con = inst.constraint
    positions = _positions(con)
    doms = {i: sorted(inst.domains[i]) for i in positions}
    _check_cap([inst.domains[i] for i in positions], cap)
    out: list = []
    _search(con, doms, positions, _partial_ok(con), False, out)
    return [tuple(a[i] for i in positions) for a in out]
