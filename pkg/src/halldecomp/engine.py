"""Trail-based finite-domain propagation engine.

Variables are integer intervals, optionally carrying an explicit value set so
that interior values can be removed.  Propagators subscribe to one of three
event classes on each variable they read:

* ``ON_BOUNDS``  -- the lower or upper bound moved,
* ``ON_FIXED``   -- the variable became a singleton,
* interval touch -- a change that can flip the status of the interval
  ``[l, u]`` (a removed value lies in it, or the domain just became a subset
  of it).

Domain changes are recorded on a trail so that :meth:`Engine.pop` restores the
store exactly.  Wipeouts raise :class:`Inconsistency` internally; the public
:meth:`Engine.prune` and :meth:`Engine.propagate` surface them as a sticky
conflict flag that only :meth:`Engine.pop` clears.
"""

from __future__ import annotations

import enum
import logging
import random
import time
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

log = logging.getLogger(__name__)

NEG_INF = -(1 << 60)
POS_INF = 1 << 60


class Inconsistency(Exception):
    """Raised inside propagation when a domain is wiped out."""


class EngineUsageError(Exception):
    """Misuse of the engine API (bad construction, pop at root, ...)."""


class PruneResult(enum.Enum):
    UNCHANGED = 0
    CHANGED = 1
    CONFLICT = 2


class Fixpoint(enum.Enum):
    FIXPOINT = 0
    CONFLICT = 1


class Event(enum.Enum):
    ON_BOUNDS = "bounds"
    ON_FIXED = "fixed"
    ON_DOMAIN = "domain"


class Branching(enum.Enum):
    LEX = "lex"
    MIN_DOMAIN = "mindom"


class SolveStatus(enum.Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    UNKNOWN = "UNKNOWN"


class Change(NamedTuple):
    """A pruning request for :meth:`Engine.prune`."""

    kind: str  # "remove" | "lb" | "ub" | "assign"
    value: int

    @classmethod
    def remove(cls, v: int) -> "Change":
        return cls("remove", v)

    @classmethod
    def tighten_lb(cls, v: int) -> "Change":
        return cls("lb", v)

    @classmethod
    def tighten_ub(cls, v: int) -> "Change":
        return cls("ub", v)

    @classmethod
    def assign(cls, v: int) -> "Change":
        return cls("assign", v)


@dataclass(frozen=True)
class DomainState:
    var_id: int
    lb: int
    ub: int
    values: Optional[frozenset] = None

    def __post_init__(self):
        if self.lb > self.ub:
            raise ValueError(f"empty domain [{self.lb}, {self.ub}]")
        if self.values is not None:
            if not self.values or min(self.values) != self.lb or max(self.values) != self.ub:
                raise ValueError("value set does not match bounds")

    def as_set(self) -> frozenset:
        if self.values is not None:
            return self.values
        return frozenset(range(self.lb, self.ub + 1))

    @property
    def size(self) -> int:
        return len(self.values) if self.values is not None else self.ub - self.lb + 1


class TrailEntry(NamedTuple):
    var_id: int
    lb: int
    ub: int
    removed: Optional[Tuple[int, ...]]
    level: int


@dataclass
class SearchStats:
    backtracks: int = 0
    nodes: int = 0
    wakeups: Counter = field(default_factory=Counter)
    wall_time: float = 0.0

    def as_dict(self) -> dict:
        return {
            "backtracks": self.backtracks,
            "nodes": self.nodes,
            "wakeups": dict(self.wakeups),
            "wall_time": self.wall_time,
        }


@dataclass
class SolveResult:
    status: SolveStatus
    assignment: Optional[Dict[int, int]]
    stats: SearchStats


class Propagator:
    """Base class.  Subclasses set ``kind`` and implement ``attach``/``propagate``.

    ``propagate`` must be monotone and idempotent; it may be woken spuriously.
    """

    kind = "propagator"
    idempotent = True

    def __init__(self):
        self.queued = False
        self.pid = -1

    def attach(self, eng: "Engine") -> None:
        raise NotImplementedError

    def propagate(self, eng: "Engine") -> None:
        raise NotImplementedError

    def variables(self) -> Tuple[int, ...]:
        return ()


class Engine:
    def __init__(self, trace: bool = False):
        self.lb: List[int] = []
        self.ub: List[int] = []
        self.vals: List[Optional[set]] = []
        self.names: List[str] = []
        self._w_bounds: List[list] = []
        self._w_fixed: List[list] = []
        self._w_domain: List[list] = []
        self._w_interval: List[list] = []
        self.props: List[Propagator] = []
        self._queue: deque = deque()
        self._trail: List[tuple] = []
        self._marks: List[int] = []
        self._current: Optional[Propagator] = None
        self._consts: Dict[int, int] = {}
        self._rng: Optional[random.Random] = None
        self.failed = False
        self.wakeups: Counter = Counter()
        self.trace_enabled = trace
        self.trace: List[Tuple[str, Tuple[int, int], Tuple[int, int]]] = []

    # ------------------------------------------------------------------ store

    def new_int(self, lb: int, ub: int, with_values: bool = False, name: Optional[str] = None) -> int:
        if lb > ub:
            raise EngineUsageError(f"new_int: lb {lb} > ub {ub}")
        if self._marks:
            raise EngineUsageError("variables must be created at the root level")
        x = len(self.lb)
        self.lb.append(lb)
        self.ub.append(ub)
        self.vals.append(set(range(lb, ub + 1)) if with_values else None)
        self.names.append(name if name is not None else f"_v{x}")
        self._w_bounds.append([])
        self._w_fixed.append([])
        self._w_domain.append([])
        self._w_interval.append([])
        return x

    def new_bool(self, name: Optional[str] = None) -> int:
        return self.new_int(0, 1, False, name)

    def new_from_values(self, values: Iterable[int], name: Optional[str] = None) -> int:
        vs = sorted(set(values))
        if not vs:
            raise EngineUsageError("empty value set")
        x = self.new_int(vs[0], vs[-1], True, name)
        self.vals[x].intersection_update(vs)
        return x

    def const(self, v: int) -> int:
        x = self._consts.get(v)
        if x is None:
            x = self.new_int(v, v, False, f"#{v}")
            self._consts[v] = x
        return x

    @property
    def num_vars(self) -> int:
        return len(self.lb)

    @property
    def level(self) -> int:
        return len(self._marks)

    def is_fixed(self, x: int) -> bool:
        return self.lb[x] == self.ub[x]

    def value(self, x: int) -> int:
        if self.lb[x] != self.ub[x]:
            raise EngineUsageError(f"{self.names[x]} is not fixed")
        return self.lb[x]

    def size(self, x: int) -> int:
        vs = self.vals[x]
        return len(vs) if vs is not None else self.ub[x] - self.lb[x] + 1

    def contains(self, x: int, v: int) -> bool:
        if v < self.lb[x] or v > self.ub[x]:
            return False
        vs = self.vals[x]
        return vs is None or v in vs

    def domain(self, x: int) -> DomainState:
        vs = self.vals[x]
        return DomainState(x, self.lb[x], self.ub[x], frozenset(vs) if vs is not None else None)

    def domain_values(self, x: int) -> List[int]:
        vs = self.vals[x]
        if vs is None:
            return list(range(self.lb[x], self.ub[x] + 1))
        return sorted(vs)

    def snapshot(self) -> tuple:
        """Hashable serialization of the whole domain store."""
        return tuple(
            (self.lb[x], self.ub[x], frozenset(self.vals[x]) if self.vals[x] is not None else None)
            for x in range(len(self.lb))
        )

    # ------------------------------------------------------------ subscription

    def post(self, prop: Propagator) -> Propagator:
        prop.pid = len(self.props)
        self.props.append(prop)
        prop.attach(self)
        self._schedule(prop)
        return prop

    def watch(self, x: int, prop: Propagator, event: Event) -> None:
        if event is Event.ON_BOUNDS:
            self._w_bounds[x].append(prop)
        elif event is Event.ON_FIXED:
            self._w_fixed[x].append(prop)
        else:
            self._w_domain[x].append(prop)

    def watch_interval(self, x: int, prop: Propagator, l: int, u: int) -> None:
        self._w_interval[x].append((l, u, prop))

    def set_queue_shuffle(self, rng: Optional[random.Random]) -> None:
        """Pop propagators in random order (confluence testing)."""
        self._rng = rng

    def _schedule(self, p: Propagator) -> None:
        if not p.queued:
            p.queued = True
            self._queue.append(p)

    def _notify(self, x: int, olb: int, oub: int, rmin: int, rmax: int) -> None:
        nlb = self.lb[x]
        nub = self.ub[x]
        if self.trace_enabled:
            self.trace.append((self.names[x], (olb, oub), (nlb, nub)))
        cur = self._current
        queue = self._queue
        for p in self._w_domain[x]:
            if not p.queued and p is not cur:
                p.queued = True
                queue.append(p)
        if nlb != olb or nub != oub:
            for p in self._w_bounds[x]:
                if not p.queued and p is not cur:
                    p.queued = True
                    queue.append(p)
            if nlb == nub:
                for p in self._w_fixed[x]:
                    if not p.queued and p is not cur:
                        p.queued = True
                        queue.append(p)
        for l, u, p in self._w_interval[x]:
            if p.queued or p is cur:
                continue
            if (rmin <= u and rmax >= l) or (
                nlb >= l and nub <= u and not (olb >= l and oub <= u)
            ):
                p.queued = True
                queue.append(p)

    # ---------------------------------------------------------------- pruning
    # These raise Inconsistency on wipeout and return True iff the domain changed.

    def set_min(self, x: int, v: int) -> bool:
        lb = self.lb[x]
        if v <= lb:
            return False
        ub = self.ub[x]
        if v > ub:
            raise Inconsistency(x)
        vs = self.vals[x]
        if vs is None:
            self._trail.append((x, lb, ub, None))
            self.lb[x] = v
            self._notify(x, lb, ub, lb, v - 1)
            return True
        removed = [w for w in range(lb, v) if w in vs]
        while v not in vs:
            v += 1
        vs.difference_update(removed)
        self._trail.append((x, lb, ub, removed))
        self.lb[x] = v
        self._notify(x, lb, ub, removed[0], removed[-1])
        return True

    def set_max(self, x: int, v: int) -> bool:
        ub = self.ub[x]
        if v >= ub:
            return False
        lb = self.lb[x]
        if v < lb:
            raise Inconsistency(x)
        vs = self.vals[x]
        if vs is None:
            self._trail.append((x, lb, ub, None))
            self.ub[x] = v
            self._notify(x, lb, ub, v + 1, ub)
            return True
        removed = [w for w in range(v + 1, ub + 1) if w in vs]
        while v not in vs:
            v -= 1
        vs.difference_update(removed)
        self._trail.append((x, lb, ub, removed))
        self.ub[x] = v
        self._notify(x, lb, ub, removed[0], removed[-1])
        return True

    def assign(self, x: int, v: int) -> bool:
        lb = self.lb[x]
        ub = self.ub[x]
        if v < lb or v > ub:
            raise Inconsistency(x)
        vs = self.vals[x]
        if vs is None:
            if lb == ub:
                return False
            self._trail.append((x, lb, ub, None))
            self.lb[x] = v
            self.ub[x] = v
            if v == lb:
                self._notify(x, lb, ub, v + 1, ub)
            elif v == ub:
                self._notify(x, lb, ub, lb, v - 1)
            else:
                self._notify(x, lb, ub, lb, ub)
            return True
        if v not in vs:
            raise Inconsistency(x)
        if lb == ub:
            return False
        removed = sorted(vs)
        removed.remove(v)
        vs.clear()
        vs.add(v)
        self._trail.append((x, lb, ub, removed))
        self.lb[x] = v
        self.ub[x] = v
        self._notify(x, lb, ub, removed[0], removed[-1])
        return True

    def remove(self, x: int, v: int) -> bool:
        lb = self.lb[x]
        ub = self.ub[x]
        if v < lb or v > ub:
            return False
        if v == lb:
            if lb == ub:
                raise Inconsistency(x)
            return self.set_min(x, v + 1)
        if v == ub:
            return self.set_max(x, v - 1)
        vs = self.vals[x]
        if vs is None or v not in vs:
            # bounds representation cannot hold holes
            return False
        vs.discard(v)
        self._trail.append((x, lb, ub, [v]))
        self._notify(x, lb, ub, v, v)
        return True

    def remove_range(self, x: int, l: int, u: int) -> bool:
        lb = self.lb[x]
        ub = self.ub[x]
        if u < lb or l > ub:
            return False
        if l <= lb:
            if u >= ub:
                raise Inconsistency(x)
            return self.set_min(x, u + 1)
        if u >= ub:
            return self.set_max(x, l - 1)
        vs = self.vals[x]
        if vs is None:
            return False
        removed = [w for w in range(l, u + 1) if w in vs]
        if not removed:
            return False
        vs.difference_update(removed)
        self._trail.append((x, lb, ub, removed))
        self._notify(x, lb, ub, removed[0], removed[-1])
        return True

    def prune(self, x: int, change: Change) -> PruneResult:
        """Apply one change outside of propagation.  Events are queued."""
        if self.failed:
            return PruneResult.CONFLICT
        kind, v = change
        try:
            if kind == "remove":
                changed = self.remove(x, v)
            elif kind == "lb":
                changed = self.set_min(x, v)
            elif kind == "ub":
                changed = self.set_max(x, v)
            elif kind == "assign":
                changed = self.assign(x, v)
            else:
                raise EngineUsageError(f"unknown change {kind!r}")
        except Inconsistency:
            self._fail()
            return PruneResult.CONFLICT
        return PruneResult.CHANGED if changed else PruneResult.UNCHANGED

    # ------------------------------------------------------------ propagation

    def _fail(self) -> None:
        self.failed = True
        for p in self._queue:
            p.queued = False
        self._queue.clear()
        self._current = None

    def propagate(self) -> Fixpoint:
        if self.failed:
            return Fixpoint.CONFLICT
        queue = self._queue
        wakeups = self.wakeups
        rng = self._rng
        try:
            while queue:
                if rng is None:
                    p = queue.popleft()
                else:
                    i = rng.randrange(len(queue))
                    queue[i], queue[-1] = queue[-1], queue[i]
                    p = queue.pop()
                p.queued = False
                wakeups[p.kind] += 1
                self._current = p if p.idempotent else None
                p.propagate(self)
            self._current = None
        except Inconsistency:
            self._fail()
            return Fixpoint.CONFLICT
        return Fixpoint.FIXPOINT

    propagate_fixpoint = propagate

    def schedule_all(self) -> None:
        for p in self.props:
            self._schedule(p)

    # ------------------------------------------------------------------ trail

    def push(self) -> int:
        self._marks.append(len(self._trail))
        return len(self._marks)

    def pop(self) -> int:
        if not self._marks:
            raise EngineUsageError("pop at root level")
        mark = self._marks.pop()
        trail = self._trail
        lbs, ubs, vals = self.lb, self.ub, self.vals
        while len(trail) > mark:
            x, lb, ub, removed = trail.pop()
            lbs[x] = lb
            ubs[x] = ub
            if removed:
                vals[x].update(removed)
        for p in self._queue:
            p.queued = False
        self._queue.clear()
        self.failed = False
        return len(self._marks)

    def trail_entries(self) -> List[TrailEntry]:
        out = []
        level = 0
        marks = self._marks
        for k, (x, lb, ub, removed) in enumerate(self._trail):
            while level < len(marks) and marks[level] <= k:
                level += 1
            out.append(TrailEntry(x, lb, ub, tuple(removed) if removed else None, level))
        return out

    # ----------------------------------------------------------------- search

    def solve(
        self,
        decision_vars: Sequence[int],
        branching: Branching = Branching.LEX,
        node_limit: Optional[int] = None,
        time_limit: Optional[float] = None,
    ) -> SolveResult:
        """Depth-first search with binary branching ``x = v`` / ``x != v``.

        Values are tried in ascending order; ties in variable selection go to
        the lowest position in ``decision_vars``.  The engine is returned to
        its starting level afterwards.
        """
        stats = SearchStats()
        start = time.perf_counter()
        wake0 = Counter(self.wakeups)
        base = self.level
        deadline = None if time_limit is None else start + time_limit
        dvars = list(decision_vars)
        lbs, ubs = self.lb, self.ub
        stack: List[Tuple[int, int]] = []
        status = SolveStatus.UNKNOWN
        assignment = None

        def select() -> Optional[int]:
            if branching is Branching.LEX:
                for x in dvars:
                    if lbs[x] != ubs[x]:
                        return x
                return None
            best, best_size = None, POS_INF
            for x in dvars:
                if lbs[x] != ubs[x]:
                    s = self.size(x)
                    if s < best_size:
                        best, best_size = x, s
            return best

        conflict = self.propagate() is Fixpoint.CONFLICT
        while True:
            if conflict:
                # unwind: the most recent decision x=v failed, post x != v
                while conflict:
                    if not stack:
                        status = SolveStatus.UNSAT
                        break
                    x, v = stack.pop()
                    self.pop()
                    stats.backtracks += 1
                    self.prune(x, Change.remove(v))
                    conflict = self.propagate() is Fixpoint.CONFLICT
                if status is SolveStatus.UNSAT:
                    break
            x = select()
            if x is None:
                assignment = {y: lbs[y] for y in dvars}
                self.schedule_all()
                if self.propagate() is Fixpoint.CONFLICT:
                    raise AssertionError("solution rejected by final re-propagation")
                status = SolveStatus.SAT
                break
            if node_limit is not None and stats.nodes >= node_limit:
                break
            if deadline is not None and (stats.nodes & 63) == 0 and time.perf_counter() > deadline:
                break
            v = lbs[x]
            self.push()
            stats.nodes += 1
            stack.append((x, v))
            self.prune(x, Change.assign(v))
            conflict = self.propagate() is Fixpoint.CONFLICT

        while self.level > base:
            self.pop()
        stats.wall_time = time.perf_counter() - start
        stats.wakeups = self.wakeups - wake0
        return SolveResult(status, assignment, stats)

    # ------------------------------------------------------------------- misc

    def describe(self, x: int) -> str:
        return f"{self.names[x]}{format_domain(self.domain_values(x))}"


def format_domain(values: Sequence[int]) -> str:
    """``[1, 2, 3, 5]`` -> ``{1..3,5}``."""
    if not values:
        return "{}"
    parts = []
    start = prev = values[0]
    for v in list(values[1:]) + [None]:
        if v is not None and v == prev + 1:
            prev = v
            continue
        parts.append(str(start) if start == prev else f"{start}..{prev}")
        if v is not None:
            start = prev = v
    return "{" + ",".join(parts) + "}"
