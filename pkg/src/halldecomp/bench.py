"""Benchmark harness: solve instances under several lowerings, collect rows."""

from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from .engine import Branching, SolveStatus
from .instance import InstanceFile, Method, build, check_solution, dumps, load, loads

log = logging.getLogger(__name__)

CSV_COLUMNS = ("instance", "method", "verdict", "backtracks", "nodes", "time_ms")
VERDICTS = ("SAT", "UNSAT", "TIMEOUT")


class BenchError(RuntimeError):
    """A SAT claim failed the independent checker."""


@dataclass(frozen=True)
class BenchRow:
    instance: str
    method: str
    verdict: str
    backtracks: int
    nodes: int
    time_ms: float

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"bad verdict {self.verdict!r}")


@dataclass(frozen=True)
class Limits:
    time_limit: Optional[float] = 600.0
    node_limit: Optional[int] = None
    branching: Branching = Branching.LEX


def solve_instance(inst: InstanceFile, method: Method, limits: Limits = Limits()) -> BenchRow:
    """Build and search one instance; SAT witnesses are re-checked."""
    t0 = time.perf_counter()
    model = build(inst, method)
    budget = None
    if limits.time_limit is not None:
        budget = max(0.0, limits.time_limit - (time.perf_counter() - t0))
    res = model.engine.solve(model.decision_vars, limits.branching, limits.node_limit, budget)
    elapsed = (time.perf_counter() - t0) * 1000.0
    if res.status is SolveStatus.SAT:
        problems = check_solution(inst, model.assignment_by_name(res.assignment))
        if problems:
            raise BenchError(f"{inst.name} / {method.label}: witness rejected: {problems[:3]}")
        verdict = "SAT"
    elif res.status is SolveStatus.UNSAT:
        verdict = "UNSAT"
    else:
        verdict = "TIMEOUT"
    return BenchRow(inst.name, method.label, verdict, res.stats.backtracks, res.stats.nodes, round(elapsed, 3))


def _work(args: Tuple[str, str, Limits]) -> BenchRow:
    text, method, limits = args
    return solve_instance(loads(text), Method.parse(method), limits)


def _method_arg(m: Union[str, Method]) -> str:
    if isinstance(m, Method):
        return "bi" if m.name == "bi" else ("hi" if m.k is None else f"hi-{m.k}")
    return m


def run_bench(
    instances: Iterable[InstanceFile],
    methods: Sequence[Union[str, Method]],
    limits: Limits = Limits(),
    jobs: int = 1,
) -> List[BenchRow]:
    """One row per (instance, method), ordered by instance then method.

    With ``jobs > 1`` cells run in worker processes; the result order does not
    depend on completion order.
    """
    insts = list(instances)
    tasks = [(dumps(inst), _method_arg(m), limits) for inst in insts for m in methods]
    if jobs <= 1 or len(tasks) <= 1:
        rows = []
        for t in tasks:
            rows.append(_work(t))
            log.info("%s %s -> %s", rows[-1].instance, rows[-1].method, rows[-1].verdict)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_work, tasks))
    return rows


def disagreements(rows: Iterable[BenchRow]) -> List[str]:
    """Instances where two methods reached different definite verdicts."""
    seen = {}
    bad = []
    for r in rows:
        if r.verdict == "TIMEOUT":
            continue
        prev = seen.setdefault(r.instance, r)
        if prev.verdict != r.verdict:
            bad.append(f"{r.instance}: {prev.method}={prev.verdict} but {r.method}={r.verdict}")
    return bad


def write_csv(rows: Iterable[BenchRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([r.instance, r.method, r.verdict, r.backtracks, r.nodes, f"{r.time_ms:.3f}"])


def read_csv(path) -> List[BenchRow]:
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {rd.fieldnames}")
        return [
            BenchRow(d["instance"], d["method"], d["verdict"], int(d["backtracks"]), int(d["nodes"]), float(d["time_ms"]))
            for d in rd
        ]


def load_dir(path) -> List[InstanceFile]:
    """Every ``*.json`` instance under ``path``, in file-name order."""
    files = sorted(Path(path).glob("*.json"))
    return [load(f) for f in files]


def rows_as_dicts(rows: Iterable[BenchRow]) -> List[dict]:
    return [asdict(r) for r in rows]
