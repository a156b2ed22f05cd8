"""Declarative instance files, lowering into an engine, and a solution checker.

The on-disk format is JSON with one variable / constraint per line so the
printed form is stable and diff-friendly::

    {
      "name": "php-3",
      "variables": [
        {"name": "x1", "domain": [[1, 2]]},
        ...
      ],
      "constraints": [
        {"kind": "alldifferent", "scope": ["x1", "x2", "x3"], "consistency": "rc"}
      ],
      "objective": null
    }

Domains are unions of inclusive intervals.  Constraint kinds: ``alldifferent``,
``permutation``, ``gcc`` (``lower``/``upper``/``base``), ``same``
(``scope2``) and ``abs_diff`` (scope ``[e, x, y]`` meaning ``e = |x - y|``).
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from . import decomp
from .decomp import Consistency, DecompositionReport
from .engine import Engine

KINDS = ("alldifferent", "permutation", "gcc", "same", "abs_diff")
GLOBAL_KINDS = ("alldifferent", "permutation", "gcc", "same")


class InstanceError(ValueError):
    pass


def normalize_domain(intervals) -> Tuple[Tuple[int, int], ...]:
    """Sort and merge a union of inclusive intervals."""
    ivs = sorted((int(a), int(b)) for a, b in intervals)
    out: List[List[int]] = []
    for a, b in ivs:
        if a > b:
            raise InstanceError(f"empty interval [{a}, {b}]")
        if out and a <= out[-1][1] + 1:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    if not out:
        raise InstanceError("empty domain")
    return tuple((a, b) for a, b in out)


def domain_from_values(values) -> Tuple[Tuple[int, int], ...]:
    return normalize_domain((v, v) for v in values)


@dataclass(frozen=True)
class VarDecl:
    name: str
    domain: Tuple[Tuple[int, int], ...]

    def values(self) -> List[int]:
        return [v for a, b in self.domain for v in range(a, b + 1)]

    @property
    def lb(self) -> int:
        return self.domain[0][0]

    @property
    def ub(self) -> int:
        return self.domain[-1][1]

    @property
    def has_holes(self) -> bool:
        return len(self.domain) > 1


@dataclass(frozen=True)
class ConstraintDecl:
    kind: str
    scope: Tuple[str, ...]
    consistency: Optional[str] = None
    hall_cap: Optional[int] = None
    lower: Optional[Tuple[int, ...]] = None
    upper: Optional[Tuple[int, ...]] = None
    base: Optional[int] = None
    scope2: Optional[Tuple[str, ...]] = None

    def to_json(self) -> dict:
        d = {"kind": self.kind, "scope": list(self.scope)}
        if self.scope2 is not None:
            d["scope2"] = list(self.scope2)
        if self.consistency is not None:
            d["consistency"] = self.consistency
        if self.hall_cap is not None:
            d["hall_cap"] = self.hall_cap
        if self.lower is not None:
            d["lower"] = list(self.lower)
        if self.upper is not None:
            d["upper"] = list(self.upper)
        if self.base is not None:
            d["base"] = self.base
        return d


@dataclass(frozen=True)
class InstanceFile:
    name: str
    variables: Tuple[VarDecl, ...]
    constraints: Tuple[ConstraintDecl, ...]
    objective: None = None

    def __post_init__(self):
        names = [v.name for v in self.variables]
        dup = [n for n, c in Counter(names).items() if c > 1]
        if dup:
            raise InstanceError(f"duplicate variable names: {dup}")
        known = set(names)
        for c in self.constraints:
            if c.kind not in KINDS:
                raise InstanceError(f"unknown constraint kind {c.kind!r}")
            for s in c.scope + (c.scope2 or ()):
                if s not in known:
                    raise InstanceError(f"{c.kind} references undeclared variable {s!r}")
            if c.consistency not in (None, "rc", "bc"):
                raise InstanceError(f"bad consistency {c.consistency!r}")
            if c.kind == "abs_diff" and len(c.scope) != 3:
                raise InstanceError("abs_diff scope must be [e, x, y]")
            if c.kind == "gcc" and (c.lower is None or c.upper is None or len(c.lower) != len(c.upper)):
                raise InstanceError("gcc needs lower and upper of equal length")
            if c.kind == "same" and (c.scope2 is None or len(c.scope2) != len(c.scope)):
                raise InstanceError("same needs scope2 of the same length as scope")

    def var(self, name: str) -> VarDecl:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)


# --------------------------------------------------------------- text format


def dumps(inst: InstanceFile) -> str:
    lines = ["{", f'  "name": {json.dumps(inst.name)},', '  "variables": [']
    vs = [json.dumps({"name": v.name, "domain": [list(iv) for iv in v.domain]}) for v in inst.variables]
    lines += [f"    {s}," for s in vs[:-1]] + ([f"    {vs[-1]}"] if vs else [])
    lines.append("  ],")
    lines.append('  "constraints": [')
    cs = [json.dumps(c.to_json()) for c in inst.constraints]
    lines += [f"    {s}," for s in cs[:-1]] + ([f"    {cs[-1]}"] if cs else [])
    lines.append("  ],")
    lines.append('  "objective": null')
    lines.append("}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> InstanceFile:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"not a valid instance file: {exc}") from None
    if raw.get("objective") is not None:
        raise InstanceError("objectives are not supported")
    variables = tuple(VarDecl(v["name"], normalize_domain(v["domain"])) for v in raw.get("variables", []))
    constraints = []
    for c in raw.get("constraints", []):
        constraints.append(
            ConstraintDecl(
                kind=c["kind"],
                scope=tuple(c["scope"]),
                consistency=c.get("consistency"),
                hall_cap=c.get("hall_cap"),
                lower=tuple(c["lower"]) if "lower" in c else None,
                upper=tuple(c["upper"]) if "upper" in c else None,
                base=c.get("base"),
                scope2=tuple(c["scope2"]) if "scope2" in c else None,
            )
        )
    return InstanceFile(raw.get("name", "instance"), variables, tuple(constraints))


def load(path) -> InstanceFile:
    with open(path) as fh:
        return loads(fh.read())


def save(inst: InstanceFile, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(inst))


# ------------------------------------------------------------------ lowering


@dataclass(frozen=True)
class Method:
    """How AllDifferent/Permutation are lowered.

    ``name`` is ``"hi"`` (Hall-interval decomposition, optionally capped at
    width ``k``) or ``"bi"`` (clique of binary inequalities).
    """

    name: str = "hi"
    k: Optional[int] = None

    @classmethod
    def parse(cls, text: str) -> "Method":
        t = text.strip().lower().replace("_", "-")
        if t == "bi":
            return cls("bi")
        if t in ("hi", "hi-full"):
            return cls("hi")
        if t.startswith("hi-"):
            try:
                k = int(t[3:])
            except ValueError:
                raise InstanceError(f"bad method {text!r}") from None
            if k < 1:
                raise InstanceError("hall cap must be >= 1")
            return cls("hi", k)
        raise InstanceError(f"bad method {text!r}")

    @property
    def label(self) -> str:
        if self.name == "bi":
            return "BI"
        return "HI" if self.k is None else f"HI_{self.k}"


@dataclass
class Model:
    engine: Engine
    ids: Dict[str, int]
    decision_vars: List[int]
    report: DecompositionReport = field(default_factory=DecompositionReport)

    def assignment_by_name(self, asg: Dict[int, int]) -> Dict[str, int]:
        return {name: asg[x] for name, x in self.ids.items()}

    def domains_by_name(self) -> Dict[str, List[int]]:
        return {name: self.engine.domain_values(x) for name, x in self.ids.items()}


def build(
    inst: InstanceFile,
    method: Method = Method(),
    consistency: Optional[str] = None,
    hall_cap: Optional[int] = None,
    trace: bool = False,
) -> Model:
    """Lower ``inst`` into a fresh engine.

    ``consistency``/``hall_cap`` override what each constraint declares;
    ``method.k`` overrides both the declared and the explicit ``hall_cap``.
    """

    def cons_of(c: ConstraintDecl) -> Consistency:
        return Consistency(consistency or c.consistency or "rc")

    needs_values = set()
    for v in inst.variables:
        if v.has_holes:
            needs_values.add(v.name)
    for c in inst.constraints:
        if c.kind not in GLOBAL_KINDS:
            continue
        if cons_of(c) is Consistency.RC or (method.name == "bi" and c.kind in ("alldifferent", "permutation")):
            needs_values.update(c.scope)
            needs_values.update(c.scope2 or ())

    eng = Engine(trace=trace)
    ids: Dict[str, int] = {}
    for v in inst.variables:
        if v.name in needs_values:
            ids[v.name] = eng.new_from_values(v.values(), v.name)
        else:
            ids[v.name] = eng.new_int(v.lb, v.ub, False, v.name)
    model = Model(eng, ids, [ids[v.name] for v in inst.variables])
    rep = model.report
    for c in inst.constraints:
        scope = [ids[s] for s in c.scope]
        if eng.failed:
            break
        if c.kind == "abs_diff":
            rep.merge(decomp.post_abs_diff(eng, *scope))
        elif c.kind in ("alldifferent", "permutation"):
            if method.name == "bi":
                rep.merge(decomp.post_bi_clique(eng, scope, at_least_once=c.kind == "permutation"))
                continue
            cap = method.k if method.k is not None else (hall_cap if hall_cap is not None else c.hall_cap)
            if c.kind == "alldifferent":
                rep.merge(decomp.post_alldiff(eng, scope, cons_of(c), cap))
            else:
                rep.merge(decomp.post_permutation(eng, scope, cons_of(c), cap, c.base))
        elif c.kind == "gcc":
            rep.merge(decomp.post_gcc(eng, scope, c.lower, c.upper, cons_of(c), c.base if c.base is not None else 1))
        elif c.kind == "same":
            rep.merge(decomp.post_same(eng, scope, [ids[s] for s in c.scope2], cons_of(c)))
    return model


# ------------------------------------------------------------------- checker


def check_solution(inst: InstanceFile, asg: Dict[str, int]) -> List[str]:
    """Violations of ``asg`` against ``inst``, evaluated from the definitions.

    An empty list means the assignment is a solution.
    """
    problems = []
    for v in inst.variables:
        if v.name not in asg:
            problems.append(f"{v.name} unassigned")
            continue
        x = asg[v.name]
        if not any(a <= x <= b for a, b in v.domain):
            problems.append(f"{v.name}={x} outside its domain")
    if problems:
        return problems
    for c in inst.constraints:
        xs = [asg[s] for s in c.scope]
        if c.kind == "alldifferent":
            if len(set(xs)) != len(xs):
                problems.append(f"alldifferent violated on {list(c.scope)}")
        elif c.kind == "permutation":
            base = c.base if c.base is not None else min(inst.var(s).lb for s in c.scope)
            if sorted(xs) != list(range(base, base + len(xs))):
                problems.append(f"permutation violated on {list(c.scope)}")
        elif c.kind == "gcc":
            base = c.base if c.base is not None else 1
            counts = Counter(xs)
            if any(not base <= x < base + len(c.lower) for x in xs):
                problems.append("gcc: value outside the counted range")
            for j, (lo, hi) in enumerate(zip(c.lower, c.upper)):
                if not lo <= counts[base + j] <= hi:
                    problems.append(f"gcc: value {base + j} occurs {counts[base + j]} times")
        elif c.kind == "same":
            if Counter(xs) != Counter(asg[s] for s in c.scope2):
                problems.append("same violated")
        elif c.kind == "abs_diff":
            e, x, y = xs
            if e != abs(x - y):
                problems.append(f"{c.scope[0]} != |{c.scope[1]} - {c.scope[2]}|")
    return problems
