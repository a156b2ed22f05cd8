"""Pseudo-Boolean (OPB) encodings of instances and decoding of PB models.

Two lowerings of AllDifferent / Permutation are available:

* ``HI`` (optionally capped at width ``k``): order literals ``B[x, j]``
  (``x <= j``), direct literals ``Z[x, j]`` (``x = j``), interval literals
  ``A[x, l, u]`` (``l <= x <= u``) and one occupancy sum per interval of
  width at most ``k``.
* ``BI``: direct literals only, exactly-one per variable and a pairwise
  at-most-one per value.

``abs_diff`` links are encoded with direct support clauses in both modes.
The output dialect is the MiniSat+ one: a ``* #variable= V #constraint= C``
header, terms ``+1 x7``, relations ``>=`` / ``=`` and a trailing `` ;``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .instance import InstanceFile, Method

# a literal is (index, positive) or a Python bool for a constant
Lit = Union[Tuple[int, bool], bool]


class EncodeError(ValueError):
    pass


class DecodeError(ValueError):
    pass


@dataclass
class VarMap:
    """Bijection between PB variable indices and Z / B / A literals."""

    entries: List[Tuple[str, str, Tuple[int, ...], int]] = field(default_factory=list)
    _index: Dict[Tuple[str, str, Tuple[int, ...]], int] = field(default_factory=dict, repr=False)

    def add(self, kind: str, name: str, params: Tuple[int, ...]) -> int:
        key = (kind, name, tuple(params))
        if key in self._index:
            raise EncodeError(f"duplicate literal {key}")
        idx = len(self.entries) + 1
        self.entries.append((kind, name, key[2], idx))
        self._index[key] = idx
        return idx

    def get(self, kind: str, name: str, *params: int) -> Optional[int]:
        return self._index.get((kind, name, tuple(params)))

    def __len__(self) -> int:
        return len(self.entries)

    def z_rows(self) -> Dict[str, List[Tuple[int, int]]]:
        """``name -> [(value, index), ...]`` in value order."""
        rows: Dict[str, List[Tuple[int, int]]] = {}
        for kind, name, params, idx in self.entries:
            if kind == "Z":
                rows.setdefault(name, []).append((params[0], idx))
        for r in rows.values():
            r.sort()
        return rows

    def dumps(self) -> str:
        return "".join(f"{k} {name} {' '.join(map(str, p))} {idx}\n" for k, name, p, idx in self.entries)

    @classmethod
    def loads(cls, text: str) -> "VarMap":
        vm = cls()
        for lineno, line in enumerate(text.splitlines(), 1):
            parts = line.split()
            if not parts:
                continue
            kind = parts[0]
            arity = {"Z": 1, "B": 1, "A": 2}.get(kind)
            if arity is None or len(parts) != arity + 3:
                raise DecodeError(f"varmap line {lineno}: cannot parse {line!r}")
            try:
                params = tuple(int(p) for p in parts[2:-1])
                idx = int(parts[-1])
            except ValueError:
                raise DecodeError(f"varmap line {lineno}: cannot parse {line!r}") from None
            if vm.add(kind, parts[1], params) != idx:
                raise DecodeError(f"varmap line {lineno}: indices must be consecutive from 1")
        return vm


class _Writer:
    def __init__(self):
        self.lines: List[str] = []

    def clause(self, lits: Iterable[Lit]) -> None:
        """Disjunction of literals, constants folded away."""
        terms = []
        for lit in lits:
            if lit is True:
                return
            if lit is False:
                continue
            terms.append(lit)
        if len({i for i, _ in terms}) < len(terms):
            # x or not x
            if any((i, not s) in terms for i, s in terms):
                return
            terms = list(dict.fromkeys(terms))
        negs = sum(1 for _, s in terms if not s)
        self.linear([(1 if s else -1, i) for i, s in terms], ">=", 1 - negs)

    def linear(self, terms: Sequence[Tuple[int, int]], rel: str, rhs: int) -> None:
        body = " ".join(f"{c:+d} x{i}" for c, i in terms)
        self.lines.append(f"{body} {rel} {rhs} ;" if body else f"{rel} {rhs} ;")


def _neg(lit: Lit) -> Lit:
    if isinstance(lit, bool):
        return not lit
    return (lit[0], not lit[1])


class _Encoder:
    def __init__(self, inst: InstanceFile, method: Method):
        self.inst = inst
        self.method = method
        self.vm = VarMap()
        self.out = _Writer()
        self.dom = {v.name: v for v in inst.variables}

    # literals ---------------------------------------------------------------

    def z(self, name: str, j: int) -> Lit:
        idx = self.vm.get("Z", name, j)
        return (idx, True) if idx is not None else False

    def b(self, name: str, j: int) -> Lit:
        d = self.dom[name]
        if j < d.lb:
            return False
        if j >= d.ub:
            return True
        return (self.vm.get("B", name, j), True)

    def a(self, name: str, l: int, u: int) -> Lit:
        idx = self.vm.get("A", name, l, u)
        if idx is None:
            idx = self.vm.add("A", name, (l, u))
            self._channel_a(name, l, u, (idx, True))
        return (idx, True)

    # variables --------------------------------------------------------------

    def declare_order(self, name: str) -> None:
        d = self.dom[name]
        for j in range(d.lb, d.ub):
            self.vm.add("B", name, (j,))
        for j in d.values():
            self.vm.add("Z", name, (j,))

    def order_clauses(self, name: str) -> None:
        d = self.dom[name]
        w = self.out
        for j in range(d.lb, d.ub - 1):
            w.clause([_neg(self.b(name, j)), self.b(name, j + 1)])
        present = set(d.values())
        for j in range(d.lb, d.ub + 1):
            lo, hi = self.b(name, j - 1), self.b(name, j)
            if j in present:
                zj = self.z(name, j)
                w.clause([_neg(zj), hi])
                w.clause([_neg(zj), _neg(lo)])
                w.clause([zj, _neg(hi), lo])
            else:
                # a hole: x <= j  implies  x <= j - 1
                w.clause([_neg(hi), lo])

    def declare_direct(self, name: str) -> None:
        for j in self.dom[name].values():
            self.vm.add("Z", name, (j,))

    def exactly_one(self, name: str) -> None:
        row = [self.vm.get("Z", name, j) for j in self.dom[name].values()]
        self.out.linear([(1, i) for i in row], "=", 1)

    def _channel_a(self, name: str, l: int, u: int, a: Lit) -> None:
        w = self.out
        below, upto = self.b(name, l - 1), self.b(name, u)
        w.clause([_neg(a), _neg(below)])
        w.clause([_neg(a), upto])
        w.clause([a, below, _neg(upto)])
        for j in range(l, u + 1):
            w.clause([a, _neg(self.z(name, j))])

    # constraints ------------------------------------------------------------

    def hall(self, scope: Sequence[str], equality: bool, lo: int, hi: int) -> None:
        n = len(scope)
        k = self.method.k
        pairs = [(l, u) for l in range(lo, hi + 1) for u in range(l, min(hi, l + n - 1) + 1)]
        lits = {(name, l, u): self.a(name, l, u) for name in scope for l, u in pairs}
        for l, u in pairs:
            width = u - l + 1
            if k is not None and width > k:
                continue
            terms = [lits[(name, l, u)][0] for name in scope]
            if equality:
                self.out.linear([(1, i) for i in terms], "=", width)
            elif width < len(terms):
                self.out.linear([(-1, i) for i in terms], ">=", -width)

    def restrict(self, name: str, lo: int, hi: int) -> None:
        self.out.clause([_neg(self.b(name, lo - 1))])
        self.out.clause([self.b(name, hi)])

    def clique(self, scope: Sequence[str], at_least_once: Optional[Tuple[int, int]]) -> None:
        values = sorted({j for name in scope for j in self.dom[name].values()})
        for j in values:
            holders = [self.vm.get("Z", name, j) for name in scope]
            holders = [i for i in holders if i is not None]
            for p in range(len(holders)):
                for q in range(p + 1, len(holders)):
                    self.out.linear([(-1, holders[p]), (-1, holders[q])], ">=", -1)
        if at_least_once is not None:
            lo, hi = at_least_once
            for name in scope:
                for j in self.dom[name].values():
                    if not lo <= j <= hi:
                        self.out.clause([_neg(self.z(name, j))])
            for j in range(lo, hi + 1):
                self.out.clause([self.z(name, j) for name in scope])

    def abs_diff(self, e: str, x: str, y: str) -> None:
        for d in self.dom[e].values():
            ze = self.z(e, d)
            for v in self.dom[x].values():
                self.out.clause([_neg(ze), _neg(self.z(x, v)), self.z(y, v - d), self.z(y, v + d)])

    # driver -----------------------------------------------------------------

    def run(self) -> Tuple[str, VarMap]:
        inst = self.inst
        for c in inst.constraints:
            if c.kind not in ("alldifferent", "permutation", "abs_diff"):
                raise EncodeError(f"no PB encoding for {c.kind!r}")
        hi_mode = self.method.name == "hi"
        for v in inst.variables:
            if hi_mode:
                self.declare_order(v.name)
            else:
                self.declare_direct(v.name)
        for v in inst.variables:
            if hi_mode:
                self.order_clauses(v.name)
            else:
                self.exactly_one(v.name)
        for c in inst.constraints:
            scope = list(c.scope)
            if c.kind == "abs_diff":
                self.abs_diff(*scope)
                continue
            if not scope:
                continue
            perm = c.kind == "permutation"
            if perm:
                base = c.base if c.base is not None else min(self.dom[s].lb for s in scope)
                lo, hi = base, base + len(scope) - 1
            else:
                lo = min(self.dom[s].lb for s in scope)
                hi = max(self.dom[s].ub for s in scope)
            if hi_mode:
                if perm:
                    for s in scope:
                        self.restrict(s, lo, hi)
                self.hall(scope, perm, lo, hi)
            else:
                self.clique(scope, (lo, hi) if perm else None)
        header = f"* #variable= {len(self.vm)} #constraint= {len(self.out.lines)}\n"
        return header + "".join(line + "\n" for line in self.out.lines), self.vm


def encode_opb(inst: InstanceFile, method: Method = Method()) -> Tuple[str, VarMap]:
    """Encode ``inst``; returns the OPB text and its variable map.

    Raises :class:`EncodeError` for constraint kinds without a PB lowering
    (``gcc``, ``same``).
    """
    return _Encoder(inst, method).run()


# ------------------------------------------------------------------ models

_TOKEN = re.compile(r"^(-?)x?(\d+)$")


def parse_model(text_or_lits: Union[str, Iterable[Union[int, str]]]) -> Dict[int, bool]:
    """Signed indices (``7 -8``) or OPB tokens (``x7 -x8``) to ``{index: value}``.

    A leading ``v`` (solver output lines) and a trailing ``0`` are ignored.
    """
    if isinstance(text_or_lits, str):
        tokens: List[Union[int, str]] = []
        for line in text_or_lits.splitlines():
            parts = line.split()
            if parts and parts[0] in ("v", "V"):
                parts = parts[1:]
            if parts and parts[0].startswith(("s", "c", "o", "S", "C", "O")):
                continue
            tokens.extend(parts)
    else:
        tokens = list(text_or_lits)
    model: Dict[int, bool] = {}
    for t in tokens:
        if isinstance(t, int):
            if t == 0:
                continue
            idx, val = abs(t), t > 0
        else:
            m = _TOKEN.match(t.strip())
            if not m:
                raise DecodeError(f"bad model token {t!r}")
            idx, val = int(m.group(2)), not m.group(1)
            if idx == 0:
                continue
        if model.get(idx, val) != val:
            raise DecodeError(f"variable x{idx} given both polarities")
        model[idx] = val
    return model


def decode_model(varmap: VarMap, model) -> Dict[str, int]:
    """Read the direct literals back into an assignment ``name -> value``."""
    if not isinstance(model, dict):
        model = parse_model(model)
    out = {}
    for name, row in varmap.z_rows().items():
        missing = [idx for _, idx in row if idx not in model]
        if missing:
            raise DecodeError(f"{name}: model does not mention x{missing[0]}")
        true = [j for j, idx in row if model[idx]]
        if len(true) != 1:
            raise DecodeError(f"{name}: {len(true)} true value literals, expected exactly one")
        out[name] = true[0]
    return out


def extend_assignment(varmap: VarMap, asg: Dict[str, int]) -> Dict[int, bool]:
    """The unique setting of every mapped literal induced by an assignment."""
    model = {}
    for kind, name, p, idx in varmap.entries:
        x = asg[name]
        if kind == "Z":
            model[idx] = x == p[0]
        elif kind == "B":
            model[idx] = x <= p[0]
        else:
            model[idx] = p[0] <= x <= p[1]
    return model


# ------------------------------------------------------------------ OPB files

PBConstraint = Tuple[Tuple[Tuple[int, int], ...], str, int]


def parse_opb(text: str) -> Tuple[int, List[PBConstraint]]:
    """Parse the dialect written by :func:`encode_opb`.

    Returns the declared variable count and ``(terms, rel, rhs)`` triples
    with ``terms`` a tuple of ``(coefficient, index)``.
    """
    nvars = None
    cons: List[PBConstraint] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("*"):
            m = re.search(r"#variable=\s*(\d+)", s)
            if m and nvars is None:
                nvars = int(m.group(1))
            continue
        if not s.endswith(";"):
            raise EncodeError(f"line {lineno}: missing ';'")
        toks = s[:-1].split()
        for k, t in enumerate(toks):
            if t in (">=", "="):
                break
        else:
            raise EncodeError(f"line {lineno}: no relation")
        body, rel, rest = toks[:k], toks[k], toks[k + 1:]
        if len(body) % 2 or len(rest) != 1:
            raise EncodeError(f"line {lineno}: malformed constraint")
        terms = []
        for c, v in zip(body[::2], body[1::2]):
            if not v.startswith("x"):
                raise EncodeError(f"line {lineno}: bad variable {v!r}")
            terms.append((int(c), int(v[1:])))
        cons.append((tuple(terms), rel, int(rest[0])))
    if nvars is None:
        raise EncodeError("missing '* #variable=' header")
    return nvars, cons


def evaluate(constraints: Sequence[PBConstraint], model: Dict[int, bool]) -> bool:
    for terms, rel, rhs in constraints:
        lhs = sum(c for c, i in terms if model[i])
        if (lhs < rhs) if rel == ">=" else (lhs != rhs):
            return False
    return True
