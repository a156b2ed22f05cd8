"""Benchmark instance generators: pigeon-hole and double-wheel graceful graphs."""

from __future__ import annotations

from typing import Dict, List, Optional, Sequence, Tuple

from .instance import ConstraintDecl, InstanceError, InstanceFile, VarDecl


def gen_php(n: int, consistency: str = "rc") -> InstanceFile:
    """``n`` pigeons, ``n - 1`` holes, one AllDifferent."""
    if n < 2:
        raise InstanceError("gen_php needs n >= 2")
    names = [f"x{i}" for i in range(1, n + 1)]
    variables = tuple(VarDecl(nm, ((1, n - 1),)) for nm in names)
    cons = (ConstraintDecl("alldifferent", tuple(names), consistency),)
    return InstanceFile(f"php-{n}", variables, cons)


def double_wheel_edges(n: int) -> Tuple[List[str], List[Tuple[str, str]]]:
    """Nodes and edges of DW_n: two n-cycles and a hub joined to every rim node."""
    hub = "h"
    rim_a = [f"a{i}" for i in range(n)]
    rim_b = [f"b{i}" for i in range(n)]
    edges = []
    for rim in (rim_a, rim_b):
        for i in range(n):
            edges.append((rim[i], rim[(i + 1) % n]))
    for node in rim_a + rim_b:
        edges.append((hub, node))
    return [hub] + rim_a + rim_b, edges


def gen_double_wheel(n: int, hall_cap: Optional[int] = None, consistency: str = "rc") -> InstanceFile:
    """Graceful labelling model of DW_n.

    Node labels in ``[0, q]`` are all different, edge labels ``|f(u) - f(v)|``
    form a permutation of ``1..q`` with ``q = 4n``.  The hub is fixed to 0 to
    break the ``f -> q - f`` symmetry.
    """
    if n < 3:
        raise InstanceError("gen_double_wheel needs n >= 3")
    nodes, edges = double_wheel_edges(n)
    q = len(edges)
    variables = [VarDecl(nodes[0], ((0, 0),))]
    variables += [VarDecl(v, ((0, q),)) for v in nodes[1:]]
    edge_names = [f"e_{u}_{v}" for u, v in edges]
    variables += [VarDecl(e, ((1, q),)) for e in edge_names]
    cons = [ConstraintDecl("alldifferent", tuple(nodes), consistency, hall_cap)]
    cons.append(ConstraintDecl("permutation", tuple(edge_names), consistency, hall_cap, base=1))
    for e, (u, v) in zip(edge_names, edges):
        cons.append(ConstraintDecl("abs_diff", (e, u, v)))
    return InstanceFile(f"dw-{n}", tuple(variables), tuple(cons))


def graph_of(inst: InstanceFile) -> List[Tuple[str, str]]:
    """Edges implied by the ``abs_diff`` links of an instance."""
    return [(c.scope[1], c.scope[2]) for c in inst.constraints if c.kind == "abs_diff"]


def is_graceful(edges: Sequence[Tuple[str, str]], labels: Dict[str, int]) -> bool:
    q = len(edges)
    nodes = {u for e in edges for u in e}
    node_labels = [labels[u] for u in nodes]
    if len(set(node_labels)) != len(node_labels):
        return False
    if any(not 0 <= f <= q for f in node_labels):
        return False
    return sorted(abs(labels[u] - labels[v]) for u, v in edges) == list(range(1, q + 1))
