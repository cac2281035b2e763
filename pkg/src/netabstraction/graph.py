"""Topology-only analysis of a network: which nodes must be kept so that a
chosen module survives abstraction unchanged.

A path has at least one edge. Blocking nodes stop a path only when they occur
strictly inside it; the endpoints never block.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import networkx as nx

from .abstraction import Partition
from .errors import NoFeasibleSelection
from .network import NetworkModel

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 100_000


@dataclass(frozen=True)
class StructuralGraph:
    """Directed graph with an edge ``a -> b`` whenever module ``G[b, a]`` is nonzero."""

    n: int
    edges: frozenset
    labels: tuple = ()

    def __post_init__(self):
        edges = frozenset((int(a), int(b)) for a, b in self.edges)
        if any(a == b for a, b in edges):
            raise ValueError("self-edges are not allowed")
        if any(not (0 <= a < self.n and 0 <= b < self.n) for a, b in edges):
            raise ValueError("edge endpoint out of range")
        labels = tuple(self.labels) or tuple(str(k + 1) for k in range(self.n))
        if len(labels) != self.n:
            raise ValueError("one label per node")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "labels", labels)
        succ = [[] for _ in range(self.n)]
        for a, b in sorted(edges):
            succ[a].append(b)
        object.__setattr__(self, "_succ", tuple(tuple(s) for s in succ))

    @classmethod
    def from_model(cls, m: NetworkModel) -> "StructuralGraph":
        edges = {(a, b) for b, row in enumerate(m.G.entries) for a, x in enumerate(row) if x}
        return cls(m.L, frozenset(edges), m.node_labels)

    @classmethod
    def from_labelled_edges(cls, labels: Sequence[str], edges: Iterable[tuple]) -> "StructuralGraph":
        pos = {lab: k for k, lab in enumerate(labels)}
        return cls(len(labels), frozenset((pos[a], pos[b]) for a, b in edges), tuple(labels))

    def successors(self, k: int) -> tuple:
        return self._succ[k]

    def index(self, label) -> int:
        label = str(label)
        if label in self.labels:
            return self.labels.index(label)
        k = int(label) - 1
        if not 0 <= k < self.n:
            raise KeyError(label)
        return k

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges)
        return g


# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------


def find_path_avoiding(
    g: StructuralGraph,
    src: int,
    targets: Iterable[int],
    blockers: Iterable[int] = (),
    forbid_first_edge: Optional[tuple] = None,
) -> Optional[list]:
    """Shortest path ``src -> t`` for some target ``t`` with no blocker strictly inside.

    ``forbid_first_edge`` removes that edge as the opening step only, which is
    how a single direct edge is excluded while longer paths through it remain.
    """
    targets = set(targets)
    blockers = set(blockers)
    parent = {}
    queue = deque()
    for nb in g.successors(src):
        if forbid_first_edge == (src, nb):
            continue
        if nb not in parent:
            parent[nb] = None
            queue.append(nb)
    while queue:
        x = queue.popleft()
        if x in targets:
            path = [x]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            return [src] + path[::-1]
        if x in blockers:
            continue
        for nb in g.successors(x):
            if nb not in parent:
                parent[nb] = x
                queue.append(nb)
    return None


def path_exists_avoiding(g, src, dst, blockers=(), forbid_first_edge=None) -> bool:
    return find_path_avoiding(g, src, (dst,), blockers, forbid_first_edge) is not None


# ---------------------------------------------------------------------------
# Invariance of a single module G[j, i]
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InvarianceQuery:
    i: int
    j: int
    partition: Partition

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError("input and output node must differ")
        if self.i not in self.partition.s_tilde or self.j not in self.partition.s_tilde:
            raise ValueError("input and output node must both be directly measured (in s_tilde)")

    @property
    def targets(self) -> frozenset:
        """Nodes whose equations must not pick up ``w_i`` or ``w_j``: the output and ``l_set``."""
        return frozenset((self.j,) + self.partition.l_set)

    @property
    def blockers(self) -> frozenset:
        """``v_set`` plus ``s_tilde`` without the output."""
        p = self.partition
        return frozenset(p.v_set + tuple(k for k in p.s_tilde if k != self.j))


def violating_path(g: StructuralGraph, q: InvarianceQuery) -> Optional[list]:
    """An unblocked path that breaks invariance, or None when the module is safe.

    From the input: any path into the targets except the direct edge into the
    output. From the output: any path into the targets, loops included. The
    input node itself blocks when revisited mid-path.
    """
    p = q.partition
    return _violating_path_sets(g, q.i, q.j, p.s_tilde, p.l_set, p.v_set)


def check_generalized_invariance(g: StructuralGraph, q: InvarianceQuery) -> bool:
    return violating_path(g, q) is None


def check_immersion_invariance(g: StructuralGraph, i: int, j: int, s_tilde: Iterable[int]) -> bool:
    """Invariance under plain elimination: parallel paths and output loops must
    pass through a kept node other than the output."""
    kept = set(s_tilde)
    if i == j or i not in kept or j not in kept:
        return False
    d = kept - {j}
    if path_exists_avoiding(g, i, j, d, forbid_first_edge=(i, j)):
        return False
    return not path_exists_avoiding(g, j, j, d)


# ---------------------------------------------------------------------------
# Vertex-disjoint paths
# ---------------------------------------------------------------------------


def vertex_disjoint_paths(
    g: StructuralGraph,
    sources: Iterable[int],
    sinks: Iterable[int],
    allowed_intermediates: Iterable[int],
) -> int:
    """Maximum number of fully vertex-disjoint ``sources -> sinks`` paths whose
    interior nodes all lie in ``allowed_intermediates``."""
    sources, sinks = set(sources), set(sinks)
    if sources & sinks:
        raise ValueError("sources and sinks must be disjoint")
    allowed = set(allowed_intermediates) - sources - sinks
    if not sources or not sinks:
        return 0
    flow = nx.DiGraph()
    for x in allowed:
        flow.add_edge(("in", x), ("out", x), capacity=1)
    for s in sources:
        flow.add_edge("source", ("out", s), capacity=1)
    for t in sinks:
        flow.add_edge(("in", t), "sink", capacity=1)
    for a, b in g.edges:
        if (a in sources or a in allowed) and (b in sinks or b in allowed):
            flow.add_edge(("out", a), ("in", b), capacity=1)
    if "source" not in flow or "sink" not in flow:
        return 0
    return int(nx.maximum_flow_value(flow, "source", "sink"))


def has_disjoint_observation_paths(g: StructuralGraph, p: Partition) -> bool:
    """Structural counterpart of the generic rank condition on ``v_set -> l_set``."""
    if not p.v_set:
        return True
    return vertex_disjoint_paths(g, p.v_set, p.l_set, p.z_tilde) == len(p.v_set)


# ---------------------------------------------------------------------------
# Node selection
# ---------------------------------------------------------------------------


def _measured(p: Partition) -> tuple:
    return tuple(sorted(p.s_tilde + p.l_set))


def _sort_key(p: Partition) -> tuple:
    return (len(p.s_tilde) + len(p.l_set), _measured(p), p.s_tilde, p.l_set, p.v_set)


def selection_feasible(g: StructuralGraph, i: int, j: int, p: Partition) -> bool:
    q = InvarianceQuery(i, j, p)
    return check_generalized_invariance(g, q) and has_disjoint_observation_paths(g, p)


def select_nodes(
    g: StructuralGraph,
    i: int,
    j: int,
    measurable: Optional[Iterable[int]] = None,
    max_results: Optional[int] = None,
    budget: int = DEFAULT_BUDGET,
) -> list[Partition]:
    """Measurement plans that keep ``G[j, i]`` invariant, fewest measured nodes first.

    Starting from ``{i, j}`` measured, each unblocked offending path is blocked
    by one of its interior nodes, either by measuring it or by reconstructing
    it from an extra indirect observation; indirect observations are added
    whenever the reconstructed nodes outnumber their disjoint observation
    paths. Only plans whose measured set has no feasible proper subset are
    returned.
    """
    measurable = set(range(g.n)) if measurable is None else set(measurable)
    if i not in measurable or j not in measurable:
        raise ValueError("input and output nodes must be measurable")
    if i == j:
        raise ValueError("input and output node must differ")

    found: dict[Partition, None] = {}
    seen = set()
    evaluations = 0
    stack = [((i, j), (), ())]
    while stack:
        s_set, l_set, v_set = stack.pop()
        state = (s_set, l_set, v_set)
        if state in seen:
            continue
        seen.add(state)
        if evaluations >= budget:
            log.warning("node selection stopped after %d evaluations", evaluations)
            break
        evaluations += 1
        # too few observations is not yet a valid partition, but blocking still applies
        p = Partition.complete(g.n, s_set, l_set, v_set) if len(l_set) >= len(v_set) else None
        free = [k for k in range(g.n) if k not in s_set and k not in l_set and k not in v_set]
        path = _violating_path_sets(g, i, j, s_set, l_set, v_set)

        if path is None and p is not None and has_disjoint_observation_paths(g, p):
            found[p] = None
            continue

        if path is not None:
            for x in path[1:-1]:
                if x not in free:
                    continue
                if x in measurable:
                    stack.append((tuple(sorted(s_set + (x,))), l_set, v_set))
                stack.append((s_set, l_set, tuple(sorted(v_set + (x,)))))
        else:
            for x in free:
                if x in measurable:
                    stack.append((s_set, tuple(sorted(l_set + (x,))), v_set))

    if not found:
        raise NoFeasibleSelection(f"no measurement plan keeps module {g.labels[j]} <- {g.labels[i]} invariant")
    plans = sorted(found, key=_sort_key)
    measured_sets = {frozenset(_measured(p)) for p in plans}
    minimal = [p for p in plans if not any(other < frozenset(_measured(p)) for other in measured_sets)]
    return minimal if max_results is None else minimal[:max_results]


def _violating_path_sets(g, i, j, s_set, l_set, v_set) -> Optional[list]:
    blockers = set(v_set) | (set(s_set) - {j})
    targets = {j} | set(l_set)
    for t in sorted(targets):
        skip = (i, j) if t == j else None
        path = find_path_avoiding(g, i, (t,), blockers, skip)
        if path:
            return path
    return find_path_avoiding(g, j, targets, blockers)


# ---------------------------------------------------------------------------
# DOT export
# ---------------------------------------------------------------------------

GROUP_COLORS = {
    "s_tilde": "lightblue",
    "l_set": "palegreen",
    "v_set": "orange",
    "z_tilde": "lightgray",
}


def _quote(s: str) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(g: StructuralGraph, partition: Optional[Partition] = None, name: str = "network") -> str:
    group = {}
    if partition is not None:
        for attr in GROUP_COLORS:
            for k in getattr(partition, attr):
                group[k] = attr
    lines = [f"digraph {_quote(name)} {{", "  rankdir=LR;"]
    for k, lab in enumerate(g.labels):
        attrs = [f"label={_quote(lab)}"]
        if k in group:
            attrs += ["style=filled", f"fillcolor={GROUP_COLORS[group[k]]}", f"group={group[k]}"]
        lines.append(f"  n{k + 1} [{', '.join(attrs)}];")
    for a, b in sorted(g.edges):
        lines.append(f"  n{a + 1} -> n{b + 1};")
    lines.append("}")
    return "\n".join(lines) + "\n"
