"""Vertex-labeled simple graphs and multigraphs.

Both graph types are immutable.  A graph carries its own label set, which is
``1..n`` for graphs built with :func:`build_graph` but may be an arbitrary set
of positive integers for parts cut out of a larger graph (complex part, core,
kernel) so that labels keep pointing at the original vertices.
"""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


class GraphError(ValueError):
    pass


class DuplicateEdge(GraphError):
    pass


class LoopInSimpleGraph(GraphError):
    pass


class LabelOutOfRange(GraphError):
    pass


class LabelClash(GraphError):
    pass


def _norm(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class LabeledGraph:
    labels: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def m(self) -> int:
        return len(self.edges)

    def edge_list(self) -> list[tuple[int, int]]:
        return list(self.edges)

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {v: [] for v in self.labels}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def degrees(self) -> dict[int, int]:
        deg = dict.fromkeys(self.labels, 0)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def subgraph(self, vertices: Iterable[int]) -> LabeledGraph:
        keep = set(vertices)
        return LabeledGraph(
            tuple(sorted(keep)),
            tuple(e for e in self.edges if e[0] in keep and e[1] in keep),
        )

    def relabeled(self) -> tuple[LabeledGraph, dict[int, int]]:
        """Order-preserving relabeling onto ``1..n``; returns the graph and new->old map."""
        new_of = {old: i for i, old in enumerate(self.labels, start=1)}
        g = LabeledGraph(
            tuple(range(1, self.n + 1)),
            tuple(sorted((new_of[u], new_of[v]) for u, v in self.edges)),
        )
        return g, {i: old for old, i in new_of.items()}

    def to_multigraph(self) -> LabeledMultigraph:
        return LabeledMultigraph(self.labels, tuple((e, 1) for e in self.edges))

    def to_json(self) -> dict:
        out: dict = {"n": self.n, "edges": [list(e) for e in self.edges]}
        if self.labels != tuple(range(1, self.n + 1)):
            out["labels"] = list(self.labels)
        return out


@dataclass(frozen=True)
class LabeledMultigraph:
    """Multigraph stored as sorted ``((u, v), multiplicity)`` pairs; loops are ``(v, v)``."""

    labels: tuple[int, ...]
    multiplicities: tuple[tuple[tuple[int, int], int], ...]
    _counts: dict = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_counts", dict(self.multiplicities))

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def m(self) -> int:
        return sum(k for _, k in self.multiplicities)

    @property
    def edge_counts(self) -> dict[tuple[int, int], int]:
        return dict(self._counts)

    def multiplicity(self, u: int, v: int) -> int:
        return self._counts.get(_norm(u, v), 0)

    def edge_list(self) -> list[tuple[int, int]]:
        return [e for e, k in self.multiplicities for _ in range(k)]

    def degrees(self) -> dict[int, int]:
        deg = dict.fromkeys(self.labels, 0)
        for (u, v), k in self.multiplicities:
            deg[u] += k
            deg[v] += k
        return deg

    @property
    def loops(self) -> int:
        return sum(k for (u, v), k in self.multiplicities if u == v)

    def e_counts(self) -> Counter:
        """``e_i``: number of vertex pairs joined by exactly ``i`` parallel edges."""
        return Counter(k for (u, v), k in self.multiplicities if u != v)

    def loop_counts(self) -> Counter:
        """``l_i``: number of vertices carrying exactly ``i`` loops."""
        return Counter(k for (u, v), k in self.multiplicities if u == v)

    def is_simple(self) -> bool:
        return all(u != v and k == 1 for (u, v), k in self.multiplicities)

    def simplification(self) -> LabeledGraph:
        return LabeledGraph(
            self.labels, tuple(e for e, _ in self.multiplicities if e[0] != e[1])
        )

    def to_graph(self) -> LabeledGraph:
        if not self.is_simple():
            raise GraphError("multigraph has loops or parallel edges")
        return self.simplification()

    def relabeled(self) -> tuple[LabeledMultigraph, dict[int, int]]:
        new_of = {old: i for i, old in enumerate(self.labels, start=1)}
        mg = build_multigraph_on(
            range(1, self.n + 1),
            ((new_of[u], new_of[v]) for u, v in self.edge_list()),
        )
        return mg, {i: old for old, i in new_of.items()}

    def to_json(self) -> dict:
        out: dict = {"n": self.n, "edges": [list(e) for e in self.edge_list()]}
        if self.labels != tuple(range(1, self.n + 1)):
            out["labels"] = list(self.labels)
        return out


def _check_labels(labels: set[int], u: int, v: int) -> None:
    if u not in labels or v not in labels:
        raise LabelOutOfRange(f"edge ({u}, {v}) has an endpoint outside the label set")


def build_graph(n: int, edges: Iterable[Sequence[int]]) -> LabeledGraph:
    return build_graph_on(range(1, n + 1), edges)


def build_graph_on(labels: Iterable[int], edges: Iterable[Sequence[int]]) -> LabeledGraph:
    labs = tuple(sorted(set(labels)))
    lab_set = set(labs)
    seen: set[tuple[int, int]] = set()
    for u, v in edges:
        _check_labels(lab_set, u, v)
        if u == v:
            raise LoopInSimpleGraph(f"loop at {u}")
        e = _norm(u, v)
        if e in seen:
            raise DuplicateEdge(f"edge {e} given twice")
        seen.add(e)
    return LabeledGraph(labs, tuple(sorted(seen)))


def build_multigraph(n: int, edges: Iterable[Sequence[int]]) -> LabeledMultigraph:
    return build_multigraph_on(range(1, n + 1), edges)


def build_multigraph_on(
    labels: Iterable[int], edges: Iterable[Sequence[int]]
) -> LabeledMultigraph:
    labs = tuple(sorted(set(labels)))
    lab_set = set(labs)
    counts: Counter = Counter()
    for u, v in edges:
        _check_labels(lab_set, u, v)
        counts[_norm(u, v)] += 1
    return LabeledMultigraph(labs, tuple(sorted(counts.items())))


def disjoint_union(a: LabeledMultigraph, b: LabeledMultigraph) -> LabeledMultigraph:
    if set(a.labels) & set(b.labels):
        raise LabelClash("label sets overlap")
    return build_multigraph_on(a.labels + b.labels, a.edge_list() + b.edge_list())


def graph_from_json(data: dict) -> LabeledGraph:
    labels = data.get("labels", range(1, data["n"] + 1))
    return build_graph_on(labels, data["edges"])


def multigraph_from_json(data: dict) -> LabeledMultigraph:
    labels = data.get("labels", range(1, data["n"] + 1))
    return build_multigraph_on(labels, data["edges"])


def dumps(g: LabeledGraph | LabeledMultigraph) -> str:
    return json.dumps(g.to_json(), sort_keys=True)


# ---------------------------------------------------------------------------
# components

class ComponentClass(enum.Enum):
    TREE = "tree"
    UNICYCLIC = "unicyclic"
    COMPLEX = "complex"


@dataclass(frozen=True)
class Component:
    vertices: tuple[int, ...]
    n_edges: int

    @property
    def order(self) -> int:
        return len(self.vertices)

    @property
    def cls(self) -> ComponentClass:
        diff = self.n_edges - len(self.vertices)
        if diff < 0:
            return ComponentClass.TREE
        if diff == 0:
            return ComponentClass.UNICYCLIC
        return ComponentClass.COMPLEX


@dataclass(frozen=True)
class ComponentView:
    components: tuple[Component, ...]

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self) -> Iterator[Component]:
        return iter(self.components)

    def __getitem__(self, i: int) -> Component:
        return self.components[i]

    def order(self, i: int) -> int:
        """``|H_i|`` with 1-based ``i``; 0 if the graph has fewer components."""
        return self.components[i - 1].order if i <= len(self.components) else 0

    def of_class(self, cls: ComponentClass) -> list[Component]:
        return [c for c in self.components if c.cls is cls]

    def complex_vertices(self) -> list[int]:
        return sorted(v for c in self.of_class(ComponentClass.COMPLEX) for v in c.vertices)

    def rest_vertices(self) -> list[int]:
        """Vertex set of ``R(G) = G - H_1``."""
        return sorted(v for c in self.components[1:] for v in c.vertices)


def components(g: LabeledGraph | LabeledMultigraph) -> ComponentView:
    labels = np.asarray(g.labels, dtype=np.int64)
    n = len(labels)
    if n == 0:
        return ComponentView(())
    edges = np.asarray(g.edge_list(), dtype=np.int64).reshape(-1, 2)
    idx = np.searchsorted(labels, edges) if len(edges) else edges
    adj = coo_matrix((np.ones(len(idx)), (idx[:, 0], idx[:, 1])), shape=(n, n)) if len(idx) else coo_matrix((n, n))
    n_comp, comp_of = connected_components(adj, directed=False)
    sizes = np.bincount(comp_of, minlength=n_comp)
    n_edges = np.bincount(comp_of[idx[:, 0]], minlength=n_comp) if len(idx) else np.zeros(n_comp, dtype=np.int64)
    order = np.argsort(comp_of, kind="stable")
    bounds = np.concatenate(([0], np.cumsum(sizes)))
    sorted_labels = labels[order].tolist()
    comps = [
        Component(tuple(sorted_labels[bounds[c]:bounds[c + 1]]), int(n_edges[c]))
        for c in range(n_comp)
    ]
    comps.sort(key=lambda c: (-c.order, c.vertices[0]))
    return ComponentView(tuple(comps))


def excess(g: LabeledGraph | LabeledMultigraph) -> int:
    return sum(c.n_edges - c.order for c in components(g).of_class(ComponentClass.COMPLEX))


def compensation_factor(mg: LabeledMultigraph) -> Fraction:
    w = Fraction(1, 2 ** mg.loops)
    for i, count in (mg.e_counts() + mg.loop_counts()).items():
        w /= factorial(i) ** count
    return w
