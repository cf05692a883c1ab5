"""Complex part / core / kernel decomposition and its inverse constructions.

``decompose`` splits a graph into its complex part and non-complex part,
peels the complex part down to its 2-core and contracts maximal degree-2
paths of the core into kernel edges.  The inverse direction is provided by
``subdivide`` (kernel to core), ``attach_forest`` (core to complex part) and
``add_noncomplex`` (complex part to full graph).
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Iterable, Iterator, Mapping, Sequence

from .graph_model import (
    ComponentClass,
    ComponentView,
    GraphError,
    LabelClash,
    LabeledGraph,
    LabeledMultigraph,
    build_graph_on,
    build_multigraph_on,
    compensation_factor,
    components,
)


class InconsistentPlan(GraphError):
    pass


class ComplexComponentInU(GraphError):
    pass


class EmptyKernelClass(ValueError):
    pass


class AdmissibilityViolation(AssertionError):
    pass


# ---------------------------------------------------------------------------
# kernel extraction, shared with the genus module

@dataclass(frozen=True)
class KernelPath:
    """A kernel edge ``tail -> head`` and the core vertices strictly inside it, in order."""

    tail: int
    head: int
    inner: tuple[int, ...]
    edge_ids: tuple[int, ...]


def peel(labels: Iterable[int], edges: Sequence[tuple[int, int]]) -> set[int]:
    """Vertices surviving repeated deletion of degree <= 1 vertices (ascending label order)."""
    alive = set(labels)
    deg = Counter()
    inc: dict[int, list[int]] = {v: [] for v in alive}
    for i, (u, v) in enumerate(edges):
        deg[u] += 1
        deg[v] += 1
        inc[u].append(i)
        if u != v:
            inc[v].append(i)
    removed_edge = [False] * len(edges)
    stack = sorted((v for v in alive if deg[v] <= 1), reverse=True)
    while stack:
        v = stack.pop()
        if v not in alive or deg[v] > 1:
            continue
        alive.discard(v)
        for i in inc[v]:
            if removed_edge[i]:
                continue
            removed_edge[i] = True
            a, b = edges[i]
            w = b if a == v else a
            deg[v] -= 1
            deg[w] -= 1
            if w in alive and deg[w] <= 1:
                stack.append(w)
    return alive


def kernel_paths(
    labels: Iterable[int], edges: Sequence[tuple[int, int]]
) -> tuple[list[int], list[KernelPath]]:
    """Contract maximal degree-2 paths of a graph with minimum degree >= 2.

    ``edges`` may contain loops and repeats.  Every component must contain a
    vertex of degree >= 3; pure cycles have no kernel and raise ``GraphError``.
    """
    labels = sorted(labels)
    inc: dict[int, list[int]] = {v: [] for v in labels}
    for i, (u, v) in enumerate(edges):
        inc[u].append(i)
        inc[v].append(i)  # a loop is listed twice at its vertex
    branch = [v for v in labels if len(inc[v]) >= 3]
    used = [False] * len(edges)
    paths: list[KernelPath] = []
    for v in branch:
        for i in inc[v]:
            if used[i]:
                continue
            used[i] = True
            ids = [i]
            inner: list[int] = []
            prev = i
            a, b = edges[i]
            x = b if a == v else a
            while len(inc[x]) == 2:
                inner.append(x)
                j = inc[x][0] if inc[x][1] == prev else inc[x][1]
                used[j] = True
                ids.append(j)
                a, b = edges[j]
                x = b if a == x else a
                prev = j
            paths.append(KernelPath(v, x, tuple(inner), tuple(ids)))
    if not all(used):
        raise GraphError("graph has a component without vertices of degree >= 3")
    return branch, paths


def kernel_of(labels: Iterable[int], edges: Sequence[tuple[int, int]]) -> LabeledMultigraph:
    branch, paths = kernel_paths(labels, edges)
    return build_multigraph_on(branch, ((p.tail, p.head) for p in paths))


# ---------------------------------------------------------------------------
# decomposition

@dataclass(frozen=True)
class SubdivisionPlan:
    """Per-kernel-edge sequences of inserted labels.

    ``edges[i]`` is an oriented kernel edge and ``sequences[i]`` the labels placed
    on it, read from tail to head.  Parallel edges and loops appear once per copy.
    """

    edges: tuple[tuple[int, int], ...]
    sequences: tuple[tuple[int, ...], ...]

    @property
    def inserted(self) -> int:
        return sum(len(s) for s in self.sequences)

    def to_json(self) -> dict:
        return {
            "edges": [list(e) for e in self.edges],
            "sequences": [list(s) for s in self.sequences],
        }


@dataclass(frozen=True)
class Decomposition:
    graph: LabeledGraph
    complex_part: LabeledGraph
    noncomplex_part: LabeledGraph
    core: LabeledGraph
    kernel: LabeledMultigraph
    plan: SubdivisionPlan
    forest: dict[int, int]  # non-core vertex of the complex part -> parent

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def m(self) -> int:
        return self.graph.m

    @property
    def n_C(self) -> int:
        return self.complex_part.n

    @property
    def n_U(self) -> int:
        return self.noncomplex_part.n

    @property
    def m_U(self) -> int:
        return self.noncomplex_part.m

    @property
    def n_core(self) -> int:
        return self.core.n

    @property
    def n_K(self) -> int:
        return self.kernel.n

    @property
    def m_K(self) -> int:
        return self.kernel.m

    @property
    def l(self) -> int:
        return self.complex_part.m - self.complex_part.n

    @property
    def d(self) -> int:
        return 2 * self.l - self.n_K

    def normalized_kernel(self) -> tuple[LabeledMultigraph, dict[int, int]]:
        """Kernel relabeled order-preservingly onto ``1..n_K`` with the map back."""
        return self.kernel.relabeled()

    def params(self) -> dict[str, int]:
        return {
            "n": self.n, "m": self.m, "n_C": self.n_C, "n_U": self.n_U, "m_U": self.m_U,
            "n_core": self.n_core, "n_K": self.n_K, "m_K": self.m_K, "l": self.l, "d": self.d,
        }

    def to_json(self) -> dict:
        _, label_map = self.normalized_kernel()
        return {
            "graph": self.graph.to_json(),
            "complex_part": self.complex_part.to_json(),
            "noncomplex_part": self.noncomplex_part.to_json(),
            "core": self.core.to_json(),
            "kernel": self.kernel.to_json(),
            "kernel_label_map": {str(k): v for k, v in label_map.items()},
            "plan": self.plan.to_json(),
            "forest": {str(k): v for k, v in sorted(self.forest.items())},
            **self.params(),
        }


def _forest_parents(complex_part: LabeledGraph, core_vertices: set[int]) -> dict[int, int]:
    adj = complex_part.adjacency()
    parent: dict[int, int] = {}
    frontier = sorted(core_vertices)
    seen = set(core_vertices)
    while frontier:
        nxt = []
        for v in frontier:
            for w in sorted(adj[v]):
                if w not in seen:
                    seen.add(w)
                    parent[w] = v
                    nxt.append(w)
        frontier = nxt
    return parent


def decompose(g: LabeledGraph, view: ComponentView | None = None) -> Decomposition:
    """Split ``g`` into complex part, core, kernel and plan; ``view`` may reuse ``components(g)``."""
    view = view or components(g)
    cverts = view.complex_vertices()
    cset = set(cverts)
    complex_part = g.subgraph(cverts)
    noncomplex_part = g.subgraph(v for v in g.labels if v not in cset)
    core_verts = peel(complex_part.labels, complex_part.edges)
    core = complex_part.subgraph(core_verts)
    if core.n:
        _, paths = kernel_paths(core.labels, core.edges)
        kernel = build_multigraph_on(
            [v for v, k in core.degrees().items() if k >= 3],
            ((p.tail, p.head) for p in paths),
        )
        order = sorted(paths, key=lambda p: (min(p.tail, p.head), max(p.tail, p.head), p.inner))
        plan = SubdivisionPlan(
            tuple((p.tail, p.head) for p in order), tuple(p.inner for p in order)
        )
    else:
        kernel = LabeledMultigraph((), ())
        plan = SubdivisionPlan((), ())
    return Decomposition(
        graph=g,
        complex_part=complex_part,
        noncomplex_part=noncomplex_part,
        core=core,
        kernel=kernel,
        plan=plan,
        forest=_forest_parents(complex_part, set(core_verts)),
    )


def check_admissible(dec: Decomposition, g: int | None = None) -> None:
    """Raise ``AdmissibilityViolation`` if the kernel size identities or a range check fails.

    Checks ``n_K = 2l - d``, ``m_K = 3l - d`` and the range conditions A1 to A6.
    A5 (``l <= 2 n_core + 6(g - 1)``) is only checked when a genus ``g`` on
    which the graph embeds is given.
    """
    n, m, n_C, n_core, l, d = dec.n, dec.m, dec.n_C, dec.n_core, dec.l, dec.d
    checks = {
        "A1": 0 <= n_C <= n,
        "A2": 0 <= n_core <= n_C,
        "A3": 0 <= l <= m - n_C,
        "A4": (l == 0) == (n_C == 0),
        "A6": 0 <= d <= 2 * l,
        "n_K": dec.n_K == 2 * l - d,
        "m_K": dec.m_K == 3 * l - d,
        "core_edges": dec.core.m == n_core + l,
        "kernel_empty": (dec.n_K == 0) == (n_C == 0),
    }
    if g is not None:
        checks["A5"] = l <= 2 * n_core + 6 * (g - 1) or l == 0
    if dec.n_K:
        checks["kernel_min_degree"] = min(dec.kernel.degrees().values()) >= 3
    if n_core:
        checks["core_min_degree"] = min(dec.core.degrees().values()) >= 2
    failed = [k for k, ok in checks.items() if not ok]
    if failed:
        raise AdmissibilityViolation(f"{failed} for {dec.params()}")


# ---------------------------------------------------------------------------
# inverse constructions


def subdivide(
    kernel: LabeledMultigraph, plan: SubdivisionPlan
) -> LabeledGraph | LabeledMultigraph:
    """Replace each kernel edge by the path through its inserted labels.

    Returns a ``LabeledGraph`` when the result is simple, else a multigraph.
    """
    if sorted(tuple(sorted(e)) for e in plan.edges) != kernel.edge_list():
        raise InconsistentPlan("plan edges do not match the kernel edge multiset")
    if len(plan.sequences) != len(plan.edges):
        raise InconsistentPlan("one label sequence per kernel edge required")
    new = [x for s in plan.sequences for x in s]
    if len(set(new)) != len(new) or set(new) & set(kernel.labels):
        raise InconsistentPlan("inserted labels must be fresh and distinct")
    out: list[tuple[int, int]] = []
    for (u, v), seq in zip(plan.edges, plan.sequences):
        walk = (u, *seq, v)
        out.extend(zip(walk, walk[1:]))
    mg = build_multigraph_on(kernel.labels + tuple(new), out)
    return mg.to_graph() if mg.is_simple() else mg


def attach_forest(core: LabeledGraph, forest: Mapping[int, int]) -> LabeledGraph:
    """Hang rooted trees on core vertices; ``forest`` maps each new vertex to its parent."""
    core_set = set(core.labels)
    if core_set & set(forest):
        raise LabelClash("forest relabels a core vertex")
    for v in forest:
        x, steps = v, 0
        while x in forest:
            x = forest[x]
            steps += 1
            if steps > len(forest):
                raise GraphError("forest contains a cycle")
        if x not in core_set:
            raise GraphError(f"tree containing {v} is not rooted in the core")
    return build_graph_on(
        core.labels + tuple(forest), list(core.edges) + [(c, p) for c, p in forest.items()]
    )


def add_noncomplex(c: LabeledGraph, u: LabeledGraph) -> LabeledGraph:
    if set(c.labels) & set(u.labels):
        raise LabelClash("complex part and non-complex part share labels")
    if components(u).of_class(ComponentClass.COMPLEX):
        raise ComplexComponentInU("U has a complex component")
    return build_graph_on(c.labels + u.labels, c.edges + u.edges)


def reconstruct(dec: Decomposition) -> LabeledGraph:
    if not dec.n_K:
        return add_noncomplex(dec.complex_part, dec.noncomplex_part)
    core = subdivide(dec.kernel, dec.plan)
    return add_noncomplex(attach_forest(core, dec.forest), dec.noncomplex_part)


# ---------------------------------------------------------------------------
# subdivision counting

def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Ordered ways to write ``total`` as ``parts`` non-negative integers."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(total + parts - 2 - prev)
        yield tuple(out)


def is_feasible(kernel_edges: Sequence[tuple[int, int]], lengths: Sequence[int]) -> bool:
    """Whether putting ``lengths[i]`` vertices on edge ``i`` yields a simple graph."""
    bare: Counter = Counter()
    for (u, v), k in zip(kernel_edges, lengths):
        if u == v:
            if k < 2:
                return False
        elif k == 0:
            key = (min(u, v), max(u, v))
            bare[key] += 1
            if bare[key] > 1:
                return False
    return True


def iter_plans(
    kernel: LabeledMultigraph, new_labels: Sequence[int]
) -> Iterator[SubdivisionPlan]:
    edges = tuple(kernel.edge_list())
    k = len(new_labels)
    for lengths in _compositions(k, len(edges)):
        for perm in itertools.permutations(new_labels):
            seqs, pos = [], 0
            for ln in lengths:
                seqs.append(tuple(perm[pos:pos + ln]))
                pos += ln
            yield SubdivisionPlan(edges, tuple(seqs))


def raw_plan_count(m_K: int, k: int) -> int:
    """Plans distributing ``k`` labeled vertices over ``m_K`` oriented edges."""
    if m_K == 0:
        return 1 if k == 0 else 0
    return factorial(k) * comb(k + m_K - 1, m_K - 1)


def feasible_plan_count(kernel: LabeledMultigraph, n_core: int) -> int:
    """Plans producing a simple core on ``n_core`` vertices (the per-kernel value under phi)."""
    k = n_core - kernel.n
    if k < 0:
        return 0
    edges = kernel.edge_list()
    feasible = sum(1 for lengths in _compositions(k, len(edges)) if is_feasible(edges, lengths))
    return feasible * factorial(k)


@dataclass(frozen=True)
class SubdivisionCount:
    raw: int
    feasible: int
    simple: int
    max_multiplicity: int
    min_multiplicity: int


def count_subdivisions(kernel: LabeledMultigraph, n_core: int) -> SubdivisionCount:
    """Enumerate every plan for ``kernel`` that inserts ``n_core - n_K`` new labels.

    ``simple`` counts distinct simple labeled cores; the multiplicity fields give
    how many plans produced each one (both equal ``1/w(kernel)`` when the
    compensation-factor law holds).
    """
    k = n_core - kernel.n
    if k < 0:
        raise InconsistentPlan("n_core smaller than the kernel")
    top = max(kernel.labels, default=0)
    new = tuple(range(top + 1, top + 1 + k))
    edges = tuple(kernel.edge_list())
    raw = 0
    seen: Counter = Counter()
    # every plan is built; simplicity is tested on the result, not predicted
    for lengths in _compositions(k, len(edges)):
        for perm in itertools.permutations(new):
            raw += 1
            out, pos = [], 0
            for (u, v), ln in zip(edges, lengths):
                walk = (u, *perm[pos:pos + ln], v)
                pos += ln
                out.extend((a, b) if a < b else (b, a) for a, b in zip(walk, walk[1:]))
            core = frozenset(out)
            if len(core) == len(out) and all(a != b for a, b in out):
                seen[core] += 1
    mults = seen.values()
    return SubdivisionCount(
        raw=raw,
        feasible=sum(mults),
        simple=len(seen),
        max_multiplicity=max(mults, default=0),
        min_multiplicity=min(mults, default=0),
    )


def phi_per_kernel(kernels: Iterable[LabeledMultigraph], n_core: int) -> list[tuple[LabeledMultigraph, Fraction, int]]:
    return [(k, compensation_factor(k), feasible_plan_count(k, n_core)) for k in kernels]


def phi_average(kernels: Iterable[LabeledMultigraph], n_core: int) -> Fraction:
    """Weighted (by compensation factor) mean number of simple-core-producing plans."""
    total_w = Fraction(0)
    total = Fraction(0)
    for _, w, count in phi_per_kernel(kernels, n_core):
        total_w += w
        total += w * count
    if total_w == 0:
        raise EmptyKernelClass("kernel class is empty")
    return total / total_w
