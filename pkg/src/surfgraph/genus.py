"""Orientable embeddability: planarity and minimum genus via rotation systems.

Darts are numbered per expanded edge list: edge ``i = (u, v)`` owns dart ``2i``
leaving ``u`` and dart ``2i + 1`` leaving ``v``; ``d ^ 1`` reverses a dart.  The
face permutation sends ``d`` to the successor of ``d ^ 1`` in the rotation at
the head of ``d``.

Minimum genus is computed per component on the kernel, which has the same
genus: removing pendant trees and suppressing degree-2 vertices changes
``E - V`` and the face count together.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from math import factorial
from typing import Sequence

import networkx as nx

from .decompose import kernel_paths, peel
from .graph_model import (
    ComponentClass,
    GraphError,
    LabeledGraph,
    LabeledMultigraph,
    components,
)

DEFAULT_DART_CAP = int(os.environ.get("SURFGRAPH_GENUS_DART_CAP", "24"))
# search nodes allowed for a kernel component above the dart cap
OVER_CAP_NODE_BUDGET = 2_000_000


class Disconnected(GraphError):
    pass


class TooLarge(RuntimeError):
    pass


@dataclass(frozen=True)
class RotationSystem:
    """Cyclic dart order per vertex, darts indexed into ``edges``."""

    edges: tuple[tuple[int, int], ...]
    rotation: dict[int, tuple[int, ...]]

    def validate(self) -> None:
        seen = sorted(d for darts in self.rotation.values() for d in darts)
        if seen != list(range(2 * len(self.edges))):
            raise GraphError("every dart must appear exactly once")
        for v, darts in self.rotation.items():
            for d in darts:
                if _tail(self.edges, d) != v:
                    raise GraphError(f"dart {d} does not leave vertex {v}")


@dataclass(frozen=True)
class GenusResult:
    genus: int
    witness: RotationSystem | None = None


def _tail(edges: Sequence[tuple[int, int]], d: int) -> int:
    return edges[d >> 1][d & 1]


def face_orbits(edges: Sequence[tuple[int, int]], rotation: dict[int, Sequence[int]]) -> list[list[int]]:
    succ_in_rot: dict[int, int] = {}
    for darts in rotation.values():
        for i, d in enumerate(darts):
            succ_in_rot[d] = darts[(i + 1) % len(darts)]
    seen = [False] * (2 * len(edges))
    orbits = []
    for start in range(2 * len(edges)):
        if seen[start]:
            continue
        orbit = []
        d = start
        while not seen[d]:
            seen[d] = True
            orbit.append(d)
            d = succ_in_rot[d ^ 1]
        orbits.append(orbit)
    return orbits


def faces(mg: LabeledMultigraph | LabeledGraph, rot: RotationSystem) -> int:
    if len(components(mg)) > 1:
        raise Disconnected("face tracing needs a connected graph")
    if sorted(tuple(sorted(e)) for e in rot.edges) != sorted(mg.edge_list()):
        raise GraphError("rotation system edges differ from the graph")
    rot.validate()
    return len(face_orbits(rot.edges, rot.rotation))


def euler_genus(n_vertices: int, n_edges: int, n_faces: int) -> int:
    twice = 2 - n_vertices + n_edges - n_faces
    if twice < 0 or twice % 2:
        raise GraphError(f"V={n_vertices}, E={n_edges}, F={n_faces} is not an orientable embedding")
    return twice // 2


# ---------------------------------------------------------------------------
# planarity

def is_planar(g: LabeledGraph | LabeledMultigraph) -> bool:
    """Planarity of the simplification (loops and parallel edges never matter)."""
    simple = g.simplification() if isinstance(g, LabeledMultigraph) else g
    if simple.m < 9:
        return True  # K5 and K3,3 need at least 9 edges
    core = peel(simple.labels, simple.edges)
    if len(core) < 5:
        return True
    sub = simple.subgraph(core)
    deg = sub.degrees()
    branch = sum(1 for v in sub.labels if deg[v] >= 3)
    if branch < 5:
        return True  # a Kuratowski subdivision has >= 5 branch vertices
    if sub.m > 3 * sub.n - 6:
        return False
    g_nx = nx.Graph()
    g_nx.add_nodes_from(sub.labels)
    g_nx.add_edges_from(sub.edges)
    planar, _ = nx.check_planarity(g_nx)
    return planar


# ---------------------------------------------------------------------------
# rotation search

class _Budget(Exception):
    pass


def _search(
    vertices: Sequence[int],
    edges: Sequence[tuple[int, int]],
    target_faces: int,
    node_budget: int | None,
) -> dict[int, tuple[int, ...]] | None:
    """Find a rotation system of a connected multigraph with at least ``target_faces`` faces."""
    n_darts = 2 * len(edges)
    out: dict[int, list[int]] = {v: [] for v in vertices}
    for d in range(n_darts):
        out[_tail(edges, d)].append(d)
    # BFS order from a max-degree vertex closes faces early
    adj: dict[int, list[int]] = {v: [] for v in vertices}
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    start = max(vertices, key=lambda v: (len(out[v]), -v))
    order, seen = [start], {start}
    for v in order:
        for w in sorted(set(adj[v]), key=lambda x: (-len(out[x]), x)):
            if w not in seen:
                seen.add(w)
                order.append(w)
    simple = all(u != v for u, v in edges) and len(set(map(frozenset, edges))) == len(edges)
    min_face = 3 if simple else 1

    succ = [-1] * n_darts
    in_closed = [False] * n_darts
    state = {"closed": 0, "closed_darts": 0, "open": n_darts, "nodes": 0}
    chosen: dict[int, tuple[int, ...]] = {}

    def rotations(v: int, first_vertex: bool):
        darts = out[v]
        head, rest = darts[0], darts[1:]
        for perm in itertools.permutations(rest):
            # mirror images give the same face count; keep one orientation at the root
            if first_vertex and len(perm) >= 2 and perm[0] > perm[-1]:
                continue
            yield (head, *perm)

    def assign(v: int, rot: tuple[int, ...]) -> list[int]:
        new = []
        k = len(rot)
        for i, x in enumerate(rot):
            d = x ^ 1
            succ[d] = rot[(i + 1) % k]
            new.append(d)
        state["open"] -= k
        closed_now = []
        for d in new:
            if in_closed[d]:
                continue
            y = succ[d]
            length = 1
            while y != d and y >= 0:
                y = succ[y]
                length += 1
            if y == d:
                y = d
                while True:
                    in_closed[y] = True
                    closed_now.append(y)
                    y = succ[y]
                    if y == d:
                        break
                state["closed"] += 1
        state["closed_darts"] += len(closed_now)
        return new + [-1] + closed_now

    def unassign(trail: list[int]) -> None:
        sep = trail.index(-1)
        new, closed_now = trail[:sep], trail[sep + 1:]
        for d in closed_now:
            in_closed[d] = False
        faces_closed = 0
        # recount closed faces removed by walking the closed darts
        visited = set()
        for d in closed_now:
            if d in visited:
                continue
            y = d
            while y not in visited:
                visited.add(y)
                y = succ[y]
            faces_closed += 1
        state["closed"] -= faces_closed
        state["closed_darts"] -= len(closed_now)
        for d in new:
            succ[d] = -1
        state["open"] += len(new)

    def bound() -> int:
        remaining = n_darts - state["closed_darts"]
        return state["closed"] + min(state["open"], remaining // min_face)

    def dfs(i: int) -> bool:
        if i == len(order):
            return state["closed"] >= target_faces
        v = order[i]
        for rot in rotations(v, i == 0):
            state["nodes"] += 1
            if node_budget is not None and state["nodes"] > node_budget:
                raise _Budget
            trail = assign(v, rot)
            if bound() >= target_faces:
                chosen[v] = rot
                if dfs(i + 1):
                    return True
            unassign(trail)
        return False

    if dfs(0):
        return dict(chosen)
    return None


def _canonical_key(vertices: Sequence[int], edges: Sequence[tuple[int, int]]):
    """Isomorphism-invariant key for small multigraphs, or ``None`` when too costly."""
    deg = {v: 0 for v in vertices}
    loops = {v: 0 for v in vertices}
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
        if u == v:
            loops[u] += 1
    nbr = {v: [] for v in vertices}
    for u, v in edges:
        if u != v:
            nbr[u].append(v)
            nbr[v].append(u)
    color = {v: (deg[v], loops[v]) for v in vertices}
    for _ in range(len(vertices)):
        new = {v: (color[v], tuple(sorted(color[w] for w in nbr[v]))) for v in vertices}
        palette = {c: i for i, c in enumerate(sorted(set(new.values())))}
        new = {v: palette[new[v]] for v in vertices}
        if len(set(new.values())) == len(set(color.values())):
            color = new
            break
        color = new
    cells: dict[int, list[int]] = {}
    for v in vertices:
        cells.setdefault(color[v], []).append(v)
    ordered = [cells[c] for c in sorted(cells)]
    n_perm = 1
    for cell in ordered:
        n_perm *= factorial(len(cell))
    if n_perm > 5040:
        return None
    best = None
    for choice in itertools.product(*(itertools.permutations(c) for c in ordered)):
        pos = {}
        for v in itertools.chain.from_iterable(choice):
            pos[v] = len(pos)
        key = tuple(sorted((min(pos[u], pos[v]), max(pos[u], pos[v])) for u, v in edges))
        if best is None or key < best:
            best = key
    return (len(vertices), best)


_GENUS_CACHE: dict = {}  # canonical key -> exact genus
_LOWER_CACHE: dict = {}  # canonical key -> proven lower bound


def _kernel_component_genus(
    vertices: Sequence[int],
    edges: Sequence[tuple[int, int]],
    cap: int,
    upper_stop: int | None = None,
) -> tuple[int, dict[int, tuple[int, ...]] | None]:
    """Exact genus of a connected multigraph with min degree >= 3, plus a witness rotation.

    With ``upper_stop`` the search gives up as soon as the genus is known to
    exceed it and returns a value above ``upper_stop`` without a witness.
    """
    V, E = len(vertices), len(edges)
    key = _canonical_key(vertices, edges)
    known = _GENUS_CACHE.get(key) if key is not None else None
    if known is not None and upper_stop is not None and known > upper_stop:
        return known, None
    if known is not None:
        lower = known
    else:
        simple = LabeledGraph(
            tuple(vertices), tuple(sorted({tuple(sorted(e)) for e in edges if e[0] != e[1]}))
        )
        lower = 0 if is_planar(simple) else 1
        if all(u != v for u, v in edges) and len({tuple(sorted(e)) for e in edges}) == E:
            lower = max(lower, -(-(E - 3 * V + 6) // 6))
        if key is not None:
            lower = max(lower, _LOWER_CACHE.get(key, 0))
    upper = (E - V + 1) // 2
    budget = None if 2 * E <= cap else OVER_CAP_NODE_BUDGET
    for g in range(lower, upper + 1):
        if upper_stop is not None and g > upper_stop:
            return g, None
        try:
            rot = _search(vertices, edges, 2 - 2 * g - V + E, budget)
        except _Budget:
            raise TooLarge(f"{2 * E} darts exceed cap {cap} and the search did not converge")
        if rot is not None:
            if key is not None:
                _GENUS_CACHE[key] = g
            return g, rot
        if key is not None:
            _LOWER_CACHE[key] = g + 1
    raise AssertionError("no embedding found up to the maximum genus")


def _genus_with_witness(
    mg: LabeledMultigraph, cap: int, upper_stop: int | None
) -> tuple[int, RotationSystem | None]:
    edges = mg.edge_list()
    view = components(mg)
    rotation: dict[int, list[int]] = {v: [] for v in mg.labels}
    for d in range(2 * len(edges)):
        rotation[_tail(edges, d)].append(d)
    total = 0
    witness_ok = True
    for comp in view:
        if comp.cls is not ComponentClass.COMPLEX:
            continue
        cset = set(comp.vertices)
        ids = [i for i, (u, v) in enumerate(edges) if u in cset]
        core = peel(comp.vertices, [edges[i] for i in ids])
        core_ids = [i for i in ids if edges[i][0] in core and edges[i][1] in core]
        branch, paths = kernel_paths(sorted(core), [edges[i] for i in core_ids])
        k_edges = [(p.tail, p.head) for p in paths]
        stop = None if upper_stop is None else upper_stop - total
        g, rot = _kernel_component_genus(branch, k_edges, cap, stop)
        total += g
        if upper_stop is not None and total > upper_stop:
            return total, None
        if rot is None:
            witness_ok = False
            continue
        # lift: kernel dart 2j leaves p.tail along its first edge, 2j+1 leaves p.head along its last
        for v, k_rot in rot.items():
            lifted = []
            for kd in k_rot:
                p = paths[kd >> 1]
                local = p.edge_ids if kd & 1 == 0 else p.edge_ids[::-1]
                e = core_ids[local[0]]
                u, w = edges[e]
                if u == w:
                    # loop in the original graph: the orientation matches the kernel dart
                    dart = 2 * e + (kd & 1)
                else:
                    dart = 2 * e if u == v else 2 * e + 1
                lifted.append(dart)
            others = [d for d in rotation[v] if d not in set(lifted)]
            rotation[v] = lifted + others
    witness = None
    if witness_ok:
        witness = RotationSystem(tuple(edges), {v: tuple(ds) for v, ds in rotation.items()})
    return total, witness


def min_genus(g: LabeledMultigraph | LabeledGraph, cap: int | None = None) -> GenusResult:
    mg = g.to_multigraph() if isinstance(g, LabeledGraph) else g
    genus, witness = _genus_with_witness(mg, DEFAULT_DART_CAP if cap is None else cap, None)
    return GenusResult(genus, witness)


def embeddable(g: LabeledMultigraph | LabeledGraph, genus: int, cap: int | None = None) -> bool:
    """Whether ``g`` embeds on the orientable surface of the given genus."""
    if genus < 0:
        return False
    if is_planar(g):
        return True
    if genus == 0:
        return False
    mg = g.to_multigraph() if isinstance(g, LabeledGraph) else g
    total, _ = _genus_with_witness(mg, DEFAULT_DART_CAP if cap is None else cap, genus)
    return total <= genus


def clear_cache() -> None:
    _GENUS_CACHE.clear()
    _LOWER_CACHE.clear()
