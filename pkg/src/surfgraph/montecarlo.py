"""Seeded sampling of uniform random graphs, rejection onto a surface, and sweeps.

Every draw comes from a numpy generator keyed by ``(seed, stream)``, so a
record depends only on the seed and its (grid point, sample index) position;
the number of worker processes never changes the output.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import asdict, dataclass, fields
from math import comb, isqrt
from multiprocessing import Pool
from typing import Callable

import numpy as np
from scipy.stats import binomtest

from .asymptotics import classify_regime
from .decompose import decompose
from .genus import TooLarge, embeddable, is_planar, min_genus
from .graph_model import ComponentClass, LabeledGraph, build_graph, components

CSV_SCHEMA_VERSION = 1
WORKERS_ENV = "SURFGRAPH_WORKERS"


class BadM(ValueError):
    pass


class Rejected(RuntimeError):
    pass


class CapExceeded(RuntimeError):
    pass


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(stream)))


def unrank_pair(i: int) -> tuple[int, int]:
    """Inverse of the colexicographic pair index ``(v-1)(v-2)/2 + (u-1)``."""
    t = (1 + isqrt(1 + 8 * i)) // 2  # t = v - 1
    while t * (t - 1) // 2 > i:
        t -= 1
    while (t + 1) * t // 2 <= i:
        t += 1
    return i - t * (t - 1) // 2 + 1, t + 1


def _draw_gnm(n: int, m: int, rng: np.random.Generator) -> LabeledGraph:
    total = comb(n, 2)
    if not 0 <= m <= total:
        raise BadM(f"m={m} outside [0, {total}]")
    # partial Fisher-Yates over the virtual array 0..total-1
    swapped: dict[int, int] = {}
    picks = rng.integers(np.arange(m, dtype=np.int64), total) if m else []
    chosen = []
    for i, j in enumerate(picks):
        j = int(j)
        chosen.append(swapped.get(j, j))
        swapped[j] = swapped.get(i, i)
    return build_graph(n, [unrank_pair(k) for k in chosen])


def sample_gnm(n: int, m: int, seed: int, stream: int = 0) -> LabeledGraph:
    return _draw_gnm(n, m, rng_for(seed, stream))


def sample_surface(n: int, m: int, g: int, seed: int, max_tries: int = 1000, stream: int = 0):
    """Rejection sampler for the uniform graph embeddable on the genus-``g`` surface.

    Returns ``(graph, tries)``.  Embeddability is decided on the kernels of
    the complex components, so only their dart counts meet the genus cap.
    """
    rng = rng_for(seed, stream)
    for tries in range(1, max_tries + 1):
        graph = _draw_gnm(n, m, rng)
        try:
            ok = is_planar(graph) if g == 0 else embeddable(graph, g)
        except TooLarge as exc:
            raise CapExceeded(str(exc)) from exc
        if ok:
            return graph, tries
    raise Rejected(f"no graph embeddable on genus {g} within {max_tries} tries")


@dataclass
class ExperimentRecord:
    n: int
    m: int
    g: int | None
    regime: str
    lam: float
    zeta: float
    sample: int
    accepted: bool
    tries: int
    h1: int
    h2: int
    h3: int
    h1_class: str
    h2_class: str
    n_tree: int
    n_unicyclic: int
    n_complex: int
    n_C: int
    n_U: int
    m_U: int
    n_core: int
    n_K: int
    l: int
    d: int
    planar_rest: bool | None = None
    genus_h1: int | None = None


FIELDS = [f.name for f in fields(ExperimentRecord)]


def measure(graph: LabeledGraph, g: int | None = None, sample: int = 0, tries: int = 1,
            accepted: bool = True, with_planar_rest: bool = False, with_genus: bool = False) -> ExperimentRecord:
    comps = components(graph)
    dec = decompose(graph, comps)
    spec = classify_regime(graph.n, graph.m) if graph.n else None
    cls = lambda i: comps[i].cls.value if i < len(comps) else ""  # noqa: E731
    rec = ExperimentRecord(
        n=graph.n,
        m=graph.m,
        g=g,
        regime=spec.regime.value if spec else "",
        lam=spec.lam if spec else 0.0,
        zeta=spec.zeta if spec else 0.0,
        sample=sample,
        accepted=accepted,
        tries=tries,
        h1=comps.order(1),
        h2=comps.order(2),
        h3=comps.order(3),
        h1_class=cls(0),
        h2_class=cls(1),
        n_tree=len(comps.of_class(ComponentClass.TREE)),
        n_unicyclic=len(comps.of_class(ComponentClass.UNICYCLIC)),
        n_complex=len(comps.of_class(ComponentClass.COMPLEX)),
        n_C=dec.n_C,
        n_U=dec.n_U,
        m_U=dec.m_U,
        n_core=dec.n_core,
        n_K=dec.n_K,
        l=dec.l,
        d=dec.d,
    )
    if with_planar_rest:
        rec.planar_rest = is_planar(graph.subgraph(comps.rest_vertices()))
    if with_genus and len(comps):
        try:
            rec.genus_h1 = min_genus(graph.subgraph(comps[0].vertices))
        except TooLarge as exc:
            raise CapExceeded(str(exc)) from exc
    return rec


# ---------------------------------------------------------------------------
# sweeps

@dataclass(frozen=True)
class GridPoint:
    """One sweep cell; ``m`` is derived from ``lam`` or ``zeta`` when not given.

    ``g = None`` samples plain uniform graphs, otherwise rejection onto genus ``g``.
    """

    n: int
    m: int
    g: int | None = None
    max_tries: int = 1000

    @classmethod
    def from_json(cls, data: dict) -> GridPoint:
        n = int(data["n"])
        if "m" in data:
            m = int(data["m"])
        elif "lam" in data:
            m = round((1 + data["lam"] * n ** (-1 / 3)) * n / 2)
        elif "zeta" in data:
            m = round((2 + data["zeta"] * n ** -0.4) * n / 2)
        elif "alpha" in data:
            m = round(data["alpha"] * n / 2)
        else:
            raise ValueError("grid point needs one of m, lam, zeta, alpha")
        return cls(n, m, data.get("g"), int(data.get("max_tries", 1000)))


def run_point(point: GridPoint, seed: int, index: int, sample: int) -> ExperimentRecord:
    stream = (index, sample)
    if point.g is None:
        graph = _draw_gnm(point.n, point.m, rng_for(seed, *stream))
        return measure(graph, None, sample)
    try:
        rng = rng_for(seed, *stream)
        for tries in range(1, point.max_tries + 1):
            graph = _draw_gnm(point.n, point.m, rng)
            ok = is_planar(graph) if point.g == 0 else embeddable(graph, point.g)
            if ok:
                return measure(graph, point.g, sample, tries)
    except TooLarge as exc:
        raise CapExceeded(str(exc)) from exc
    rec = measure(graph, point.g, sample, point.max_tries, accepted=False)
    return rec


def _task(args) -> tuple[int, int, ExperimentRecord]:
    point, seed, index, sample = args
    return index, sample, run_point(point, seed, index, sample)


def worker_count() -> int:
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def sweep(plan: list[GridPoint], reps: int, seed: int, workers: int | None = None) -> list[ExperimentRecord]:
    tasks = [(p, seed, i, r) for i, p in enumerate(plan) for r in range(reps)]
    workers = workers or worker_count()
    if workers > 1:
        with Pool(workers) as pool:
            results = pool.map(_task, tasks, chunksize=1)
    else:
        results = [_task(t) for t in tasks]
    results.sort(key=lambda x: (x[0], x[1]))
    return [r for _, _, r in results]


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def records_to_csv(records: list[ExperimentRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELDS)
    for r in records:
        w.writerow([_csv_cell(getattr(r, f)) for f in FIELDS])
    return buf.getvalue()


def summarize(records: list[ExperimentRecord], quantiles=(0.1, 0.5, 0.9)) -> list[dict]:
    """Per grid point: acceptance rate and quantiles of ``|H_1|``."""
    groups: dict[tuple, list[ExperimentRecord]] = {}
    for r in records:
        groups.setdefault((r.n, r.m, r.g), []).append(r)
    out = []
    for (n, m, g), rs in groups.items():
        acc = [r for r in rs if r.accepted]
        h1 = np.array([r.h1 for r in acc], dtype=float)
        row = {"n": n, "m": m, "g": g, "reps": len(rs), "accepted": len(acc),
               "acceptance_rate": len(acc) / sum(r.tries for r in rs)}
        for q in quantiles:
            row[f"h1_q{q}"] = float(np.quantile(h1, q)) if len(h1) else None
        out.append(row)
    return out


def fit_exponent(ns, values) -> float:
    """Least-squares slope of ``log value`` against ``log n``."""
    slope, _ = np.polyfit(np.log(np.asarray(ns, float)), np.log(np.asarray(values, float)), 1)
    return float(slope)


# ---------------------------------------------------------------------------
# census

@dataclass
class CensusEstimate:
    hits: int
    reps: int
    estimate: float
    low: float
    high: float
    confidence: float

    def to_json(self) -> dict:
        return asdict(self)


def census_probability(n: int, m: int, predicate: Callable[[LabeledGraph], bool], reps: int, seed: int,
                       g: int | None = None, confidence: float = 0.95) -> CensusEstimate:
    hits = 0
    for r in range(reps):
        if g is None:
            graph = sample_gnm(n, m, seed, r)
        else:
            graph, _ = sample_surface(n, m, g, seed, stream=r)
        hits += bool(predicate(graph))
    ci = binomtest(hits, reps).proportion_ci(confidence_level=confidence, method="wilson")
    return CensusEstimate(hits, reps, hits / reps, float(ci.low), float(ci.high), confidence)


def has_complex_component(graph: LabeledGraph) -> bool:
    return any(c.cls is ComponentClass.COMPLEX for c in components(graph))


def er_subcritical_target(n: int, lam: float) -> float:
    """``(2/lam^2) n^(2/3) log(-lam^3)`` for ``lam < 0``."""
    return 2 / lam ** 2 * n ** (2 / 3) * math.log(-lam ** 3)
