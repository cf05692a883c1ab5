"""Exact counting of the graph classes at small sizes and identity checks.

Simple classes are counted by walking every edge subset of ``K_n`` (edge
subsets indexed by bitmask over the pairs in colexicographic order).  The
structural flags of all subsets are computed at once with numpy; only graphs
that could be non-planar are handed to the genus module one by one.

Kernel classes are weighted multigraph classes, enumerated by multiplicity
vectors over vertex pairs and loops with a minimum-degree filter.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import numpy as np

from .decompose import phi_average
from .genus import embeddable
from .graph_model import LabeledMultigraph, build_graph, build_multigraph, compensation_factor

SIMPLE_CAP = 7
KERNEL_CAP_N = 6
KERNEL_CAP_M = 9


class CapExceeded(ValueError):
    pass


class IdentityViolation(AssertionError):
    def __init__(self, message: str, cell: dict):
        super().__init__(message)
        self.cell = cell


class BoundViolation(AssertionError):
    def __init__(self, message: str, cell: dict):
        super().__init__(message)
        self.cell = cell


class NonIntegralResult(ArithmeticError):
    pass


class GraphClass(enum.Enum):
    GENERAL = "general"
    COMPLEX = "complex"
    CORE = "core"
    KERNEL = "kernel"
    NONCOMPLEX = "noncomplex"


@dataclass(frozen=True)
class ClassQuery:
    cls: GraphClass
    n: int
    m: int
    g: int = 0


# ---------------------------------------------------------------------------
# all simple graphs on [n]

def pairs(n: int) -> list[tuple[int, int]]:
    """Pairs of ``[n]`` in colexicographic order; bit ``i`` of a mask is ``pairs(n)[i]``."""
    return [(u, v) for v in range(2, n + 1) for u in range(1, v)]


@dataclass
class _SimpleTable:
    n: int
    masks: np.ndarray
    m: np.ndarray
    noncomplex: np.ndarray
    all_complex: np.ndarray
    min_deg2: np.ndarray
    maybe_nonplanar: np.ndarray
    genus_ok: dict = field(default_factory=dict)  # (mask, g) -> bool

    def graph(self, mask: int):
        return build_graph(self.n, [p for i, p in enumerate(pairs(self.n)) if mask >> i & 1])

    def embeds(self, mask: int, g: int) -> bool:
        key = (mask, g)
        if key not in self.genus_ok:
            self.genus_ok[key] = embeddable(self.graph(mask), g)
        return self.genus_ok[key]


@lru_cache(maxsize=None)
def _table(n: int) -> _SimpleTable:
    if n > SIMPLE_CAP:
        raise CapExceeded(f"simple classes are enumerated only for n <= {SIMPLE_CAP}")
    ps = pairs(n)
    masks = np.arange(1 << len(ps), dtype=np.int64)
    bits = [((masks >> i) & 1).astype(bool) for i in range(len(ps))]
    m = np.zeros(len(masks), dtype=np.int64)
    deg = np.zeros((n + 1, len(masks)), dtype=np.int64)
    for (u, v), b in zip(ps, bits):
        m += b
        deg[u] += b
        deg[v] += b
    # component label = smallest reachable vertex
    lab = np.tile(np.arange(n + 1, dtype=np.int64)[:, None], (1, len(masks)))
    for _ in range(max(n - 1, 0)):
        changed = False
        for (u, v), b in zip(ps, bits):
            low = np.minimum(lab[u], lab[v])
            nu = np.where(b, low, lab[u])
            nv = np.where(b, low, lab[v])
            changed = changed or bool((nu != lab[u]).any() or (nv != lab[v]).any())
            lab[u], lab[v] = nu, nv
        if not changed:
            break
    comp_v = np.zeros((n + 1, len(masks)), dtype=np.int64)
    comp_e = np.zeros((n + 1, len(masks)), dtype=np.int64)
    for x in range(1, n + 1):
        for c in range(1, n + 1):
            comp_v[c] += lab[x] == c
    for (u, _), b in zip(ps, bits):
        for c in range(1, n + 1):
            comp_e[c] += b & (lab[u] == c)
    present = comp_v[1:] > 0
    surplus = comp_e[1:] - comp_v[1:]
    noncomplex = ~((surplus > 0) & present).any(axis=0)
    all_complex = ~((surplus <= 0) & present).any(axis=0)
    min_deg2 = (deg[1:] >= 2).all(axis=0) if n else np.ones(len(masks), dtype=bool)
    branch = (deg[1:] >= 3).sum(axis=0)
    maybe_nonplanar = (m >= 9) & (branch >= 5)
    return _SimpleTable(n, masks, m, noncomplex, all_complex, min_deg2, maybe_nonplanar)


def iter_masks(n: int, m: int):
    """Masks of all graphs on ``[n]`` with ``m`` edges, ascending."""
    t = _table(n)
    return t.masks[t.m == m]


def _count_simple(cls: GraphClass, n: int, m: int, g: int) -> int:
    if n == 0:
        return 1 if m == 0 else 0
    t = _table(n)
    sel = t.m == m
    if cls is GraphClass.NONCOMPLEX:
        return int((sel & t.noncomplex).sum())
    if cls is GraphClass.COMPLEX:
        sel = sel & t.all_complex
    elif cls is GraphClass.CORE:
        sel = sel & t.all_complex & t.min_deg2
    total = int((sel & ~t.maybe_nonplanar).sum())
    for mask in t.masks[sel & t.maybe_nonplanar]:
        total += t.embeds(int(mask), g)
    return total


# ---------------------------------------------------------------------------
# kernels: weighted multigraphs with minimum degree 3

def iter_kernels(n: int, m: int, min_degree: int = 3):
    """All multigraphs on ``[n]`` with ``m`` edges and minimum degree >= ``min_degree``."""
    types = [(u, w) for u in range(1, n + 1) for w in range(u, n + 1)]
    last_type = {v: max(i for i, (a, b) in enumerate(types) if v in (a, b)) for v in range(1, n + 1)}
    finished_at: dict[int, list[int]] = {}
    for v, i in last_type.items():
        finished_at.setdefault(i, []).append(v)
    deg = [0] * (n + 1)
    mult = [0] * len(types)

    def rec(i: int, left: int):
        if i == len(types):
            if left == 0:
                yield build_multigraph(n, [t for t, k in zip(types, mult) for _ in range(k)])
            return
        u, w = types[i]
        step = 2 if u == w else 1
        for k in range(left + 1):
            deg[u] += step * k if u == w else k
            if u != w:
                deg[w] += k
            ok = all(deg[v] >= min_degree for v in finished_at.get(i, ()))
            need = sum(max(0, min_degree - deg[v]) for v in range(1, n + 1))
            if ok and need <= 2 * (left - k):
                mult[i] = k
                yield from rec(i + 1, left - k)
            deg[u] -= step * k if u == w else k
            if u != w:
                deg[w] -= k
        mult[i] = 0

    if n == 0:
        if m == 0:
            yield LabeledMultigraph((), ())
        return
    yield from rec(0, m)


@lru_cache(maxsize=None)
def kernel_class(n: int, m: int, g: int) -> tuple[LabeledMultigraph, ...]:
    if n > KERNEL_CAP_N or m > KERNEL_CAP_M:
        raise CapExceeded(f"kernel classes are enumerated only for n <= {KERNEL_CAP_N}, m <= {KERNEL_CAP_M}")
    return tuple(k for k in iter_kernels(n, m) if k.n == 0 or embeddable(k, g))


def kernel_weight(n: int, m: int, g: int) -> Fraction:
    return sum((compensation_factor(k) for k in kernel_class(n, m, g)), Fraction(0))


def brute_count(q: ClassQuery) -> int | Fraction:
    if q.n < 0 or q.m < 0:
        return 0
    if q.cls is GraphClass.KERNEL:
        return kernel_weight(q.n, q.m, q.g)
    return _count_simple(q.cls, q.n, q.m, q.g)


# ---------------------------------------------------------------------------
# graphs without complex components

def trees(s: int) -> int:
    """Labeled trees on ``s`` vertices."""
    return 1 if s <= 2 else s ** (s - 2)


def rooted_forests(total: int, roots: int) -> Fraction:
    """Forests on ``total`` labeled vertices consisting of trees rooted at ``roots`` given vertices."""
    if total == roots:
        return Fraction(1)
    return Fraction(roots * total ** (total - roots - 1))


@lru_cache(maxsize=None)
def unicyclic(s: int) -> int:
    """Connected labeled graphs on ``s`` vertices with exactly one cycle.

    Choose the ``k`` cycle vertices, one of ``(k-1)!/2`` cyclic orders on them,
    and a forest on all ``s`` vertices rooted at the cycle.
    """
    total = Fraction(0)
    for k in range(3, s + 1):
        total += comb(s, k) * Fraction(factorial(k - 1), 2) * rooted_forests(s, k)
    assert total.denominator == 1
    return int(total)


@lru_cache(maxsize=None)
def count_noncomplex(n: int, m: int) -> int:
    """``|U(n, m)|`` by splitting off the component containing the smallest label."""
    if m < 0 or n < 0:
        return 0
    if n == 0:
        return 1 if m == 0 else 0
    if m > n:
        return 0
    total = 0
    for s in range(1, n + 1):
        ways = comb(n - 1, s - 1)
        total += ways * trees(s) * count_noncomplex(n - s, m - s + 1)
        if s >= 3:
            total += ways * unicyclic(s) * count_noncomplex(n - s, m - s)
    return total


def rho_exact(n: int, m: int) -> Fraction:
    return Fraction(count_noncomplex(n, m), comb(comb(n, 2), m))


# ---------------------------------------------------------------------------
# identities

@dataclass
class IdentityReport:
    name: str
    params: dict
    lhs: Fraction
    rhs: Fraction
    terms: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.lhs == self.rhs

    def to_json(self) -> dict:
        return {
            "identity": self.name,
            **self.params,
            "lhs": str(self.lhs),
            "rhs": str(self.rhs),
            "ok": self.ok,
            "terms": {k: str(v) for k, v in self.terms.items()},
        }


def _finish(report: IdentityReport, strict: bool) -> IdentityReport:
    if strict and not report.ok:
        raise IdentityViolation(
            f"{report.name} fails at {report.params}: {report.lhs} != {report.rhs}",
            {**report.params, "lhs": str(report.lhs), "rhs": str(report.rhs)},
        )
    return report


def complex_count(n_C: int, m_C: int, g: int) -> int:
    return brute_count(ClassQuery(GraphClass.COMPLEX, n_C, m_C, g))


def core_count(n_core: int, m_core: int, g: int) -> int:
    return brute_count(ClassQuery(GraphClass.CORE, n_core, m_core, g))


def verify_identity_general(n: int, m: int, g: int, strict: bool = True) -> IdentityReport:
    lhs = brute_count(ClassQuery(GraphClass.GENERAL, n, m, g))
    terms = {}
    rhs = 0
    for n_C in range(n + 1):
        ls = [0] if n_C == 0 else range(1, m - n_C + 1)
        for l in ls:
            n_U, m_U = n - n_C, m - n_C - l
            term = comb(n, n_C) * complex_count(n_C, n_C + l, g) * count_noncomplex(n_U, m_U)
            if term:
                terms[f"n_C={n_C},l={l}"] = term
                rhs += term
    return _finish(IdentityReport("general", {"n": n, "m": m, "g": g}, Fraction(lhs), Fraction(rhs), terms), strict)


def verify_identity_complexcore(n_C: int, l: int, g: int, strict: bool = True) -> IdentityReport:
    lhs = complex_count(n_C, n_C + l, g)
    terms = {}
    rhs = Fraction(0)
    for n_core in range(1, n_C + 1):
        term = comb(n_C, n_core) * core_count(n_core, n_core + l, g) * rooted_forests(n_C, n_core)
        if term:
            terms[f"n_core={n_core}"] = term
            rhs += term
    return _finish(
        IdentityReport("complexcore", {"n_C": n_C, "l": l, "g": g}, Fraction(lhs), rhs, terms), strict
    )


def phi(n_core: int, l: int, d: int, g: int) -> Fraction:
    """Weighted mean number of simple-core plans over the kernel class ``K_g(2l-d, 3l-d)``."""
    return phi_average(kernel_class(2 * l - d, 3 * l - d, g), n_core)


def verify_identity_core(n_core: int, l: int, g: int, strict: bool = True) -> IdentityReport:
    lhs = core_count(n_core, n_core + l, g)
    terms = {}
    rhs = Fraction(0)
    for d in range(2 * l + 1):
        n_K, m_K = 2 * l - d, 3 * l - d
        if n_K > n_core:
            continue
        weight = kernel_weight(n_K, m_K, g)
        if weight == 0:
            continue
        term = comb(n_core, n_K) * weight * phi(n_core, l, d, g)
        if term:
            terms[f"d={d}"] = term
            rhs += term
    if rhs.denominator != 1:
        raise NonIntegralResult(f"core identity gives {rhs} at n_core={n_core}, l={l}, g={g}")
    return _finish(IdentityReport("core", {"n_core": n_core, "l": l, "g": g}, Fraction(lhs), rhs, terms), strict)


@dataclass
class BoundReport:
    name: str
    params: dict
    value: Fraction
    lower: Fraction | None
    upper: Fraction | None

    @property
    def ok(self) -> bool:
        return (self.lower is None or self.lower <= self.value) and (
            self.upper is None or self.value <= self.upper
        )

    def to_json(self) -> dict:
        return {
            "bound": self.name,
            **self.params,
            "value": str(self.value),
            "lower": None if self.lower is None else str(self.lower),
            "upper": None if self.upper is None else str(self.upper),
            "ok": self.ok,
        }


def _check(report: BoundReport, strict: bool) -> BoundReport:
    if strict and not report.ok:
        raise BoundViolation(f"{report.name} violated at {report.params}", report.to_json())
    return report


def verify_kernel_pumping(l: int, g: int, strict: bool = True) -> list[BoundReport]:
    """Ratio of weighted kernel counts at deficiency ``d`` to the cubic count, for every ``d``."""
    cubic = kernel_weight(2 * l, 3 * l, g)
    reports = []
    for d in range(2 * l + 1):
        ratio = kernel_weight(2 * l - d, 3 * l - d, g) / cubic
        upper = Fraction(6 ** d, factorial(d))
        lower = Fraction(1, 216 ** d * factorial(d)) if 7 * d <= 2 * l else None
        reports.append(_check(BoundReport("kernel_pumping", {"l": l, "d": d, "g": g}, ratio, lower, upper), strict))
    return reports


def binom_or_zero(top: int, k: int) -> int:
    return comb(top, k) if 0 <= k <= top else 0


def binsandballs_bracket(n_core: int, l: int, d: int) -> tuple[int, int]:
    k = n_core - 2 * l + d
    if k < 0:
        return 0, 0
    lower = factorial(k) * binom_or_zero(n_core - 5 * l - 1, 3 * l - d - 1)
    upper = factorial(k) * binom_or_zero(n_core + l - 1, 3 * l - d - 1)
    return lower, upper


def verify_binsandballs(l: int, d: int, g: int, n_core: int, strict: bool = True) -> BoundReport:
    value = phi(n_core, l, d, g)
    lower, upper = binsandballs_bracket(n_core, l, d)
    return _check(
        BoundReport("binsandballs", {"l": l, "d": d, "g": g, "n_core": n_core}, value, Fraction(lower), Fraction(upper)),
        strict,
    )


def binom_real(x: float, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= (x - i) / (i + 1)
    return out


def solve_nu(phi_value: Fraction, n_core: int, l: int, d: int) -> float | None:
    """A ``nu`` in ``[-5, 1]`` with ``(n_core-2l+d)! binom(n_core+nu*l-1, 3l-d-1) = phi``."""
    k = 3 * l - d - 1
    scale = factorial(n_core - 2 * l + d)
    target = float(phi_value / scale)
    lo_x, hi_x = n_core - 5 * l - 1, n_core + l - 1
    if target == 0:
        if lo_x <= k - 1 and hi_x >= 0:
            x = max(lo_x, min(hi_x, k - 1))
            return (x - n_core + 1) / l
        return None
    a = max(lo_x, k - 1)
    b = hi_x
    if a > b or not binom_real(a, k) <= target <= binom_real(b, k):
        return None
    for _ in range(200):
        mid = (a + b) / 2
        if binom_real(mid, k) < target:
            a = mid
        else:
            b = mid
    return ((a + b) / 2 - n_core + 1) / l
