"""Log-space evaluation of the asymptotic formulas and sums.

Huge counts are carried as :class:`LogValue` (sign plus mpmath log-magnitude).
Long sums over ``n_core`` and ``d`` run in float64 log space with numpy; the
fixed point ``l0`` and the closed forms for the number of graphs on a surface
use mpmath so that exponents of order ``n log n`` at ``n = 1e10`` keep their
low digits.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import mpmath
import numpy as np
from scipy.special import gammaln, logsumexp

PRECISION_DPS = 50
CORE_CUTOFF = 80.0


class OutOfScope(ValueError):
    pass


class DomainError(ValueError):
    pass


class NoRoot(ArithmeticError):
    pass


class Inadmissible(ValueError):
    pass


# ---------------------------------------------------------------------------
# log values

@dataclass(frozen=True)
class LogValue:
    """``sign * exp(log)``; ``sign == 0`` is exact zero."""

    sign: int
    log: mpmath.mpf = field(default_factory=lambda: mpmath.mpf("-inf"))

    @classmethod
    def zero(cls) -> LogValue:
        return cls(0)

    @classmethod
    def of(cls, x) -> LogValue:
        x = mpmath.mpf(x)
        if x == 0:
            return cls(0)
        return cls(1 if x > 0 else -1, mpmath.log(abs(x)))

    @classmethod
    def from_log(cls, log) -> LogValue:
        return cls(1, mpmath.mpf(log))

    def __mul__(self, other: LogValue) -> LogValue:
        if self.sign == 0 or other.sign == 0:
            return LogValue(0)
        return LogValue(self.sign * other.sign, self.log + other.log)

    def __add__(self, other: LogValue) -> LogValue:
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        big, small = (self, other) if self.log >= other.log else (other, self)
        ratio = mpmath.exp(small.log - big.log)
        if big.sign == small.sign:
            return LogValue(big.sign, big.log + mpmath.log1p(ratio))
        if ratio == 1:
            return LogValue(0)
        return LogValue(big.sign, big.log + mpmath.log1p(-ratio))

    def value(self):
        return self.sign * mpmath.exp(self.log) if self.sign else mpmath.mpf(0)

    def __float__(self) -> float:
        return float(self.value())

    def to_json(self) -> dict:
        return {"sign": self.sign, "log": None if self.sign == 0 else mpmath.nstr(self.log, 20)}


# ---------------------------------------------------------------------------
# constants and regimes

@dataclass
class AsymptoticContext:
    c: float = 1.0  # Britikov constant, unknown
    e_g: float = 1.0  # cubic kernel constant, unknown
    c_g: float = 1.0
    nu: float = 1.0
    tau: float = 6.0
    lambda_crit: float = 10.0
    zeta_crit: float = 10.0

    @property
    def gamma_k(self):
        with mpmath.workdps(PRECISION_DPS):
            return mpmath.mpf(79) ** mpmath.mpf(0.75) / mpmath.sqrt(54)

    @property
    def phi(self):
        with mpmath.workdps(PRECISION_DPS):
            return 2 * mpmath.sqrt(mpmath.e) * self.gamma_k ** 2 * mpmath.mpf(3) ** mpmath.mpf(-1.5)

    def to_json(self) -> dict:
        return asdict(self)


class Regime(enum.Enum):
    ONE_SUB = "OneSub"
    ONE_CRIT = "OneCrit"
    ONE_SUP = "OneSup"
    INT = "Int"
    TWO_SUB = "TwoSub"
    TWO_CRIT = "TwoCrit"
    TWO_SUP = "TwoSup"


@dataclass(frozen=True)
class RegimeSpec:
    regime: Regime
    n: float
    m: float
    lam: float
    zeta: float
    alpha: float

    def to_json(self) -> dict:
        return {"regime": self.regime.value, "n": self.n, "m": self.m,
                "lambda": self.lam, "zeta": self.zeta, "alpha": self.alpha}


def lam_of(n, m) -> float:
    return (2 * m / n - 1) * n ** (1 / 3)


def zeta_of(n, m) -> float:
    return (2 * m / n - 2) * n ** 0.4


def classify_regime(n, m, ctx: AsymptoticContext | None = None) -> RegimeSpec:
    """Tag ``(n, m)`` with one of the seven density windows.

    ``|lambda| <= lambda_crit`` (resp. ``|zeta| <= zeta_crit``) counts as the
    critical window.  Outside them, ``1 < alpha < 2`` is split at the geometric
    midpoints of the two scales: OneSup while ``lambda <= n^(1/6)``, TwoSub
    while ``-zeta <= n^(1/5)``, Int in between.
    """
    ctx = ctx or AsymptoticContext()
    if n <= 0 or m < 0:
        raise DomainError("need n > 0 and m >= 0")
    if m > 2 * n:
        raise OutOfScope("m > 2n")
    lam, zeta, alpha = lam_of(n, m), zeta_of(n, m), 2 * m / n
    if lam < -ctx.lambda_crit:
        tag = Regime.ONE_SUB
    elif lam <= ctx.lambda_crit:
        tag = Regime.ONE_CRIT
    elif zeta > ctx.zeta_crit:
        tag = Regime.TWO_SUP
    elif zeta >= -ctx.zeta_crit:
        tag = Regime.TWO_CRIT
    elif lam <= n ** (1 / 6) * (1 + 1e-9):
        tag = Regime.ONE_SUP
    elif -zeta <= n ** 0.2 * (1 + 1e-9):
        tag = Regime.TWO_SUB
    else:
        tag = Regime.INT
    return RegimeSpec(tag, n, m, lam, zeta, alpha)


# ---------------------------------------------------------------------------
# closed forms

def britikov_f_log(n, m, ctx: AsymptoticContext | None = None) -> LogValue:
    ctx = ctx or AsymptoticContext()
    if not 0 < m < n:
        raise DomainError("need 0 < m < n")
    with mpmath.workdps(PRECISION_DPS):
        n, m = mpmath.mpf(n), mpmath.mpf(m)
        log = (
            mpmath.log(ctx.c)
            + (2 * m - n) * mpmath.log(2 / mpmath.e)
            + (m + 0.5) * mpmath.log(m)
            + (n - 2 * m + 0.5) * mpmath.log(n)
            - (n - m + 0.5) * mpmath.log(n - m)
        )
        return LogValue.from_log(log)


def cubic_kernel_log(l: int, g: int, ctx: AsymptoticContext | None = None) -> LogValue:
    ctx = ctx or AsymptoticContext()
    if l < 1:
        raise DomainError("need l >= 1")
    with mpmath.workdps(PRECISION_DPS):
        log = (
            mpmath.log(ctx.e_g)
            + (mpmath.mpf(5 * g) / 2 - mpmath.mpf(7) / 2) * mpmath.log(l)
            + 2 * l * mpmath.log(ctx.gamma_k)
            + mpmath.loggamma(2 * l + 1)
        )
        return LogValue.from_log(log)


# ---------------------------------------------------------------------------
# typical excess

@dataclass
class Prediction:
    n: float
    m: float
    regime: str
    l0: float
    l1: int
    residual: float
    n_C: float
    n_U: float
    m_U: float
    n_core: float
    n_K: float
    m_K: float
    r: float | None
    d: int = 0

    def to_json(self) -> dict:
        return asdict(self)


def l0_residual(l, n, m, ctx: AsymptoticContext | None = None):
    ctx = ctx or AsymptoticContext()
    with mpmath.workdps(PRECISION_DPS):
        l, n, m = mpmath.mpf(l), mpmath.mpf(n), mpmath.mpf(m)
        x = n - m + l
        if x <= 0:
            return mpmath.mpf("-inf")
        rhs = ctx.phi ** (mpmath.mpf(2) / 3) * (2 * m - n - 2 * l) / (
            mpmath.e ** (mpmath.mpf(1) / 3) * mpmath.mpf(2) ** (mpmath.mpf(4) / 3) * x ** (mpmath.mpf(2) / 3)
        )
        return l - rhs


def r_of(spec: RegimeSpec):
    n, zeta = spec.n, spec.zeta
    if spec.regime is Regime.TWO_SUB:
        return abs(zeta) * n ** 0.6
    if spec.regime is Regime.TWO_CRIT:
        return n ** 0.6
    if spec.regime is Regime.TWO_SUP:
        return zeta ** -1.5 * n ** 0.6
    return None


def l0_solve(n, m, ctx: AsymptoticContext | None = None, d: int = 0, check_regime: bool = True) -> Prediction:
    """Bisection for the root of the increasing residual on ``(max(0, m-n), m-n/2)``."""
    ctx = ctx or AsymptoticContext()
    spec = classify_regime(n, m, ctx)
    if check_regime and spec.regime in (Regime.ONE_SUB, Regime.ONE_CRIT):
        raise OutOfScope(f"no typical excess in regime {spec.regime.value}")
    with mpmath.workdps(PRECISION_DPS):
        lo = mpmath.mpf(max(0, m - n))
        hi = mpmath.mpf(m) - mpmath.mpf(n) / 2
        if not lo < hi:
            raise NoRoot(f"empty bracket ({lo}, {hi})")
        if not (l0_residual(lo, n, m, ctx) < 0 < l0_residual(hi, n, m, ctx)):
            raise NoRoot("residual does not change sign over the bracket")
        for _ in range(400):
            mid = (lo + hi) / 2
            if l0_residual(mid, n, m, ctx) < 0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= mpmath.mpf(10) ** (-30) * max(1, hi):
                break
        l0 = (lo + hi) / 2
        res = l0_residual(l0, n, m, ctx)
        n_C = 2 * m - n - 2 * l0
        return Prediction(
            n=n,
            m=m,
            regime=spec.regime.value,
            l0=float(l0),
            l1=int(mpmath.ceil(l0)),
            residual=float(res),
            n_C=float(n_C),
            n_U=float(2 * (n - m + l0)),
            m_U=float(n - m + l0),
            n_core=float(mpmath.sqrt(n_C * (3 * l0 - d))),
            n_K=float(2 * l0 - d),
            m_K=float(3 * l0 - d),
            r=r_of(spec),
            d=d,
        )


# ---------------------------------------------------------------------------
# sums

@dataclass
class SumEvaluation:
    """Per-index log terms of a positive sum plus its log total."""

    name: str
    params: dict
    index: np.ndarray
    log_terms: np.ndarray
    log_total: float
    residual_exponent: float  # f_core or f_d

    def mass(self, lo, hi) -> float:
        sel = (self.index >= lo) & (self.index <= hi)
        if not sel.any():
            return 0.0
        return float(np.exp(logsumexp(self.log_terms[sel]) - self.log_total))

    def to_json(self) -> dict:
        return {"sum": self.name, **self.params, "log_total": self.log_total,
                "residual_exponent": self.residual_exponent}

    def rows(self):
        for i, t in zip(self.index, self.log_terms):
            yield int(i), float(t)


class _CoreSums:
    """Shared pieces of ``Sigma_core(n_C, l, d)`` for a fixed ``(n_C, l, nu)``.

    Only the lower gamma argument of the falling factorial depends on ``d``.
    """

    def __init__(self, n_C: int, l: int, nu: float):
        self.n_C, self.l, self.nu = n_C, l, nu
        self.k_all = np.arange(1, n_C + 1, dtype=np.float64)
        k = self.k_all
        self.base = gammaln(n_C + 1) - gammaln(n_C - k + 1) - k * math.log(n_C) + np.log(k)
        self.x = k + nu * l - 1
        self.top = np.where(self.x >= 0, gammaln(np.maximum(self.x, 0) + 1), -np.inf)

    def log_terms(self, d: int, span: tuple[int, int] | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Indices and log terms for deficiency ``d``, optionally only over ``n_core`` in ``span``."""
        kk = 3 * self.l - d - 1
        lo = max(2 * self.l - d, 1)
        a, b = 0, self.n_C
        if span is not None:
            a, b = max(span[0] - 1, 0), min(span[1], self.n_C)
        k, x = self.k_all[a:b], self.x[a:b]
        sel = (k >= lo) & (x - kk >= 0)
        idx = k[sel]
        if kk < 0:
            return idx, np.full(len(idx), -np.inf)
        t = self.base[a:b][sel] + self.top[a:b][sel] - gammaln(x[sel] - kk + 1)
        return idx, t


def _f_core(log_total: float, n_C: int, l: int, d: int) -> float:
    j = 3 * l - d
    return log_total - (0.5 * math.log(n_C) + j / 2 * (math.log(n_C) + math.log(j) - 1))


def _check_ld(n_C: int, l: int, d: int) -> None:
    if n_C < 1 or l < 1 or not 0 <= d <= 2 * l or 2 * l - d > n_C:
        raise Inadmissible(f"(n_C={n_C}, l={l}, d={d}) is not admissible")


def sigma_core_eval(n_C: int, l: int, d: int, nu: float = 1.0, _pieces: _CoreSums | None = None) -> SumEvaluation:
    _check_ld(n_C, l, d)
    pieces = _pieces or _CoreSums(n_C, l, nu)
    idx, t = pieces.log_terms(d)
    if len(idx) == 0:
        raise Inadmissible("Sigma_core has no positive terms")
    total = float(logsumexp(t))
    return SumEvaluation("core", {"n_C": n_C, "l": l, "d": d, "nu": nu}, idx.astype(np.int64), t, total,
                         _f_core(total, n_C, l, d))


def sigma_core_exact(n_C: int, l: int, d: int, nu: int = 1) -> Fraction:
    """Direct rational summation for small parameters."""
    _check_ld(n_C, l, d)
    kk = 3 * l - d - 1
    total = Fraction(0)
    for n_core in range(max(2 * l - d, 1), n_C + 1):
        x = n_core + nu * l - 1
        if x < kk:
            continue
        total += Fraction(math.perm(n_C, n_core), n_C ** n_core) * n_core * math.perm(x, kk)
    return total


def sigma_d_terms(n_C: int, l: int, tau: float = 6.0, nu: float = 1.0, stop_below: float | None = 60.0):
    """Log terms of ``Sigma_d`` for ``d = 0, 1, ...``.

    With ``stop_below`` set, the scan stops once the terms have passed their
    maximum and dropped ``stop_below`` nats under it (the terms are unimodal
    in ``d``).
    """
    if n_C < 1 or l < 1:
        raise Inadmissible("need n_C >= 1 and l >= 1")
    pieces = _CoreSums(n_C, l, nu)
    ds, terms = [], []
    best = -np.inf
    span = None
    for d in range(0, 2 * l + 1):
        if 2 * l - d > n_C:
            continue
        idx, t = pieces.log_terms(d, span)
        if len(idx) == 0:
            continue
        # terms more than CORE_CUTOFF nats under the peak are dropped from later d
        keep = idx[t > t.max() - CORE_CUTOFF]
        pad = max(16, (int(keep[-1]) - int(keep[0])) // 4)
        span = (int(keep[0]) - pad, int(keep[-1]) + pad)
        j = 3 * l - d
        f_core = _f_core(float(logsumexp(t)), n_C, l, d)
        term = (
            gammaln(2 * l + 1) - gammaln(d + 1) - gammaln(2 * l - d + 1)
            + (j + 2) / 2 * math.log(j) + d / 2 + d * math.log(tau)
            - gammaln(j + 1) - d / 2 * math.log(n_C) + f_core
        )
        ds.append(d)
        terms.append(term)
        best = max(best, term)
        if stop_below is not None and term < best - stop_below and len(terms) > 1 and term < terms[-2]:
            break
    return np.array(ds, dtype=np.int64), np.array(terms)


def sigma_d_eval(n_C: int, l: int, tau: float = 6.0, nu: float = 1.0, stop_below: float | None = 60.0) -> SumEvaluation:
    idx, t = sigma_d_terms(n_C, l, tau, nu, stop_below)
    total = float(logsumexp(t))
    f_d = total - (-(3 * l - 1) / 2 * math.log(3 * l) + 3 * l)
    return SumEvaluation("d", {"n_C": n_C, "l": l, "tau": tau, "nu": nu}, idx, t, total, f_d)


def sigma_d_mp(n_C: int, l: int, tau=6, nu: int = 1):
    """High-precision reference for ``Sigma_d`` at small parameters."""
    with mpmath.workdps(PRECISION_DPS):
        total = mpmath.mpf(0)
        for d in range(0, 2 * l + 1):
            if 2 * l - d > n_C:
                continue
            j = 3 * l - d
            core = mpmath.mpf(sigma_core_exact(n_C, l, d, nu).numerator) / sigma_core_exact(n_C, l, d, nu).denominator
            if core == 0:
                continue
            f_core = mpmath.log(core) - (mpmath.log(n_C) / 2 + mpmath.mpf(j) / 2 * (mpmath.log(n_C) + mpmath.log(j) - 1))
            total += (
                mpmath.binomial(2 * l, d) * mpmath.mpf(j) ** (mpmath.mpf(j + 2) / 2) * mpmath.e ** (mpmath.mpf(d) / 2)
                * mpmath.mpf(tau) ** d / (mpmath.factorial(j) * mpmath.mpf(n_C) ** (mpmath.mpf(d) / 2))
                * mpmath.exp(f_core)
            )
        return total


def window(evaluation: SumEvaluation, mass: float) -> tuple[int, int]:
    """Contiguous index interval around the largest term holding ``mass`` of the total."""
    if not 0 < mass < 1:
        raise ValueError("mass must lie in (0, 1)")
    w = np.exp(evaluation.log_terms - evaluation.log_total)
    i = j = int(np.argmax(w))
    acc = w[i]
    while acc < mass and (i > 0 or j < len(w) - 1):
        left = w[i - 1] if i > 0 else -1.0
        right = w[j + 1] if j < len(w) - 1 else -1.0
        if right >= left:
            j += 1
            acc += right
        else:
            i -= 1
            acc += left
    return int(evaluation.index[i]), int(evaluation.index[j])


# ---------------------------------------------------------------------------
# number of graphs on a surface

@dataclass
class Main4Result:
    regime: str
    log_value: LogValue
    uncertainty_exponent: float | None

    def to_json(self) -> dict:
        return {"regime": self.regime, "log_value": self.log_value.to_json(),
                "uncertainty_exponent": self.uncertainty_exponent}


def main4_log(n, m, g: int = 0, ctx: AsymptoticContext | None = None) -> Main4Result:
    """Leading closed form of ``log |S_g(n, m)|`` for the regime of ``(n, m)``.

    The ``exp(O(x))`` error factors are left out and ``x`` is returned as the
    uncertainty exponent; in OneCrit the bounded prefactor is dropped.
    """
    ctx = ctx or AsymptoticContext()
    spec = classify_regime(n, m, ctx)
    reg = spec.regime
    with mpmath.workdps(PRECISION_DPS):
        N = mpmath.mpf(n)
        lam = (2 * mpmath.mpf(m) / N - 1) * N ** (mpmath.mpf(1) / 3)
        zeta = (2 * mpmath.mpf(m) / N - 2) * N ** (mpmath.mpf(2) / 5)
        alpha = 2 * mpmath.mpf(m) / N
        logn = mpmath.log(N)
        e1 = N / 2 + lam / 2 * N ** (mpmath.mpf(2) / 3)
        e2 = N + mpmath.mpf(3) / 10 * zeta * N ** (mpmath.mpf(3) / 5)
        unc = None
        if reg is Regime.ONE_SUB:
            log = (-(mpmath.log(mpmath.pi) / 2 + mpmath.mpf(3) / 4)
                   + e1 * (1 - mpmath.log(1 + lam * N ** (-mpmath.mpf(1) / 3))) + (e1 - mpmath.mpf(1) / 2) * logn)
            unc = 0.0
        elif reg is Regime.ONE_CRIT:
            log = N / 2 - lam ** 2 / 4 * N ** (mpmath.mpf(1) / 3) + (e1 - mpmath.mpf(1) / 2) * logn
            unc = 1.0
        elif reg is Regime.ONE_SUP:
            ex = N / 2 - lam / 2 * N ** (mpmath.mpf(2) / 3)
            log = ex * (1 - mpmath.log(1 - lam * N ** (-mpmath.mpf(1) / 3))) + (e1 - mpmath.mpf(1) / 2) * logn
            unc = float(lam)
        elif reg is Regime.INT:
            log = (2 - alpha) * N / 2 * (1 - mpmath.log(2 - alpha)) + alpha * N / 2 * logn
            unc = float(N ** (mpmath.mpf(1) / 3))
        elif reg is Regime.TWO_SUB:
            log = zeta / 2 * N ** (mpmath.mpf(3) / 5) * (mpmath.log(abs(zeta)) - 1) + e2 * logn
            unc = float(abs(zeta) ** (-mpmath.mpf(2) / 3) * N ** (mpmath.mpf(3) / 5))
        elif reg is Regime.TWO_CRIT:
            log = e2 * logn
            unc = float(N ** (mpmath.mpf(3) / 5))
        else:
            if zeta * logn ** (mpmath.mpf(2) / 3) / N ** (mpmath.mpf(2) / 5) >= 0.1:
                raise OutOfScope("zeta too large for the second supercritical closed form")
            log = -mpmath.mpf(3) / 4 * zeta * N ** (mpmath.mpf(3) / 5) * mpmath.log(zeta) + e2 * logn
            unc = float(zeta * N ** (mpmath.mpf(3) / 5))
        return Main4Result(reg.value, LogValue.from_log(log), unc)
