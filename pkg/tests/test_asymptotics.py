import math
import random

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surfgraph.asymptotics import (
    AsymptoticContext,
    DomainError,
    Inadmissible,
    LogValue,
    NoRoot,
    OutOfScope,
    Regime,
    SumEvaluation,
    britikov_f_log,
    classify_regime,
    cubic_kernel_log,
    l0_residual,
    l0_solve,
    main4_log,
    sigma_core_eval,
    sigma_core_exact,
    sigma_d_eval,
    sigma_d_mp,
    window,
)


def test_constants():
    ctx = AsymptoticContext()
    assert abs(float(ctx.gamma_k) - 3.606) < 5e-4
    assert float(ctx.phi) == pytest.approx(2 * math.sqrt(math.e) * float(ctx.gamma_k) ** 2 / 3 ** 1.5, rel=1e-14)


# --- log values

def test_logvalue_zero_and_signs():
    z = LogValue.zero()
    a = LogValue.of(3)
    assert (z + a) == a and (a * z).sign == 0
    assert (a + LogValue.of(-3)).sign == 0
    assert float(LogValue.of(5) + LogValue.of(-2)) == pytest.approx(3)
    assert float(LogValue.of(-2) * LogValue.of(-4)) == pytest.approx(8)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-700, 700), min_size=1, max_size=25), st.randoms(use_true_random=False))
def test_logsumexp_permutation_invariant(logs, rnd):
    def total(seq):
        acc = LogValue.zero()
        for x in seq:
            acc = acc + LogValue.from_log(x)
        return acc.log

    shuffled = list(logs)
    rnd.shuffle(shuffled)
    a, b = total(logs), total(shuffled)
    assert abs(a - b) <= 1e-12 * max(1, abs(a))


# --- regimes

@pytest.mark.parametrize("n,m,tag", [
    (10 ** 6, 5 * 10 ** 5, Regime.ONE_CRIT),
    (10 ** 6, 5 * 10 ** 5 + 5 * 10 ** 4, Regime.ONE_SUP),
    (10 ** 10, 10 ** 10, Regime.TWO_CRIT),
    (10 ** 9, 10 ** 8, Regime.ONE_SUB),
    (10 ** 9, int(0.75 * 10 ** 9), Regime.INT),
])
def test_regime_examples(n, m, tag):
    assert classify_regime(n, m).regime is tag


def test_regime_parameters():
    r = classify_regime(10 ** 6, 5 * 10 ** 5 + 5 * 10 ** 4)
    # 2m/n = 1.1 puts lambda at 10, the edge of the critical window
    assert r.lam == pytest.approx(10.0) and r.alpha == pytest.approx(1.1)
    assert classify_regime(10 ** 10, 10 ** 10).zeta == 0


def test_second_subcritical_at_scale():
    # alpha = 2 - n^(-1/5) gives zeta = -n^(1/5)
    for n in (10 ** 6, 10 ** 8, 10 ** 10):
        m = math.ceil((2 - n ** -0.2) * n / 2)
        assert classify_regime(n, m).regime is Regime.TWO_SUB


def test_alpha_near_one_is_first_supercritical():
    # lambda = n^(1/12) only exceeds the critical window once n is huge
    n = 10 ** 15
    m = round((1 + n ** -0.25) * n / 2)
    assert classify_regime(n, m).regime is Regime.ONE_SUP


def test_regime_errors():
    with pytest.raises(OutOfScope):
        classify_regime(10, 21)
    with pytest.raises(DomainError):
        classify_regime(0, 0)


@settings(max_examples=80, deadline=None)
@given(st.integers(10, 10 ** 12), st.floats(0, 2))
def test_regime_parameters_consistent(n, alpha):
    m = int(alpha * n / 2)
    r = classify_regime(n, m)
    assert r.alpha == pytest.approx(2 * m / n)
    assert r.lam == pytest.approx((r.alpha - 1) * n ** (1 / 3), abs=1e-6)
    assert r.zeta == pytest.approx((r.alpha - 2) * n ** 0.4, abs=1e-6)


# --- closed forms

def printed_f(n, m, c=1):
    with mpmath.workdps(60):
        n, m = mpmath.mpf(n), mpmath.mpf(m)
        return c * (2 / mpmath.e) ** (2 * m - n) * m ** (m + 0.5) * n ** (n - 2 * m + 0.5) / (n - m) ** (n - m + 0.5)


def test_britikov_example():
    assert float(britikov_f_log(4, 3).value()) == pytest.approx(3.164, abs=1e-3)
    for n in range(4, 30):
        for m in range(1, n):
            assert float(britikov_f_log(n, m).value()) == pytest.approx(float(printed_f(n, m)), rel=1e-12)


def test_britikov_domain():
    with pytest.raises(DomainError):
        britikov_f_log(4, 4)


def test_cubic_kernel():
    ctx = AsymptoticContext()
    assert float(cubic_kernel_log(1, 0).value()) == pytest.approx(2 * float(ctx.gamma_k) ** 2, rel=1e-12)
    g2 = float(ctx.gamma_k) ** 2
    for g in (0, 1):
        for l in (1, 10, 100, 1000):
            ratio = math.exp(float(cubic_kernel_log(l + 1, g).log - cubic_kernel_log(l, g).log))
            expect = g2 * (2 * l + 2) * (2 * l + 1) * ((l + 1) / l) ** (2.5 * g - 3.5)
            assert ratio == pytest.approx(expect, rel=1e-10)


# --- l0

@pytest.mark.parametrize("n", [10 ** 6, 10 ** 8, 10 ** 10])
@pytest.mark.parametrize("alpha", [1.5, 1.9, 1.99])
def test_l0_residual_and_bracket(n, alpha):
    m = round(alpha * n / 2)
    p = l0_solve(n, m)
    assert abs(p.residual) < 1e-10 * max(1, p.l0)
    assert m - n < p.l0 < m - n / 2
    assert min(p.n_C, p.n_U, p.m_U, p.n_core, p.n_K, p.m_K) >= 0
    assert p.l1 == math.ceil(p.l0)


def test_l0_residual_monotone():
    n, m = 10 ** 6, 750_000
    xs = np.linspace(1, m - n / 2 - 1, 50)
    vals = [float(l0_residual(x, n, m)) for x in xs]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_l0_refuses_first_windows():
    with pytest.raises(OutOfScope):
        l0_solve(10 ** 6, 5 * 10 ** 5)
    with pytest.raises(NoRoot):
        l0_solve(10, 4, check_regime=False)


def test_l0_order_stability():
    vals = [l0_solve(n, round(0.75 * n)).l0 / n ** (1 / 3) for n in (10 ** 6, 10 ** 8, 10 ** 10)]
    assert max(vals) / min(vals) < 1.1


# --- sums

@pytest.mark.parametrize("n_C,l,d", [(10, 1, 0), (10, 2, 1), (12, 3, 2), (20, 2, 0)])
def test_sigma_core_against_exact(n_C, l, d):
    ev = sigma_core_eval(n_C, l, d)
    exact = sigma_core_exact(n_C, l, d)
    assert math.exp(ev.log_total) == pytest.approx(float(exact), rel=1e-10)


def test_sigma_d_against_mp():
    ev = sigma_d_eval(1000, 1, stop_below=None)
    assert math.exp(ev.log_total) == pytest.approx(float(sigma_d_mp(1000, 1)), rel=1e-9)
    ev = sigma_d_eval(30, 3, tau=1 / 216, stop_below=None)
    assert math.exp(ev.log_total) == pytest.approx(float(sigma_d_mp(30, 3, tau=mpmath.mpf(1) / 216)), rel=1e-9)


def test_sigma_inadmissible():
    with pytest.raises(Inadmissible):
        sigma_core_eval(3, 2, 0)
    with pytest.raises(Inadmissible):
        sigma_core_eval(10, 1, 3)


def test_core_window_concentration():
    n_C, l = 10 ** 6, 10 ** 3
    ev = sigma_core_eval(n_C, l, 0)
    c = math.sqrt(3 * n_C * l)
    assert ev.mass(c - 0.1 * c, c + 0.1 * c) >= 0.99
    lo, hi = window(ev, 0.99)
    assert c - 0.1 * c <= lo <= hi <= c + 0.1 * c


def test_f_core_bounded_on_grid():
    ratios = []
    for n_C in (10 ** 4, 10 ** 5):
        for l in (10, 50, n_C // 100):
            for d in (0, 2):
                ev = sigma_core_eval(n_C, l, d)
                ratios.append(ev.residual_exponent / math.sqrt(l ** 3 / n_C))
    assert max(abs(r) for r in ratios) < 10


def test_sigma_d_large_l_window():
    n_C, l = 10 ** 6, 10 ** 4
    ev = sigma_d_eval(n_C, l)
    assert ev.mass(0, 50 * math.sqrt(l ** 3 / n_C)) >= 0.99


# --- windows

def make_eval(terms):
    t = np.log(np.asarray(terms, float))
    return SumEvaluation("x", {}, np.arange(len(t)), t, float(np.log(np.sum(terms))), 0.0)


def test_window_point_mass():
    ev = make_eval([1e-300, 1.0, 1e-300])
    assert window(ev, 0.99) == (1, 1)


def test_window_symmetric():
    terms = [2.0 ** -abs(i - 10) for i in range(21)]
    lo, hi = window(make_eval(terms), 0.9)
    assert 10 - lo == hi - 10 or abs((10 - lo) - (hi - 10)) == 1


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(1e-6, 1e6), min_size=2, max_size=40), st.floats(0.05, 0.5), st.floats(0.5, 0.99))
def test_windows_nested(terms, a, b):
    ev = make_eval(terms)
    lo1, hi1 = window(ev, a)
    lo2, hi2 = window(ev, b)
    assert lo2 <= lo1 <= hi1 <= hi2
    assert ev.mass(lo2, hi2) <= 1 + 1e-12


# --- number of graphs on a surface

def independent_one_sub(n, lam):
    with mpmath.workdps(60):
        n, lam = mpmath.mpf(n), mpmath.mpf(lam)
        e1 = n / 2 + lam * n ** (mpmath.mpf(2) / 3) / 2
        val = (1 / (mpmath.sqrt(mpmath.pi) * mpmath.exp(mpmath.mpf(3) / 4))
               * (mpmath.e / (1 + lam * n ** (-mpmath.mpf(1) / 3))) ** e1 * n ** (e1 - mpmath.mpf(1) / 2))
        return mpmath.log(val)


def test_main4_one_sub_matches_independent():
    n = 10 ** 12
    lam = -n ** (1 / 6)
    m = (1 + lam * n ** (-1 / 3)) * n / 2
    res = main4_log(n, m)
    assert res.regime == Regime.ONE_SUB.value
    ref = independent_one_sub(n, lam)
    assert abs(res.log_value.log - ref) <= 1e-9 * abs(ref)


def test_main4_one_sub_consistency():
    # below the first transition almost every graph is planar; the gap is a Stirling
    # error of order lambda / n^(1/3)
    diffs = []
    lam = -80
    for n in (10 ** 6, 10 ** 9, 10 ** 12):
        m = round((1 + lam * n ** (-1 / 3)) * n / 2)
        with mpmath.workdps(60):
            ref = mpmath.log(mpmath.binomial(mpmath.binomial(n, 2), m))
        diffs.append(abs(float(main4_log(n, m).log_value.log - ref)))
    assert diffs[0] > diffs[1] > diffs[2] and diffs[2] < 0.02


def test_main4_two_crit_leading_order():
    ratios = [float(main4_log(n, n).log_value.log) / (n * math.log(n)) for n in (10 ** 6, 10 ** 8)]
    assert all(abs(r - 1) < 0.05 for r in ratios)
    assert abs(ratios[1] - 1) <= abs(ratios[0] - 1)


def test_main4_covers_every_regime():
    n = 10 ** 12
    seen = set()
    for alpha in (0.5, 1.0, 1.0 + 2e-3, 1.5, 2 - 1e-3, 2.0, 2 + 1e-3):
        seen.add(main4_log(n, round(alpha * n / 2)).regime)
    assert seen == {r.value for r in Regime}


def test_main4_two_sup_scope():
    n = 10 ** 6
    with pytest.raises(OutOfScope):
        main4_log(n, round(1.9 * n))
