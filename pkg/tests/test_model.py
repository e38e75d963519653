import math

import numpy as np
import pytest
from scipy import stats

from artifact.model import (
    AR1,
    AR2,
    ARMA,
    INFINITE,
    Aggregate,
    Component,
    Explicit,
    FracInt,
    Strophoid,
    TruncationError,
    TruncationPolicy,
    kernel_windows,
    path_kernel,
    sequence_from_dict,
    simulate,
    strophoid_coeffs,
    truncation_range,
)
from artifact.stable_core import c_alpha


def test_ar1_values():
    s = AR1(0.5)
    assert s.coeff(3) == 0.125
    assert s.coeff(-1) == 0.0
    assert AR1(0.5, anticipative=False).coeff(-2) == 0.25
    with pytest.raises(ValueError):
        AR1(1.0)


def test_ar2_equal_roots():
    assert AR2(0.6, 0.6).coeff(2) == pytest.approx(1.08)


def _ar2_recursion(l1, l2, n):
    # d_k = (l1 + l2) d_{k-1} - l1 l2 d_{k-2}, d_0 = 1
    a, b = (l1 + l2).real, (l1 * l2).real
    d = np.zeros(n)
    d[0] = 1.0
    d[1] = a
    for k in range(2, n):
        d[k] = a * d[k - 1] - b * d[k - 2]
    return d


@pytest.mark.parametrize("l1, l2", [(0.5, 0.7), (-0.4, 0.8), (0.3, -0.3 + 1e-3), ([0.3, 0.4], [0.3, -0.4]),
                                    (0.9, 0.9)])
def test_ar2_matches_recursion(l1, l2):
    s = AR2(l1, l2)
    c1, c2 = s.lambda1, s.lambda2
    ref = _ar2_recursion(c1, c2, 60)
    assert np.allclose(s.coeff(np.arange(60)), ref, rtol=1e-9, atol=1e-14)
    assert s.coeff(-1) == 0.0


def test_ar2_limit_to_equal_roots():
    lam, delta = 0.6, 1e-6
    ks = np.arange(0, 80)
    near = AR2(lam, lam + delta).coeff(ks)
    equal = AR2(lam + delta / 2, lam + delta / 2).coeff(ks)
    assert np.max(np.abs(near - equal)) < 1e-8


def test_ar2_validation():
    with pytest.raises(ValueError):
        AR2(0.5, -0.5)
    with pytest.raises(ValueError):
        AR2([0.3, 0.4], [0.3, 0.4])
    with pytest.raises(ValueError):
        AR2(1.2, 0.3)


def test_fracint_values():
    f = FracInt(0.2)
    ref = [1.0]
    for k in range(1, 40):
        ref.append(ref[-1] * (k - 1 + 0.2) / k)
    assert np.allclose(f.coeff(np.arange(40)), ref, rtol=1e-12)
    assert FracInt(-0.7).coeff(0) == 1.0
    # d = -2 is the finite polynomial (1 - F)^2
    assert np.allclose(FracInt(-2.0).coeff(np.arange(5)), [1.0, -2.0, 1.0, 0.0, 0.0])
    assert FracInt(-2.0).m0() == INFINITE


def test_fracint_alpha_condition():
    FracInt(0.2).check_alpha(1.5)
    with pytest.raises(ValueError):
        Aggregate.single(1.0, FracInt(0.2))


def _random_arma(rng):
    def poly(deg):
        roots = []
        while len(roots) < deg:
            r = rng.uniform(1.2, 4.0) * rng.choice([-1, 1])
            roots.append(r)
        return np.real(np.poly(roots)[::-1] / np.prod(-np.array(roots))) if deg else np.array([1.0])

    deg = rng.integers(0, 3, size=4)
    return ARMA(tuple(poly(deg[0])), tuple(poly(deg[1])), tuple(poly(deg[2])), tuple(poly(deg[3])))


def test_arma_recursion_on_random_instances(rng):
    # psi(F) phi(B) applied to the kernel gives Theta(F) H(B) as a Laurent polynomial
    for _ in range(200):
        try:
            a = _random_arma(rng)
        except ValueError:
            continue
        K = 60
        ks = np.arange(-K, K + 1)
        d = a.coeff(ks)
        psi, phi = np.asarray(a.psi), np.asarray(a.phi)
        out = np.zeros_like(d)
        for i, pi_ in enumerate(psi):
            for j, ph in enumerate(phi):
                # F^i B^j maps d_k z^k to coefficient d_{k-i+j} at z^k
                out += pi_ * ph * np.roll(d, i - j)
        theta, H = np.asarray(a.theta), np.asarray(a.H)
        target = np.zeros_like(d)
        for i, t in enumerate(theta):
            for j, h in enumerate(H):
                target[K + i - j] += t * h
        inner = slice(10, -10)
        assert np.allclose(out[inner], target[inner], atol=1e-9)


def test_arma_validation():
    with pytest.raises(ValueError):
        ARMA((1.0, -2.0), (1.0,))
    with pytest.raises(ValueError):
        ARMA((1.0, -0.5), (1.0,), (1.0, -0.5))


def test_m0_values():
    assert AR1(0.5).m0() == 0
    assert AR2(0.5, 0.7).m0() == 0
    assert FracInt(0.2).m0() == 0
    assert AR1(0.5, anticipative=False).m0() == INFINITE
    assert ARMA((1.0,), (1.0, -0.5)).m0() == INFINITE
    assert ARMA((1.0, 0.0, -0.5), (1.0,)).m0() == 1
    assert Explicit({0: 1.0, -1: 0.5}).m0() == INFINITE
    assert Explicit({0: 1.0, -2: 1.0}).m0() == INFINITE
    assert Explicit({0: 1.0, -2: 1.0}, tail_ratio=0.5).m0() == 1
    # complex AR2 with rational angle has isolated zeros d_k = 0
    th = math.pi / 3
    assert AR2([0.5 * math.cos(th), 0.5 * math.sin(th)], [0.5 * math.cos(th), -0.5 * math.sin(th)]).m0() == 1


def test_strophoid():
    assert strophoid_coeffs(100.0, 5.0, 0, 0) in (pytest.approx(100.0), pytest.approx(600.0))
    s = Strophoid(100.0, 5.0, seed=3)
    ks = np.arange(-200, 200)
    y = s.coeff(ks)
    a, b = 100.0, 5.0
    res = y ** 3 - a * (b + 3) * y ** 2 + (ks.astype(float) ** 2 + a * a * (2 * b + 3)) * y - a ** 3 * (b + 1)
    assert np.all(np.abs(res) < 1e-6 * np.maximum(1.0, np.abs(y) ** 3))
    big = np.arange(1000, 10001)
    r = s.coeff(big) * big.astype(float) ** 2
    med = np.median(r)
    assert np.all((r > med / 2) & (r < med * 2))
    assert np.array_equal(s.coeff(ks), Strophoid(100.0, 5.0, seed=3).coeff(ks))


def test_kernel_windows_layout():
    assert np.allclose(path_kernel(Aggregate.single(1.5, AR1(0.5)), 1, 0, 1, 1).vector, [0.5, 1.0, 0.0])
    assert np.allclose(kernel_windows(AR1(0.5), [-2], 1, 1)[0], 0.0)
    assert np.allclose(kernel_windows(Explicit({0: 1.0}), [2], 0, 2)[0], [0.0, 0.0, 1.0])


@pytest.mark.parametrize("seq, alpha", [(AR1(0.9), 1.5), (AR2(0.5, 0.7), 0.8), (ARMA((1.0, -0.5), (1.0, -0.3)), 1.2),
                                        (FracInt(0.2), 1.5), (Explicit({0: 1, 3: 2}, tail_ratio=0.7), 1.0)])
def test_tail_bounds_dominate(seq, alpha):
    ks = np.arange(-3000, 3001)
    d = np.abs(seq.coeff(ks)) ** alpha
    for K in (-5, 0, 4, 20):
        exact_up = d[ks > K].sum()
        exact_lo = d[ks < K].sum()
        assert seq.tail_upper(alpha, K) >= exact_up * (1 - 1e-12)
        assert seq.tail_lower(alpha, K) >= exact_lo * (1 - 1e-12)


def test_truncation_range():
    lo, hi, om = truncation_range(AR1(0.5), 1.5, TruncationPolicy(1e-10))
    assert lo == 0 and om <= 1e-10
    assert 0.5 ** (1.5 * (hi + 1)) / (1 - 0.5 ** 1.5) <= 1e-10
    with pytest.raises(TruncationError):
        truncation_range(FracInt(0.2), 1.5, TruncationPolicy(1e-10, max_terms=2000))
    lo, hi, om = truncation_range(FracInt(0.2), 1.5, TruncationPolicy(1e-10, max_terms=2000, strict=False))
    assert hi - lo + 1 <= 2000 and 0 < om < 1


def test_sequence_dict_round_trip():
    for s in (AR1(0.3), AR2(0.5, 0.7), AR2([0.3, 0.4], [0.3, -0.4]), FracInt(0.2),
              ARMA((1.0, -0.5), (1.0, 0.2)), Strophoid(10.0, 2.0, 4), Explicit({0: 1.0, -2: 1.0}, 0.5)):
        t = sequence_from_dict(s.to_dict())
        ks = np.arange(-20, 20)
        assert np.allclose(t.coeff(ks), s.coeff(ks))


def test_aggregate():
    agg = Aggregate(1.5, (Component(1.0, AR1(0.5)), Component(0.5, AR2(0.5, 0.7), 0.3)))
    assert agg.J == 2 and not agg.symmetric
    assert agg.component(2).beta == 0.3
    with pytest.raises(IndexError):
        agg.component(0)
    again = Aggregate.from_dict(agg.to_dict())
    assert again.J == 2 and again.component(1).seq == AR1(0.5)
    with pytest.raises(ValueError):
        Component(0.0, AR1(0.5))


def test_simulate_determinism():
    agg = Aggregate.single(1.5, AR1(0.5))
    a = simulate(agg, 500, seed=4)
    assert np.array_equal(a, simulate(agg, 500, seed=4))
    assert not np.array_equal(a, simulate(agg, 500, seed=5))


def test_simulated_ar1_marginal_scale():
    # X_t is S(alpha, 0, sigma_X) with sigma_X^alpha = 1 / (1 - rho^alpha)
    alpha, rho = 1.5, 0.5
    x = simulate(Aggregate.single(alpha, AR1(rho)), 200_000, seed=1)
    sx = (1.0 / (1.0 - rho ** alpha)) ** (1.0 / alpha)
    u = np.array([0.1, 0.3, 0.8])
    emp = np.cos(np.outer(u, x)).mean(axis=1)
    assert np.allclose(emp, np.exp(-(sx * u) ** alpha), atol=0.01)


def test_aggregate_components_sum():
    agg = Aggregate(1.2, (Component(1.0, AR1(0.5)), Component(2.0, AR2(0.5, 0.7), 0.5)))
    tot, parts = simulate(agg, 300, seed=2, return_components=True)
    assert np.allclose(parts.sum(axis=0), tot)


def test_simulation_stationary():
    x = simulate(Aggregate.single(1.5, AR1(0.7)), 200_000, seed=8)
    a, b = x[:50_000], x[-50_000:]
    assert stats.ks_2samp(a, b).pvalue > 1e-3


def test_simulated_tail_scaling():
    alpha = 1.5
    agg = Aggregate(alpha, (Component(1.0, AR1(0.5)), Component(0.7, AR2(0.5, 0.7))))
    n = 2_000_000
    x = simulate(agg, n, seed=12)
    xq = np.quantile(np.abs(x), 0.999)
    p = np.mean(np.abs(x) > xq)
    ks = np.arange(0, 200)
    sig = (np.abs(AR1(0.5).coeff(ks)) ** alpha).sum() + 0.7 ** alpha * (np.abs(AR2(0.5, 0.7).coeff(ks)) ** alpha).sum()
    est = xq ** alpha * p
    # batch-means standard error over 50 time blocks
    per = (np.abs(x) > xq).reshape(50, -1).mean(axis=1)
    se = xq ** alpha * per.std(ddof=1) / math.sqrt(50)
    assert abs(est - c_alpha(alpha) * sig) <= 3 * se
