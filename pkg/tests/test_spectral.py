import json
import math

import numpy as np
import pytest

from artifact.model import AR1, AR2, ARMA, Aggregate, Component, Explicit, FracInt, TruncationPolicy, kernel_windows
from artifact.seminorm import SemiNorm
from artifact.spectral import (
    SPHERE,
    DiscreteSpectralMeasure,
    NotRepresentable,
    cylinder_spectral_measure,
    euclidean_spectral_measure,
    is_past_representable,
    merge_atoms,
    to_cylinder,
    to_sphere,
)
from artifact.stable_core import StableParams, log_char_fn

TIGHT = TruncationPolicy(1e-14)


def _product_log_cf(agg, u, m, h, K=400):
    """log E exp(i <u, window>) summed noise by noise."""
    u = np.asarray(u, dtype=float)
    out = 0.0 + 0.0j
    s = np.arange(-K, K + 1)
    for c in agg.components:
        coef = np.zeros(s.size)
        for i in range(-m, h + 1):
            coef += u[i + m] * c.seq.coeff(s - i)
        out += log_char_fn(StableParams(agg.alpha, c.beta), c.pi * coef).sum()
    return out


MODELS = [
    Aggregate.single(1.5, AR1(0.5)),
    Aggregate(0.8, (Component(1.0, AR1(0.6), 0.4), Component(0.5, AR2(0.5, 0.7), -0.3))),
    Aggregate(1.0, (Component(1.0, AR1(0.5), 0.7), Component(2.0, AR1(0.3), -0.2))),
    Aggregate(1.0, (Component(1.0, ARMA((1.0, -0.4), (1.0, 0.3)), 1.0),)),
    Aggregate(1.3, (Component(0.7, Explicit({0: 1.0, 2: -0.5}, tail_ratio=0.6), 0.5),)),
]


@pytest.mark.parametrize("agg", MODELS)
def test_log_cf_matches_product_oracle(agg, rng):
    m, h = 1, 2
    sphere = euclidean_spectral_measure(agg, m, h, TIGHT)
    cyl = to_cylinder(sphere, SemiNorm(m, h))
    for _ in range(10):
        u = rng.normal(size=m + h + 1)
        ref = _product_log_cf(agg, u, m, h)
        assert abs(sphere.log_char_fn(u)[0] - ref) < 1e-9
        assert abs(cyl.log_char_fn(u)[0] - ref) < 1e-9


def test_symmetric_when_beta_zero():
    agg = Aggregate(1.2, (Component(1.0, AR1(0.5)), Component(0.3, AR2(0.4, -0.2))))
    assert euclidean_spectral_measure(agg, 1, 1, TIGHT).is_symmetric()
    skew = Aggregate(1.2, (Component(1.0, AR1(0.5), 0.5),))
    assert not euclidean_spectral_measure(skew, 1, 1, TIGHT).is_symmetric()


def test_total_mass_ar1():
    # total sphere mass is pi^alpha sum_k ||d_k||^alpha over all windows
    rho, alpha, m, h = 0.5, 1.5, 1, 2
    mu = euclidean_spectral_measure(Aggregate.single(alpha, AR1(rho)), m, h, TIGHT)
    ks = np.arange(-m, 200)
    win = kernel_windows(AR1(rho), ks, m, h)
    ref = (np.sqrt((win ** 2).sum(axis=1)) ** alpha).sum()
    assert mu.total_mass() == pytest.approx(ref, rel=1e-12)


def test_to_cylinder_example():
    alpha = 1.5
    pt = np.array([[3.0, 4.0, 10.0]]) / math.sqrt(125.0)
    mu = DiscreteSpectralMeasure(pt, [1.0], alpha)
    cyl = to_cylinder(mu, SemiNorm(1, 1))
    assert np.allclose(cyl.points[0], [0.6, 0.8, 2.0])
    assert cyl.weights[0] == pytest.approx((math.sqrt(5) / 5) ** alpha)
    back = to_sphere(cyl)
    assert np.allclose(back.points, pt) and np.allclose(back.weights, [1.0])


def test_kernel_atom_not_representable():
    mu = DiscreteSpectralMeasure([[0.0, 0.0, 1.0]], [1.0], 1.5)
    with pytest.raises(NotRepresentable):
        to_cylinder(mu, SemiNorm(1, 1))


def test_cylinder_exponent_matches_sphere(rng):
    agg = Aggregate(1.5, (Component(1.0, AR1(0.5), 0.3), Component(0.5, AR2(0.5, 0.7))))
    sphere = euclidean_spectral_measure(agg, 2, 2, TIGHT)
    cyl = to_cylinder(sphere, SemiNorm(2, 2, 1.0))
    u = rng.normal(size=(50, 5))
    assert np.allclose(sphere.exponent(u), cyl.exponent(u), rtol=1e-12)


def test_atoms_on_support():
    agg = Aggregate.single(1.5, AR2(0.5, 0.7))
    for p in (1.0, 2.0, math.inf):
        sn = SemiNorm(1, 2, p)
        cyl = cylinder_spectral_measure(agg, sn, TIGHT)
        assert np.allclose(sn.evaluate(cyl.points), 1.0)
    with pytest.raises(ValueError):
        DiscreteSpectralMeasure([[1.0, 1.0]], [1.0], 1.5)
    with pytest.raises(ValueError):
        DiscreteSpectralMeasure([[1.0, 0.0]], [0.0], 1.5)


def test_dict_and_json_round_trip():
    agg = Aggregate(1.0, (Component(1.0, AR1(0.5), 0.5),))
    cyl = cylinder_spectral_measure(agg, SemiNorm(1, 1), TIGHT)
    again = DiscreteSpectralMeasure.from_dict(json.loads(cyl.to_json()))
    assert np.array_equal(again.points, cyl.points)
    assert np.array_equal(again.weights, cyl.weights)
    assert np.array_equal(again.labels, cyl.labels)
    assert np.array_equal(again.shift, cyl.shift)
    assert again.support == cyl.support and again.alpha == cyl.alpha
    sph = euclidean_spectral_measure(agg, 1, 1, TIGHT)
    assert DiscreteSpectralMeasure.from_dict(sph.to_dict()).support == SPHERE


def test_csv_rows():
    cyl = cylinder_spectral_measure(Aggregate.single(1.5, AR1(0.5)), SemiNorm(1, 1), TIGHT)
    header, rows = cyl.csv_rows()
    assert header == ["s0", "s1", "s2", "weight", "theta", "j", "k"]
    assert len(rows) == cyl.n_atoms
    assert float(rows[0][3]) == cyl.weights[0]


def test_merge_atoms():
    pts = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    p, w, lab = merge_atoms(pts, [1.0, 2.0, 3.0], np.array([[1, 1, 3], [1, 2, 1], [1, 1, 0]]))
    assert p.shape == (2, 2)
    assert sorted(w.tolist()) == [3.0, 3.0]
    row = lab[np.flatnonzero(np.all(p == [1.0, 0.0], axis=1))[0]]
    # merged atoms across components keep the smallest k and drop the component index
    assert row[1] == 0 and row[2] == 1


def test_verdicts():
    noncausal = Aggregate(1.5, (Component(1.0, AR1(0.5)), Component(1.0, AR1(0.5, anticipative=False))))
    v = is_past_representable(noncausal, 5, 1)
    assert not v and "m0 = inf" in v.reason
    gap = Aggregate.single(1.5, Explicit({0: 1.0, -2: 1.0}, tail_ratio=0.5))
    assert not is_past_representable(gap, 0, 1)
    assert is_past_representable(gap, 1, 1)
    assert is_past_representable(Aggregate.single(1.5, Explicit({0: 1.0, -1: 0.5}, tail_ratio=0.5)), 0, 1)
    with pytest.raises(NotRepresentable):
        cylinder_spectral_measure(noncausal, SemiNorm(1, 1), TIGHT)
    with pytest.raises(NotRepresentable):
        cylinder_spectral_measure(gap, SemiNorm(0, 1), TIGHT)


def test_verdict_monotone_in_m():
    th = math.pi / 4
    z = [0.6 * math.cos(th), 0.6 * math.sin(th)]
    models = [Aggregate.single(1.5, AR2(z, [z[0], -z[1]])),
              Aggregate.single(1.5, Explicit({0: 1.0, -3: 1.0}, tail_ratio=0.5)),
              Aggregate.single(1.5, FracInt(0.2))]
    for agg in models:
        flags = [bool(is_past_representable(agg, m, 1)) for m in range(6)]
        first = flags.index(True)
        assert all(flags[first:])


def test_verdict_to_dict():
    d = is_past_representable(Aggregate.single(1.5, AR1(0.5, anticipative=False)), 1, 1).to_dict()
    assert d["representable"] is False and d["required_m"] == "inf"


def test_arma_triple_equivalence():
    rho, alpha = 0.6, 1.5
    a = cylinder_spectral_measure(Aggregate.single(alpha, AR1(rho)), SemiNorm(1, 2), TIGHT)
    b = cylinder_spectral_measure(Aggregate.single(alpha, ARMA((1.0, -rho), (1.0,))), SemiNorm(1, 2), TIGHT)
    c = cylinder_spectral_measure(Aggregate.single(alpha, Explicit({0: 1.0}, tail_ratio=rho)), SemiNorm(1, 2), TIGHT)
    u = np.random.default_rng(5).normal(size=(30, 4))
    assert np.allclose(a.exponent(u), b.exponent(u), rtol=1e-11)
    assert np.allclose(a.exponent(u), c.exponent(u), rtol=1e-11)


def test_alpha_one_shift_only_when_skewed():
    sym = euclidean_spectral_measure(Aggregate.single(1.0, AR1(0.5)), 1, 1, TIGHT)
    assert np.allclose(sym.shift, 0.0)
    skw = euclidean_spectral_measure(Aggregate(1.0, (Component(2.0, AR1(0.5), 1.0),)), 1, 1, TIGHT)
    assert np.any(np.abs(skw.shift) > 1e-3)
    assert euclidean_spectral_measure(Aggregate.single(1.5, AR1(0.5)), 1, 1, TIGHT).shift is None
