import csv
import io
import json
import math

import numpy as np
import pytest

from artifact.model import AR1, AR2, Aggregate, Component, FracInt, TruncationPolicy, kernel_windows
from artifact.seminorm import KernelVector, SemiNorm
from artifact.spectral import DiscreteSpectralMeasure, cylinder_spectral_measure
from artifact.tailcond import (
    NoMatch,
    PatternDistribution,
    ZeroConditioningMass,
    aggar1_closed_form,
    conditional_ratio,
    match_pattern,
    predict,
)

TIGHT = TruncationPolicy(1e-14)
BUBBLE = Aggregate.single(1.5, AR1(0.5))


def _obs(seq, k, m, h, p=2.0):
    return kernel_windows(seq, [k], m, h)[0][: m + 1]


@pytest.fixture
def small_measure():
    pts = np.array([[1.0, 0.0], [-1.0, 0.0], [0.6, 0.8]])
    return DiscreteSpectralMeasure(pts, [2.0, 3.0, 1.0], 1.5)


def test_conditional_ratio_examples(small_measure):
    B = np.array([True, True, False])
    assert conditional_ratio(small_measure, B, B) == 1.0
    assert conditional_ratio(small_measure, np.array([False, False, True]), B) == 0.0
    assert conditional_ratio(small_measure, np.array([True, False, False]), B) == pytest.approx(0.4)
    assert conditional_ratio(small_measure, lambda p: p[:, 0] > 0, lambda p: np.ones(len(p), bool)) \
        == pytest.approx(0.5)
    with pytest.raises(ZeroConditioningMass):
        conditional_ratio(small_measure, B, np.zeros(3, bool))
    with pytest.raises(ValueError):
        conditional_ratio(small_measure, np.ones(2, bool), B)


def test_match_growing_branch():
    sn = SemiNorm(1, 2)
    mu = cylinder_spectral_measure(BUBBLE, sn, TIGHT)
    obs = np.array([0.5, 1.0]) / math.sqrt(1.25)
    m = match_pattern(obs, mu, sn, tol=1e-9)
    keys = sorted(tuple(int(v) for v in mu.labels[i]) for i in m.indices)
    assert keys == [(1, 1, 0), (1, 1, 1), (1, 1, 2)]
    assert len(m.classes) == 1


def test_match_collapsed_pattern():
    sn = SemiNorm(2, 1)
    mu = cylinder_spectral_measure(BUBBLE, sn, TIGHT)
    # (rho, 1, 0): peak inside the window, crash already observed
    m = match_pattern([0.5, 1.0, 0.0], mu, sn, tol=1e-9)
    assert [tuple(int(v) for v in mu.labels[i]) for i in m.indices] == [(1, 1, -1)]


def test_no_match_and_kernel():
    sn = SemiNorm(1, 1)
    mu = cylinder_spectral_measure(BUBBLE, sn, TIGHT)
    with pytest.raises(NoMatch):
        match_pattern([1.0, -1.0], mu, sn, tol=1e-6)
    with pytest.raises(KernelVector):
        match_pattern([0.0, 0.0], mu, sn)
    with pytest.raises(ValueError):
        match_pattern([1.0, 2.0, 3.0], mu, sn)


def test_predict_survival_law():
    dist = predict(BUBBLE, SemiNorm(1, 2), [0.5, 1.0])
    assert [a.key for a, _ in dist.entries] == [(1, 1, 0), (1, 1, 1), (1, 1, 2)]
    r = 2 ** -1.5
    assert np.allclose([p for _, p in dist.entries], [1 - r, r * (1 - r), r * r], atol=1e-12)
    assert [round(p, 5) for _, p in dist.entries] == [0.64645, 0.22855, 0.125]
    assert dist.modal().key == (1, 1, 0)


def test_predict_negative_direction():
    dist = predict(BUBBLE, SemiNorm(1, 2), [-0.5, -1.0])
    assert all(a.theta == -1 for a, _ in dist.entries)


def test_predict_crash_is_degenerate():
    dist = predict(BUBBLE, SemiNorm(2, 1), [0.5, 1.0, 0.0])
    assert dist.is_degenerate()
    assert dist.modal().key == (1, 1, -1)


def test_scale_invariance():
    sn = SemiNorm(1, 2)
    mu = cylinder_spectral_measure(BUBBLE, sn, TIGHT)
    a = predict(None, sn, [0.5, 1.0], measure=mu)
    for c in (1e-3, 2.0, 1e4):
        b = predict(None, sn, [0.5 * c, 1.0 * c], measure=mu)
        assert [(x.key, p) for x, p in a.entries] == pytest.approx([(x.key, p) for x, p in b.entries])


@pytest.mark.parametrize("agg", [Aggregate.single(1.5, AR2(0.5, 0.7)), Aggregate.single(1.5, FracInt(0.2))])
def test_zero_one_law(agg):
    m, h = 2, 3
    sn = SemiNorm(m, h)
    trunc = TruncationPolicy(1e-10, max_terms=2000, strict=False)
    mu = cylinder_spectral_measure(agg, sn, trunc)
    seq = agg.components[0].seq
    for k0 in range(-m, h + 6):
        dist = predict(agg, sn, _obs(seq, k0, m, h), tol=1e-9, measure=mu)
        assert dist.is_degenerate()
        assert dist.modal().k == k0


def test_tie_breaking_reports_classes():
    agg = Aggregate(1.5, (Component(1.0, AR1(0.5)), Component(1.0, AR1(0.5001))))
    sn = SemiNorm(1, 1)
    dist = predict(agg, sn, [0.5, 1.0], tol=1e-3)
    cls = dist.conditioning["classes"]
    assert dist.conditioning["n_classes"] == 2
    assert sum(c["probability"] for c in cls) == pytest.approx(1.0)
    for c in cls:
        assert sum(e["probability"] for e in c["conditional"]) == pytest.approx(1.0)
    # with a tight tolerance only one component matches
    assert predict(agg, sn, [0.5, 1.0], tol=1e-9).conditioning["n_classes"] == 1


def test_closed_form_examples():
    d = aggar1_closed_form([0.5], [1.0], [0.0], 1.0, 1, 1, (1, 1, 0))
    assert [p for _, p in d.entries] == pytest.approx([0.5, 0.5])
    rhos, pis, betas, alpha = [0.5, 0.8], [1.0, 0.7], [0.3, -0.6], 1.5
    d = aggar1_closed_form(rhos, pis, betas, alpha, 0, 3, (1, 0, 0))
    w = [0.5 * (1 + b) for b in betas]
    pj = [pi ** alpha * wi / (1 - r ** alpha) for pi, wi, r in zip(pis, w, rhos)]
    spike = sum(pi ** alpha * wi for pi, wi in zip(pis, w))
    assert d.entries[0][0].j == 0 and d.entries[0][1] == pytest.approx(spike / sum(pj))
    assert d.total() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        aggar1_closed_form([-0.5], [1.0], [0.0], 1.5, 1, 1, (1, 1, 0))
    with pytest.raises(ValueError):
        aggar1_closed_form([0.0], [1.0], [0.0], 1.5, 1, 1, (1, 1, 0))


def _compare(cf, gen):
    a = {x.key: p for x, p in cf.entries}
    b = {x.key: p for x, p in gen.entries}
    assert set(a) == set(b)
    for key in a:
        assert abs(a[key] - b[key]) <= 1e-10


@pytest.mark.parametrize("m, h", [(1, 2), (2, 1), (0, 2)])
def test_closed_form_matches_generic(m, h, rng):
    for _ in range(10):
        J = int(rng.integers(1, 4))
        rhos = np.sort(rng.uniform(0.1, 0.9, J))
        if J > 1 and np.min(np.diff(rhos)) < 0.02:
            continue
        pis = rng.uniform(0.5, 2.0, J)
        betas = rng.uniform(-0.9, 0.9, J)
        alpha = float(rng.choice([0.8, 1.0, 1.5]))
        agg = Aggregate(alpha, tuple(Component(p, AR1(r), b) for p, r, b in zip(pis, rhos, betas)))
        sn = SemiNorm(m, h)
        mu = cylinder_spectral_measure(agg, sn, TIGHT)
        theta = int(rng.choice([-1, 1]))
        j0 = int(rng.integers(1, J + 1))
        cases = [(theta, 0, 0)] if m == 0 else [(theta, j0, k) for k in range(-m, h + 1)]
        for case in cases:
            cf = aggar1_closed_form(rhos, pis, betas, alpha, m, h, case)
            obs = np.asarray(cf.entries[0][0].point[: m + 1]) * 3.7
            _compare(cf, predict(agg, sn, obs, tol=1e-9, measure=mu))


def test_serialization_round_trip():
    dist = predict(BUBBLE, SemiNorm(1, 2), [0.5, 1.0])
    again = PatternDistribution.from_dict(json.loads(dist.to_json()))
    assert [(a.key, a.point, a.weight, p) for a, p in again.entries] == \
        [(a.key, a.point, a.weight, p) for a, p in dist.entries]
    assert again.m == dist.m
    header, rows = dist.csv_rows()
    assert header == ["theta", "j", "k", "probability", "future_1", "future_2"]
    buf = io.StringIO()
    csv.writer(buf).writerows([header, *rows])
    back = list(csv.reader(io.StringIO(buf.getvalue())))
    assert [float(r[3]) for r in back[1:]] == [p for _, p in dist.entries]
