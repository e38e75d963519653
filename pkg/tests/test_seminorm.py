import math

import numpy as np
import pytest

from artifact.seminorm import KernelVector, SemiNorm, evaluate, project_to_cylinder


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0, math.inf])
def test_axioms_random(rng, p):
    # 10^4 random checks of homogeneity, triangle inequality and kernel shape
    sn = SemiNorm(2, 3, p)
    n = 10_000
    x = rng.standard_cauchy((n, sn.dim))
    y = rng.standard_cauchy((n, sn.dim))
    c = rng.normal(size=n) * 10
    nx, ny = sn.evaluate(x), sn.evaluate(y)
    assert np.all(nx >= 0)
    assert np.allclose(sn.evaluate(c[:, None] * x), np.abs(c) * nx, rtol=1e-12)
    assert np.all(sn.evaluate(x + y) <= (nx + ny) * (1 + 1e-12))
    # perturbing the future block leaves the value unchanged
    z = x.copy()
    z[:, sn.m + 1:] = rng.normal(size=(n, sn.h))
    assert np.array_equal(sn.evaluate(z), nx)
    k = np.zeros((n, sn.dim))
    k[:, sn.m + 1:] = y[:, sn.m + 1:]
    assert np.all(sn.evaluate(k) == 0)


def test_values():
    assert SemiNorm(1, 1).evaluate([3.0, 4.0, 100.0]) == pytest.approx(5.0)
    assert SemiNorm(1, 1, 1.0).evaluate([3.0, -4.0, 100.0]) == pytest.approx(7.0)
    assert SemiNorm(1, 1, math.inf).evaluate([3.0, -4.0, 100.0]) == pytest.approx(4.0)
    assert SemiNorm(0, 2).evaluate([-2.0, 1.0, 1.0]) == pytest.approx(2.0)


def test_project_lands_on_cylinder(rng):
    sn = SemiNorm(1, 2)
    x = rng.normal(size=(50, 4))
    z = project_to_cylinder(sn, x)
    assert np.allclose(evaluate(sn, z), 1.0)
    assert np.allclose(z * sn.evaluate(x)[:, None], x)


def test_project_kernel_vector_raises():
    with pytest.raises(KernelVector):
        SemiNorm(1, 1).project([0.0, 0.0, 1.0])


def test_dimension_checks():
    sn = SemiNorm(1, 1)
    with pytest.raises(ValueError):
        sn.evaluate([1.0, 2.0])
    with pytest.raises(ValueError):
        sn.norm_observed([1.0, 2.0, 3.0])


@pytest.mark.parametrize("args", [(-1, 1), (0, 0), (1, 1, 0.5), (1.5, 1)])
def test_invalid(args):
    with pytest.raises(ValueError):
        SemiNorm(*args)


def test_dict_round_trip():
    for sn in (SemiNorm(2, 3), SemiNorm(0, 1, math.inf), SemiNorm(1, 4, 1.5)):
        assert SemiNorm.from_dict(sn.to_dict()) == sn
    assert SemiNorm(0, 1, math.inf).to_dict()["p"] == "inf"
