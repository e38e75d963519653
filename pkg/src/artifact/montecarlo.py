"""Monte Carlo checks of the tail limits.

Every experiment simulates one long path, forms the path vectors at each
time, keeps the ones whose semi-norm exceeds a high threshold and compares
empirical frequencies with the limiting spectral-mass ratios.  Standard
errors come from a bootstrap over contiguous time blocks, which keeps the
serial dependence of extreme episodes inside each block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from .bivariate import BIVAR_SEMINORM, BivarModel
from .model import Aggregate, TruncationPolicy, simulate
from .seminorm import SemiNorm
from .spectral import SPHERE, DiscreteSpectralMeasure
from .stable_core import StableParams, c_alpha, sample_stable

__all__ = [
    "TooFewExceedances",
    "TailExperiment",
    "PathSample",
    "ConditionalEstimate",
    "ScalingCurve",
    "draw_sample",
    "empirical_conditional",
    "empirical_frequencies",
    "empirical_scaling",
    "replicate",
    "tube",
    "observed_tube",
    "min_separation",
    "nearest_atom",
    "MIN_EXCEEDANCES",
]

MIN_EXCEEDANCES = 200
Model = Union[Aggregate, BivarModel, StableParams]
RowPredicate = Callable[[np.ndarray], np.ndarray]


class TooFewExceedances(RuntimeError):
    """Fewer than MIN_EXCEEDANCES exceedances fall in the conditioning set."""


# ---------------------------------------------------------------- predicates


def tube(center, radius: float = 0.05) -> RowPredicate:
    """Rows within ``radius`` of ``center`` in sup-distance."""
    c = np.asarray(center, dtype=float)

    def pred(rows):
        return np.abs(np.asarray(rows) - c[None, :]).max(axis=1) <= radius

    return pred


def observed_tube(center_observed, radius: float = 0.05) -> RowPredicate:
    """Rows whose observed block is within ``radius`` of ``center_observed``."""
    c = np.asarray(center_observed, dtype=float)
    n = c.size

    def pred(rows):
        return np.abs(np.asarray(rows)[:, :n] - c[None, :]).max(axis=1) <= radius

    return pred


def min_separation(measure: DiscreteSpectralMeasure) -> float:
    """Smallest sup-distance between two atoms of a measure."""
    if measure.n_atoms < 2:
        return math.inf
    d, _ = cKDTree(measure.points).query(measure.points, k=2, p=np.inf)
    return float(d[:, 1].min())


# ---------------------------------------------------------------- sampling


@dataclass
class PathSample:
    """Semi-norms of all N path vectors plus lazy access to the vectors."""

    norms: np.ndarray
    rows: Callable[[np.ndarray], np.ndarray]
    dim: int

    @property
    def N(self) -> int:
        return self.norms.size


def _window_norm(x: np.ndarray, width: int, n: int, p: float) -> np.ndarray:
    out = np.zeros(n)
    for i in range(width):
        seg = np.abs(x[i: i + n])
        if math.isinf(p):
            np.maximum(out, seg, out=out)
        elif p == 2.0:
            out += seg * seg
        else:
            out += seg ** p
    if math.isinf(p):
        return out
    return np.sqrt(out) if p == 2.0 else out ** (1.0 / p)


def draw_sample(
    model: Model,
    sn: Optional[SemiNorm],
    N: int,
    seed,
    trunc: TruncationPolicy = TruncationPolicy(),
) -> PathSample:
    """Simulate N consecutive path vectors of ``model``."""
    if isinstance(model, StableParams):
        x = sample_stable(model, N, seed=seed)
        return PathSample(np.abs(x), lambda idx: x[idx][:, None], 1)
    if isinstance(model, BivarModel):
        path = model.simulate(N + 1, seed=seed)
        norms = np.hypot(path[:-1, 0], path[:-1, 1])
        return PathSample(norms, lambda idx: np.hstack([path[idx], path[idx + 1]]), 4)
    if isinstance(model, Aggregate):
        if sn is None:
            raise ValueError("a semi-norm is required for aggregate models")
        dim = sn.dim
        x = simulate(model, N + dim - 1, trunc, seed)
        norms = _window_norm(x, sn.m + 1, N, sn.p)
        offs = np.arange(dim)
        return PathSample(norms, lambda idx: x[np.asarray(idx)[:, None] + offs[None, :]], dim)
    raise TypeError(f"cannot simulate a {type(model).__name__}")


def _support(model: Model, sn: Optional[SemiNorm]) -> Optional[SemiNorm]:
    return BIVAR_SEMINORM if isinstance(model, BivarModel) else sn


# ---------------------------------------------------------------- experiments


@dataclass
class TailExperiment:
    """Conditional frequency of A given B among path vectors beyond a threshold.

    The threshold is the ``q``-quantile of the simulated semi-norms unless an
    absolute level ``x`` is given.  ``decluster`` is "none" (all exceedance
    times) or "runs" (first time of each cluster whose gaps are shorter than
    ``run_gap``, default m + h + 1).
    """

    model: Model
    seminorm: Optional[SemiNorm]
    A: RowPredicate
    B: RowPredicate
    N: int = 10**6
    q: Optional[float] = 0.999
    x: Optional[float] = None
    n_blocks: int = 50
    n_boot: int = 500
    decluster: str = "none"
    run_gap: Optional[int] = None
    trunc: TruncationPolicy = field(default_factory=TruncationPolicy)

    def __post_init__(self):
        if self.x is None and self.q is None:
            raise ValueError("give a quantile level q or an absolute threshold x")
        if self.x is None and not (0.9 < self.q < 1.0):
            raise ValueError("q must lie in (0.9, 1)")
        if self.x is not None and not (self.x > 0):
            raise ValueError("x must be positive")
        if self.N < 10**4:
            raise ValueError("N must be at least 10^4")
        if self.n_blocks < 2:
            raise ValueError("need at least two blocks")
        if self.decluster not in ("none", "runs"):
            raise ValueError("decluster must be 'none' or 'runs'")


@dataclass
class ConditionalEstimate:
    estimate: float
    std_error: float
    n_exceedances: int
    threshold: float
    n_conditioning: int = 0

    def z_score(self, target: float) -> float:
        if self.std_error == 0.0:
            return 0.0 if self.estimate == target else math.inf
        return (self.estimate - target) / self.std_error

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.estimate - target) <= k * self.std_error

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "std_error": self.std_error, "n_exceedances": self.n_exceedances,
                "n_conditioning": self.n_conditioning, "threshold": self.threshold}


def _exceedances(exp: TailExperiment, sample: PathSample):
    x = exp.x if exp.x is not None else float(np.quantile(sample.norms, exp.q))
    idx = np.flatnonzero(sample.norms > x)
    if exp.decluster == "runs" and idx.size:
        gap = exp.run_gap
        if gap is None:
            gap = sample.dim if exp.seminorm is None else exp.seminorm.dim
        keep = np.ones(idx.size, dtype=bool)
        keep[1:] = np.diff(idx) >= gap
        idx = idx[keep]
    return x, idx


def _block_bootstrap(blocks, a, b, n_blocks, n_boot, rng):
    """Bootstrap s.e. of sum(a)/sum(b) resampling whole time blocks."""
    A = np.bincount(blocks, weights=a, minlength=n_blocks)
    Bc = np.bincount(blocks, weights=b, minlength=n_blocks)
    draws = rng.integers(0, n_blocks, size=(n_boot, n_blocks))
    num = A[draws].sum(axis=1)
    den = Bc[draws].sum(axis=1)
    ok = den > 0
    return float(np.std(num[ok] / den[ok], ddof=1)) if ok.sum() > 1 else math.nan


def empirical_frequencies(
    exp: TailExperiment, patterns: Mapping[str, RowPredicate], seed, sample: Optional[PathSample] = None
) -> dict:
    """Frequencies of several A-sets given B from one simulated path."""
    sim_seed, boot_seed = (int(v) for v in np.random.SeedSequence(seed).generate_state(2))
    if sample is None:
        sample = draw_sample(exp.model, _support(exp.model, exp.seminorm), exp.N, sim_seed, exp.trunc)
    x, idx = _exceedances(exp, sample)
    z = _normalized_rows(sample, idx)
    b = np.asarray(exp.B(z), dtype=bool)
    nb = int(b.sum())
    if nb < MIN_EXCEEDANCES:
        raise TooFewExceedances(
            f"only {nb} exceedances fall in the conditioning set (need {MIN_EXCEEDANCES}); "
            "lower the threshold or increase N"
        )
    blocks = np.minimum(idx * exp.n_blocks // sample.N, exp.n_blocks - 1)
    out = {}
    for name, pred in patterns.items():
        a = np.asarray(pred(z), dtype=bool) & b
        rng = np.random.default_rng(boot_seed)
        se = _block_bootstrap(blocks, a.astype(float), b.astype(float), exp.n_blocks, exp.n_boot, rng)
        out[name] = ConditionalEstimate(float(a.sum()) / nb, se, int(idx.size), x, nb)
    return out


def empirical_conditional(exp: TailExperiment, seed, sample: Optional[PathSample] = None) -> ConditionalEstimate:
    """Estimate P(Y/||Y|| in A | ||Y|| > x, Y/||Y|| in B) with a block-bootstrap s.e."""
    return empirical_frequencies(exp, {"A": exp.A}, seed, sample)["A"]


def replicate(exp: TailExperiment, target: float, seeds: Sequence[int], k: float = 3.0):
    """Run the experiment for each seed; return (estimates, fraction within k s.e.)."""
    ests = [empirical_conditional(exp, s) for s in seeds]
    hits = sum(e.within(target, k) for e in ests)
    return ests, hits / len(ests)


# ---------------------------------------------------------------- tail scaling


@dataclass
class ScalingCurve:
    x: np.ndarray
    estimate: np.ndarray
    std_error: np.ndarray
    theory: float
    alpha: float

    def rows(self):
        """(x, estimate, lo, hi, theory) rows for plotting."""
        lo = self.estimate - 1.96 * self.std_error
        hi = self.estimate + 1.96 * self.std_error
        return [(float(a), float(b), float(c), float(d), float(self.theory))
                for a, b, c, d in zip(self.x, self.estimate, lo, hi)]


def _theory_measure(model: Model, sn: Optional[SemiNorm], trunc: TruncationPolicy) -> DiscreteSpectralMeasure:
    if isinstance(model, StableParams):
        w = model.sigma ** model.alpha * np.array([(1 + model.beta) / 2, (1 - model.beta) / 2])
        keep = w > 0
        return DiscreteSpectralMeasure(np.array([[1.0], [-1.0]])[keep], w[keep], model.alpha, SPHERE)
    if isinstance(model, BivarModel):
        from .bivariate import gamma4_cylinder

        return gamma4_cylinder(model).combined()
    from .spectral import cylinder_spectral_measure

    return cylinder_spectral_measure(model, sn, trunc)


def empirical_scaling(
    model: Model,
    sn: Optional[SemiNorm],
    x_grid,
    N: int,
    seed,
    A: Optional[RowPredicate] = None,
    se_method: str = "blocks",
    n_blocks: int = 50,
    trunc: TruncationPolicy = TruncationPolicy(),
    sample: Optional[PathSample] = None,
) -> ScalingCurve:
    """x^alpha P(||Y|| > x, Y/||Y|| in A) on a grid, with C_alpha Gamma(A) as theory.

    ``se_method`` is "blocks" (batch means over time blocks) or "binomial"
    (i.i.d. formula, for independent samples).
    """
    if se_method not in ("blocks", "binomial"):
        raise ValueError("se_method must be 'blocks' or 'binomial'")
    alpha = model.alpha
    support = _support(model, sn)
    if sample is None:
        sample = draw_sample(model, support, N, seed, trunc)
    meas = _theory_measure(model, support, trunc)
    mask = np.ones(meas.n_atoms, dtype=bool) if A is None else np.asarray(A(meas.points), dtype=bool)
    theory = c_alpha(alpha) * float(meas.weights[mask].sum())
    xs = np.asarray(x_grid, dtype=float).reshape(-1)
    est, se = np.empty(xs.size), np.empty(xs.size)
    n = sample.N
    blocks_of = np.arange(n) * n_blocks // n
    for i, x in enumerate(xs):
        idx = np.flatnonzero(sample.norms > x)
        hit = np.ones(idx.size, dtype=bool)
        if A is not None and idx.size:
            hit = np.asarray(A(_normalized_rows(sample, idx)), dtype=bool)
        p = hit.sum() / n
        scale = x ** alpha
        est[i] = scale * p
        if se_method == "binomial":
            se[i] = scale * math.sqrt(p * (1.0 - p) / n)
        else:
            per = np.bincount(blocks_of[idx[hit]], minlength=n_blocks) / np.bincount(blocks_of, minlength=n_blocks)
            se[i] = scale * float(np.std(per, ddof=1)) / math.sqrt(n_blocks)
    return ScalingCurve(xs, est, se, theory, alpha)


def _normalized_rows(sample: PathSample, idx):
    return sample.rows(idx) / sample.norms[idx][:, None]


def nearest_atom(centers, radius: float = math.inf) -> list:
    """One predicate per center: the row is closest (sup-distance) to that center.

    With a finite ``radius`` rows farther than ``radius`` from every center
    belong to no class.  The classes partition the rows, so their
    frequencies add up to one when ``radius`` is infinite.
    """
    tree = cKDTree(np.atleast_2d(np.asarray(centers, dtype=float)))

    def make(i):
        def pred(rows):
            d, best = tree.query(np.asarray(rows, dtype=float), p=np.inf)
            return (best == i) & (d <= radius)

        return pred

    return [make(i) for i in range(tree.n)]
