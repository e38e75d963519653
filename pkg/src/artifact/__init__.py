"""Extreme-event patterns of stable moving averages and their aggregates."""

from .bivariate import Arc, BivarModel, Region, TailRegion, bivar_tail, gamma4_cylinder, gamma4_sphere
from .model import (
    AR1,
    AR2,
    ARMA,
    Aggregate,
    Component,
    Explicit,
    FracInt,
    Strophoid,
    TruncationPolicy,
    simulate,
)
from .montecarlo import TailExperiment, TooFewExceedances, empirical_conditional, empirical_scaling
from .seminorm import KernelVector, SemiNorm
from .spectral import (
    DiscreteSpectralMeasure,
    NotRepresentable,
    compute_m0,
    cylinder_spectral_measure,
    euclidean_spectral_measure,
    is_past_representable,
)
from .stable_core import StableParams, c_alpha, char_fn, sample_stable
from .tailcond import PatternDistribution, aggar1_closed_form, conditional_ratio, match_pattern, predict

__version__ = "0.1.0"
