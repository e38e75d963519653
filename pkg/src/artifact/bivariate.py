"""Bivariate system of one anticipative and one causal AR(1) with dependent noise.

    X1_t = rho1 X1_{t+1} + eps1_t,    X2_t = rho2 X2_{t-1} + eps2_t,

with (eps1_t, eps2_t) i.i.d. symmetric alpha-stable with a discrete spectral
measure Gamma2 on the unit circle.  The path vector is
Y_t = (X1_t, X2_t, X1_{t+1}, X2_{t+1}) and the semi-norm only looks at the
current pair, ||Y|| = sqrt(X1_t^2 + X2_t^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import lfilter
from scipy.spatial import cKDTree

from .seminorm import SemiNorm
from .spectral import SPHERE, DiscreteSpectralMeasure, NotRepresentable
from .stable_core import sample_standard
from .tailcond import ZeroConditioningMass, conditional_ratio

__all__ = [
    "BIVAR_SEMINORM",
    "UnsupportedConditioning",
    "BivarModel",
    "Gamma4Measure",
    "Arc",
    "Rect",
    "Region",
    "TailRegion",
    "gamma4_sphere",
    "gamma4_cylinder",
    "is_representable",
    "bivar_tail",
    "bivar_generic",
    "classify_conditioning",
    "oracle_exponent",
]

# sqrt(x1^2 + x2^2) on (x1, x2, x1', x2') is the m = 1, h = 2 semi-norm
BIVAR_SEMINORM = SemiNorm(1, 2, 2.0)
_KERNEL_TOL = 1e-12
_EDGE = 1e-12


class UnsupportedConditioning(ValueError):
    """The conditioning arc is not covered by any closed-form case."""


@dataclass
class BivarModel:
    alpha: float
    rho1: float
    rho2: float
    gamma2: DiscreteSpectralMeasure

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0):
            raise ValueError("alpha must lie in (0, 2)")
        for name, r in (("rho1", self.rho1), ("rho2", self.rho2)):
            if not (0.0 < abs(r) < 1.0):
                raise ValueError(f"{name} must satisfy 0 < |{name}| < 1, got {r}")
        if self.gamma2.dimension != 2 or not self.gamma2.on_sphere:
            raise ValueError("gamma2 must live on the unit circle")
        if self.gamma2.alpha != self.alpha:
            raise ValueError("gamma2 and the model disagree on alpha")
        if not self.gamma2.is_symmetric(1e-12):
            raise ValueError("gamma2 must be symmetric (symmetric stable noise)")

    @classmethod
    def from_atoms(cls, alpha, rho1, rho2, points, weights) -> "BivarModel":
        g = DiscreteSpectralMeasure(np.asarray(points, float), np.asarray(weights, float), alpha, SPHERE)
        return cls(float(alpha), float(rho1), float(rho2), g)

    @property
    def sigma_alpha(self):
        """(sigma1^alpha, sigma2^alpha), the marginal noise scales to the power alpha."""
        a = np.abs(self.gamma2.points) ** self.alpha
        s = a.T @ self.gamma2.weights
        return float(s[0]), float(s[1])

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "rho1": self.rho1,
            "rho2": self.rho2,
            "gamma2": [
                {"point": [float(v) for v in p], "weight": float(w)}
                for p, w in zip(self.gamma2.points, self.gamma2.weights)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BivarModel":
        pts = [a["point"] for a in d["gamma2"]]
        w = [a["weight"] for a in d["gamma2"]]
        return cls.from_atoms(float(d["alpha"]), float(d["rho1"]), float(d["rho2"]), pts, w)

    # ------------------------------------------------------------ simulation

    def _pairs(self):
        pts = self.gamma2.points
        _, partner = cKDTree(pts).query(-pts, p=np.inf)
        return [i for i in range(len(pts)) if i < partner[i]]

    def sample_noise(self, T: int, rng: np.random.Generator) -> np.ndarray:
        """T draws of the bivariate noise, shape (T, 2).

        A symmetric discrete measure with atom pairs +-s_i of weight w_i each is
        the law of sum_i (2 w_i)^{1/alpha} Z_i s_i with Z_i i.i.d. S(alpha, 0, 1, 0).
        """
        out = np.zeros((T, 2))
        for i in self._pairs():
            c = (2.0 * self.gamma2.weights[i]) ** (1.0 / self.alpha)
            z = sample_standard(self.alpha, 0.0, T, rng)
            out += (c * z)[:, None] * self.gamma2.points[i][None, :]
        return out

    def burn_in(self, tol: float = 1e-12) -> int:
        r = max(abs(self.rho1), abs(self.rho2))
        return int(math.ceil(math.log(tol) / (self.alpha * math.log(r)))) + 1

    def simulate(self, T: int, seed=None, tol: float = 1e-12) -> np.ndarray:
        """Path (X1_t, X2_t), t = 0..T-1, shape (T, 2).

        Both recursions are run exactly; a burn-in of K steps on each side
        makes the neglected start-up terms smaller than ``tol`` in alpha-mass.
        """
        if T < 1:
            raise ValueError("T must be positive")
        rng = np.random.default_rng(seed)
        K = self.burn_in(tol)
        eps = self.sample_noise(T + 2 * K, rng)
        x1 = lfilter([1.0], [1.0, -self.rho1], eps[::-1, 0])[::-1]
        x2 = lfilter([1.0], [1.0, -self.rho2], eps[:, 1])
        return np.column_stack([x1[K: K + T], x2[K: K + T]])


def path_vectors(path: np.ndarray) -> np.ndarray:
    """Rows (X1_t, X2_t, X1_{t+1}, X2_{t+1}) for t = 0..T-2."""
    return np.hstack([path[:-1], path[1:]])


# ---------------------------------------------------------------- Gamma4


def _lead_sign(pts: np.ndarray) -> np.ndarray:
    nz = np.abs(pts) > 0
    first = nz.argmax(axis=1)
    return np.sign(pts[np.arange(len(pts)), first]).astype(np.int64)


@dataclass
class Gamma4Measure:
    """The three parts of the spectral measure of Y_t."""

    delta: DiscreteSpectralMeasure
    gamma41: DiscreteSpectralMeasure
    gamma42: DiscreteSpectralMeasure

    @property
    def parts(self):
        return (self.delta, self.gamma41, self.gamma42)

    def combined(self) -> DiscreteSpectralMeasure:
        parts = [p for p in self.parts if p.n_atoms]
        pts = np.vstack([p.points for p in parts])
        w = np.concatenate([p.weights for p in parts])
        # label: (sign of the leading nonzero coordinate, part 0/1/2, index within part)
        labels = np.vstack([
            np.column_stack([_lead_sign(p.points), np.full(p.n_atoms, part), np.arange(p.n_atoms)])
            for part, p in enumerate(self.parts) if p.n_atoms
        ])
        return DiscreteSpectralMeasure(pts, w, self.delta.alpha, self.delta.support, None, labels)

    def total_mass(self) -> float:
        return sum(p.total_mass() for p in self.parts)


def is_representable(model: BivarModel) -> bool:
    """True iff Gamma2 puts no mass on (0, +-1)."""
    return bool(np.all(np.abs(model.gamma2.points[:, 0]) > _KERNEL_TOL))


def gamma4_sphere(model: BivarModel) -> Gamma4Measure:
    """Spectral measure of Y_t on the Euclidean unit sphere of R^4."""
    a, r1, r2 = model.alpha, model.rho1, model.rho2
    s1a, s2a = model.sigma_alpha
    q1, q2 = abs(r1) ** a, abs(r2) ** a
    x1 = np.array([r1, 0.0, 1.0, 0.0]) / math.hypot(r1, 1.0)
    x2 = np.array([0.0, 1.0, 0.0, r2]) / math.hypot(1.0, r2)
    c1 = s1a / 2.0 * (1.0 + r1 * r1) ** (a / 2.0) * q1 / (1.0 - q1)
    c2 = s2a / 2.0 * (1.0 + r2 * r2) ** (a / 2.0) * q2 / (1.0 - q2)
    dpts, dw = [], []
    for x, c in ((x1, c1), (x2, c2)):
        if c > 0:
            dpts += [x, -x]
            dw += [c, c]
    delta = DiscreteSpectralMeasure(np.array(dpts).reshape(-1, 4), np.array(dw), a, SPHERE)
    u = model.gamma2.points
    w = model.gamma2.weights
    zeros = np.zeros(len(w))
    b = np.column_stack([u[:, 0], u[:, 1], zeros, r2 * u[:, 1]])
    c = np.column_stack([r1 * u[:, 0], zeros, u[:, 0], u[:, 1]])
    parts = []
    for v in (b, c):
        e = np.sqrt((v * v).sum(axis=1))
        parts.append(DiscreteSpectralMeasure(v / e[:, None], w * e ** a, a, SPHERE))
    return Gamma4Measure(delta, parts[0], parts[1])


def gamma4_cylinder(model: BivarModel) -> Gamma4Measure:
    """Spectral measure of Y_t on the unit cylinder of sqrt(x1^2 + x2^2).

    Raises NotRepresentable when Gamma2 charges (0, +-1).
    """
    if not is_representable(model):
        raise NotRepresentable(
            "the noise spectral measure charges (0, +-1): a shock in the second "
            "component alone at time t+1 is invisible at time t"
        )
    sn = BIVAR_SEMINORM
    a, r1, r2 = model.alpha, model.rho1, model.rho2
    s1a, s2a = model.sigma_alpha
    q1, q2 = abs(r1) ** a, abs(r2) ** a
    dpts, dw = [], []
    for x, c in (((1.0, 0.0, 1.0 / r1, 0.0), s1a / 2.0 * q1 * q1 / (1.0 - q1)),
                 ((0.0, 1.0, 0.0, r2), s2a / 2.0 * q2 / (1.0 - q2))):
        if c > 0:
            dpts += [x, [-v for v in x]]
            dw += [c, c]
    delta = DiscreteSpectralMeasure(np.array(dpts, float).reshape(-1, 4), np.array(dw), a, sn)
    u = model.gamma2.points
    w = model.gamma2.weights
    zeros = np.zeros(len(w))
    g41 = DiscreteSpectralMeasure(np.column_stack([u[:, 0], u[:, 1], zeros, r2 * u[:, 1]]), w, a, sn)
    ru = r1 * u[:, 0]
    th = np.sign(ru)
    g42 = DiscreteSpectralMeasure(
        np.column_stack([th, zeros, th / r1, u[:, 1] / np.abs(ru)]), np.abs(ru) ** a * w, a, sn
    )
    return Gamma4Measure(delta, g41, g42)


def oracle_exponent(model: BivarModel, u) -> np.ndarray:
    """-log E exp(i<u, Y_t>) computed directly from the two recursions."""
    u = np.atleast_2d(np.asarray(u, float))
    a, r1, r2 = model.alpha, model.rho1, model.rho2
    s1a, s2a = model.sigma_alpha
    q1, q2 = abs(r1) ** a, abs(r2) ** a
    u10, u20, u11, u21 = u.T
    g = model.gamma2
    out = s2a * q2 / (1.0 - q2) * np.abs(u20 + r2 * u21) ** a
    out = out + s1a * q1 / (1.0 - q1) * np.abs(r1 * u10 + u11) ** a
    now = np.column_stack([u10, u20 + r2 * u21])
    nxt = np.column_stack([r1 * u10 + u11, u21])
    out = out + (np.abs(now @ g.points.T) ** a) @ g.weights
    out = out + (np.abs(nxt @ g.points.T) ** a) @ g.weights
    return out


# ---------------------------------------------------------------- regions


def _wrap(x):
    return (x + math.pi) % (2.0 * math.pi) - math.pi


@dataclass(frozen=True)
class Arc:
    """Closed arc {(cos u, sin u): theta - eta <= u <= theta + eta} of the unit circle."""

    theta: float
    eta: float

    def __post_init__(self):
        if not (self.eta >= 0.0):
            raise ValueError("eta must be non-negative")

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, float))
        if self.eta >= math.pi:
            return np.hypot(pts[:, 0], pts[:, 1]) > 0
        ang = np.arctan2(pts[:, 1], pts[:, 0])
        ok = np.abs(_wrap(ang - self.theta)) <= self.eta + _EDGE
        return ok & (np.hypot(pts[:, 0], pts[:, 1]) > 0)

    def contains_point(self, x, y) -> bool:
        return bool(self.contains([[x, y]])[0])

    def to_dict(self):
        return {"theta": self.theta, "eta": self.eta}


@dataclass(frozen=True)
class Rect:
    """Closed rectangle [xlo, xhi] x [ylo, yhi]; infinite bounds give half-planes and strips."""

    xlo: float
    xhi: float
    ylo: float
    yhi: float

    def __post_init__(self):
        if self.xlo > self.xhi or self.ylo > self.yhi:
            raise ValueError("empty rectangle")

    def contains(self, x, y) -> np.ndarray:
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        return (x >= self.xlo - _EDGE) & (x <= self.xhi + _EDGE) & (y >= self.ylo - _EDGE) & (y <= self.yhi + _EDGE)


@dataclass(frozen=True)
class Region:
    """Finite union of closed rectangles in the plane."""

    rects: tuple

    @classmethod
    def from_list(cls, rects: Sequence[Sequence[float]]) -> "Region":
        return cls(tuple(Rect(*(float(v) for v in r)) for r in rects))

    def contains(self, x, y) -> np.ndarray:
        x = np.asarray(x, float)
        out = np.zeros(x.shape, dtype=bool)
        for r in self.rects:
            out |= r.contains(x, y)
        return out

    def contains_point(self, x, y) -> bool:
        return bool(self.contains(np.array([x]), np.array([y]))[0])

    def section(self, x) -> "Region":
        """{y : (x, y) in P} as a region on the line, stored with x-range (-inf, inf)."""
        keep = [Rect(-math.inf, math.inf, r.ylo, r.yhi) for r in self.rects if r.xlo - _EDGE <= x <= r.xhi + _EDGE]
        return Region(tuple(keep))

    def to_list(self):
        return [[r.xlo, r.xhi, r.ylo, r.yhi] for r in self.rects]


@dataclass(frozen=True)
class TailRegion:
    """A = {s : (s1, s2) in arc, (s3, s4 - rho2 s2) in P}."""

    arc: Arc
    P: Region

    def mask(self, model: BivarModel, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, float))
        return self.arc.contains(pts[:, :2]) & self.P.contains(pts[:, 2], pts[:, 3] - model.rho2 * pts[:, 1])


# ---------------------------------------------------------------- conditional limits

_AXES = {"+e1": (1.0, 0.0), "-e1": (-1.0, 0.0), "+e2": (0.0, 1.0), "-e2": (0.0, -1.0)}


def classify_conditioning(v0: Arc):
    """Return ("i", None), ("ii", theta) or ("iii", theta) for the conditioning arc."""
    has = {k: v0.contains_point(*p) for k, p in _AXES.items()}
    e1 = [k for k in ("+e1", "-e1") if has[k]]
    e2 = [k for k in ("+e2", "-e2") if has[k]]
    if not e1 and not e2:
        return "i", None
    if not e1 and len(e2) == 1:
        return "ii", 1 if e2[0] == "+e2" else -1
    if not e2 and len(e1) == 1:
        return "iii", 1 if e1[0] == "+e1" else -1
    raise UnsupportedConditioning(
        "the conditioning arc contains both a horizontal and a vertical axis point, "
        "or both ends of one axis; no closed form covers this arc"
    )


def _gamma2_mass(model: BivarModel, mask) -> float:
    return float(model.gamma2.weights[mask].sum())


def bivar_tail(model: BivarModel, v0: Arc, region: TailRegion) -> float:
    """Closed-form limit of P(Y/||Y|| in A | ||Y|| > x, (Y/||Y||)_{1,2} in V0)."""
    if not is_representable(model):
        raise NotRepresentable("the noise spectral measure charges (0, +-1)")
    a = model.alpha
    s1a, s2a = model.sigma_alpha
    q1, q2 = abs(model.rho1) ** a, abs(model.rho2) ** a
    u = model.gamma2.points
    in_v0 = v0.contains(u)
    in_both = in_v0 & region.arc.contains(u)
    g_v0 = _gamma2_mass(model, in_v0)
    g_both = _gamma2_mass(model, in_both)
    origin = region.P.contains_point(0.0, 0.0)
    case, theta = classify_conditioning(v0)
    if case == "i":
        if g_v0 <= 0.0:
            raise ZeroConditioningMass("the noise spectral measure gives the conditioning arc no mass")
        return g_both / g_v0 * origin
    if case == "ii":
        d2 = s2a / 2.0 * q2 / (1.0 - q2)
        den = d2 + g_v0
        if den <= 0.0:
            raise ZeroConditioningMass("the conditioning arc carries no mass")
        num = d2 * region.arc.contains_point(0.0, theta) + g_both
        return num / den * origin
    # case iii: peak of the anticipative component at a later date
    r1 = model.rho1
    den = s1a / 2.0 * q1 / (1.0 - q1) + g_v0
    if den <= 0.0:
        raise ZeroConditioningMass("the conditioning arc carries no mass")
    lead = 0.0
    if region.arc.contains_point(theta, 0.0):
        d1 = s1a / 2.0 * q1 * q1 / (1.0 - q1)
        lead = d1 * region.P.contains_point(theta / r1, 0.0)
        P2 = region.P.section(theta / r1)
        nz = np.abs(u[:, 0]) > 0
        y = np.zeros(len(u))
        y[nz] = theta * u[nz, 1] / (r1 * u[nz, 0])
        lift = nz & P2.contains(np.zeros(len(u)), y)
        lead += q1 / 2.0 * float((np.abs(u[lift, 0]) ** a) @ model.gamma2.weights[lift])
    return (lead + g_both * origin) / den


def bivar_generic(model: BivarModel, v0: Arc, region: TailRegion) -> float:
    """The same limit as a plain mass ratio over the cylinder measure."""
    meas = gamma4_cylinder(model).combined()
    A = lambda p: region.mask(model, p)
    B = lambda p: v0.contains(p[:, :2])
    return conditional_ratio(meas, A, B)
