"""Coefficient sequences, aggregates of stable moving averages and simulation.

A moving average is X_t = sum_k d_k eps_{t+k}; positive k load future
noise (the anticipative part).  An aggregate is a positive combination
X_t = sum_j pi_j X_{j,t} of independent moving averages sharing alpha, the
j-th one driven by S(alpha, beta_j, 1, 0) noise.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy import signal
from scipy.special import gammaln, gammasgn, poch

from .stable_core import sample_standard

__all__ = [
    "INFINITE",
    "TruncationError",
    "TruncationPolicy",
    "CoefficientSequence",
    "AR1",
    "AR2",
    "FracInt",
    "ARMA",
    "Strophoid",
    "Explicit",
    "Component",
    "Aggregate",
    "PathKernel",
    "coeff",
    "strophoid_coeffs",
    "path_kernel",
    "kernel_windows",
    "truncation_range",
    "simulate",
    "sequence_from_dict",
]

INFINITE = math.inf


class TruncationError(RuntimeError):
    """The requested truncation tolerance cannot be met within max_terms."""


@dataclass(frozen=True)
class TruncationPolicy:
    """Tolerance on the discarded alpha-mass sum_{k outside} |d_k|^alpha.

    When ``strict`` is false and the tolerance needs more than ``max_terms``
    coefficients, the range is clipped instead of raising.
    """

    tol: float = 1e-10
    max_terms: int = 1_000_000
    strict: bool = True

    def __post_init__(self):
        if not (self.tol > 0):
            raise ValueError("truncation tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be positive")


def _geom_poly_tail(alpha: float, r: float, power: float, K: int, scale: float = 1.0) -> float:
    """Upper bound of sum_{k>K, k>=0} (scale (k+1)^power r^k)^alpha."""
    if r <= 0.0:
        return 0.0
    k0 = max(K + 1, 0)
    total = 0.0
    chunk = 256
    while True:
        k = np.arange(k0, k0 + chunk, dtype=float)
        logt = alpha * (math.log(scale) + power * np.log1p(k) + k * math.log(r))
        terms = np.exp(logt)
        total += float(terms.sum())
        last = k[-1]
        q = ((last + 2.0) / (last + 1.0)) ** (alpha * power) * r ** alpha
        if q < 1.0:
            rest = float(terms[-1]) * q / (1.0 - q)
            if rest <= 1e-3 * total or rest < 1e-300:
                return total + rest
        k0 += chunk
        chunk *= 2


def _splitmix64(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = x + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


class CoefficientSequence(ABC):
    """A two-sided kernel (d_k) together with decay metadata."""

    kind: str = "abstract"

    @abstractmethod
    def coeff(self, k):
        """d_k, vectorized over integer arrays."""

    @property
    @abstractmethod
    def support(self) -> tuple[Optional[int], Optional[int]]:
        """Inclusive index bounds of the support; None means unbounded."""

    @abstractmethod
    def tail_upper(self, alpha: float, K: int) -> float:
        """Bound on sum_{k>K} |d_k|^alpha."""

    @abstractmethod
    def tail_lower(self, alpha: float, K: int) -> float:
        """Bound on sum_{k<K} |d_k|^alpha."""

    @abstractmethod
    def m0(self, search_bound: int = 10**6):
        """Largest zero run directly following a nonzero coefficient (INFINITE allowed)."""

    @abstractmethod
    def to_dict(self) -> dict:
        ...

    def check_alpha(self, alpha: float) -> None:
        """Raise ValueError when sum |d_k|^s diverges for every admissible s."""

    @property
    def summability_exponent(self) -> float:
        """Infimum of the s with sum |d_k|^s finite (0 for geometric decay)."""
        return 0.0

    def _scalar(self, k, out):
        return float(out) if np.ndim(k) == 0 else out


# ---------------------------------------------------------------- AR(1)


@dataclass(frozen=True)
class AR1(CoefficientSequence):
    """AR(1) kernel; anticipative by default, d_k = rho^k for k >= 0.

    With ``anticipative=False`` this is the usual causal AR(1), whose kernel
    d_k = rho^{-k} lives on k <= 0.
    """

    rho: float
    anticipative: bool = True
    kind = "ar1"

    def __post_init__(self):
        if not (0.0 < abs(self.rho) < 1.0):
            raise ValueError(f"AR1 requires 0 < |rho| < 1, got {self.rho}")

    def coeff(self, k):
        ka = np.asarray(k)
        kk = ka if self.anticipative else -ka
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.where(kk >= 0, float(self.rho) ** np.maximum(kk, 0).astype(float), 0.0)
        return self._scalar(k, out)

    @property
    def support(self):
        return (0, None) if self.anticipative else (None, 0)

    def _tail(self, alpha, n_first):
        # sum_{i >= n_first, i >= 0} |rho|^{alpha i}
        ra = abs(self.rho) ** alpha
        return ra ** max(n_first, 0) / (1.0 - ra)

    def tail_upper(self, alpha, K):
        return self._tail(alpha, K + 1) if self.anticipative else (self._tail(alpha, 0) if K < 0 else 0.0)

    def tail_lower(self, alpha, K):
        if self.anticipative:
            return self._tail(alpha, 0) if K > 0 else 0.0
        return self._tail(alpha, -K + 1)

    def m0(self, search_bound=10**6):
        return 0 if self.anticipative else INFINITE

    def to_dict(self):
        return {"kind": "ar1", "rho": self.rho, "anticipative": self.anticipative}


# ---------------------------------------------------------------- AR(2)


def _as_complex(z) -> complex:
    if isinstance(z, (list, tuple)):
        return complex(float(z[0]), float(z[1]))
    return complex(z)


@dataclass(frozen=True)
class AR2(CoefficientSequence):
    """Anticipative AR(2) with roots lambda1, lambda2 (a conjugate pair if complex).

    d_k = (l1^{k+1} - l2^{k+1}) / (l1 - l2) for k >= 0, and (k+1) l^k when
    the roots coincide.
    """

    lambda1: complex
    lambda2: complex
    kind = "ar2"

    def __post_init__(self):
        l1, l2 = _as_complex(self.lambda1), _as_complex(self.lambda2)
        object.__setattr__(self, "lambda1", l1)
        object.__setattr__(self, "lambda2", l2)
        for lam in (l1, l2):
            if not (0.0 < abs(lam) < 1.0):
                raise ValueError(f"AR2 roots must satisfy 0 < |lambda| < 1, got {lam}")
        if abs(l1 + l2) == 0.0:
            raise ValueError("AR2 requires lambda1 + lambda2 != 0")
        if l1.imag != 0.0 or l2.imag != 0.0:
            if abs(l1 - l2.conjugate()) > 1e-14 * max(1.0, abs(l1)):
                raise ValueError("complex AR2 roots must form a conjugate pair")

    @property
    def is_complex(self) -> bool:
        return self.lambda1.imag != 0.0

    def coeff(self, k):
        ka = np.asarray(k)
        kp = np.maximum(ka, 0).astype(float)
        l1, l2 = self.lambda1, self.lambda2
        if self.is_complex:
            r, th = abs(l1), math.atan2(l1.imag, l1.real)
            vals = r ** kp * np.sin((kp + 1.0) * th) / math.sin(th)
        else:
            a, b = l1.real, l2.real
            if a == b:
                vals = (kp + 1.0) * a ** kp
            elif a * b > 0 and abs(a - b) < 0.5 * max(abs(a), abs(b)):
                delta = (a - b) / b
                vals = b ** kp * np.expm1((kp + 1.0) * math.log1p(delta)) / delta
            else:
                vals = (a ** (kp + 1.0) - b ** (kp + 1.0)) / (a - b)
        out = np.where(ka >= 0, vals, 0.0)
        return self._scalar(k, out)

    @property
    def support(self):
        return (0, None)

    def tail_upper(self, alpha, K):
        r = max(abs(self.lambda1), abs(self.lambda2))
        return _geom_poly_tail(alpha, r, 1.0, K)

    def tail_lower(self, alpha, K):
        return self.tail_upper(alpha, -1) if K > 0 else 0.0

    def m0(self, search_bound=10**6):
        if not self.is_complex:
            return 0
        # d_k = r^k sin((k+1) theta) / sin(theta) vanishes iff (k+1) theta / pi is an integer;
        # isolated zeros exist exactly when theta / pi is rational.
        ratio = math.atan2(self.lambda1.imag, self.lambda1.real) / math.pi
        frac = Fraction(ratio).limit_denominator(1000)
        return 1 if abs(float(frac) - ratio) < 1e-13 else 0

    def to_dict(self):
        def enc(z):
            return z.real if z.imag == 0.0 else [z.real, z.imag]

        return {"kind": "ar2", "lambda1": enc(self.lambda1), "lambda2": enc(self.lambda2)}


# ------------------------------------------------------ fractional integration


@dataclass(frozen=True)
class FracInt(CoefficientSequence):
    """Anticipative fractionally integrated kernel d_k = Gamma(k+d)/(Gamma(d) Gamma(k+1))."""

    d: float
    kind = "fracint"

    @property
    def _finite_order(self) -> Optional[int]:
        if self.d <= 0 and float(self.d).is_integer():
            return int(-self.d)
        return None

    def coeff(self, k):
        ka = np.asarray(k)
        kp = np.maximum(ka, 0).astype(float)
        n = self._finite_order
        if n is not None:
            vals = np.where(kp <= n, poch(self.d, kp) / np.exp(gammaln(kp + 1.0)), 0.0)
        else:
            sign = gammasgn(kp + self.d) * gammasgn(self.d)
            vals = sign * np.exp(gammaln(kp + self.d) - gammaln(self.d) - gammaln(kp + 1.0))
        out = np.where(ka >= 0, vals, 0.0)
        return self._scalar(k, out)

    @property
    def support(self):
        n = self._finite_order
        return (0, n if n is not None else None)

    def check_alpha(self, alpha):
        if not alpha * (self.d - 1.0) < -1.0:
            raise ValueError(f"FracInt requires alpha (d - 1) < -1, got alpha={alpha}, d={self.d}")

    @property
    def summability_exponent(self):
        return 1.0 / (1.0 - self.d) if self._finite_order is None else 0.0

    def tail_upper(self, alpha, K):
        n = self._finite_order
        if n is not None:
            ks = np.arange(max(K + 1, 0), n + 1)
            return float(np.sum(np.abs(self.coeff(ks)) ** alpha)) if ks.size else 0.0
        expo = alpha * (self.d - 1.0)
        if expo >= -1.0:
            return math.inf
        start = max(K + 1, 1)
        head = float(np.abs(self.coeff(0)) ** alpha) if K < 0 else 0.0
        # |d_k| <= c k^{d-1}; for 0 < d < 1 Gautschi's inequality gives c = 1/Gamma(d)
        g = abs(float(self.coeff(start))) * start ** (1.0 - self.d)
        c = max(g, 1.0 / abs(math.gamma(self.d)))
        if not (0.0 < self.d < 1.0):
            c *= 1.05
        tail = c ** alpha * (start ** expo + start ** (expo + 1.0) / (-1.0 - expo))
        return head + tail

    def tail_lower(self, alpha, K):
        return self.tail_upper(alpha, -1) if K > 0 else 0.0

    def m0(self, search_bound=10**6):
        # nonzero for every k >= 0 unless the kernel is a finite polynomial
        return INFINITE if self._finite_order is not None else 0

    def to_dict(self):
        return {"kind": "fracint", "d": self.d}


# ------------------------------------------------------------------- ARMA


def _poly_roots(c: np.ndarray) -> np.ndarray:
    """Roots of sum_i c_i z^i (ascending coefficients)."""
    c = np.trim_zeros(np.asarray(c, dtype=float), "b")
    if c.size <= 1:
        return np.zeros(0, dtype=complex)
    return np.roots(c[::-1])


def _series(num, den, n: int) -> np.ndarray:
    """First n power-series coefficients of num(z)/den(z) (long division)."""
    imp = np.zeros(n)
    imp[0] = 1.0
    return signal.lfilter(num, den, imp)


@dataclass(frozen=True)
class ARMA(CoefficientSequence):
    """Mixed causal/noncausal ARMA psi(F) phi(B) X_t = Theta(F) H(B) eps_t.

    Polynomials are given by ascending coefficients, e.g. ``psi=(1, -0.5)``
    for 1 - 0.5 z.  F is the forward shift (F eps_t = eps_{t+1}).
    """

    psi: tuple
    phi: tuple
    theta: tuple = (1.0,)
    H: tuple = (1.0,)
    kind = "arma"
    _table: tuple = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("psi", "phi", "theta", "H"):
            c = tuple(float(v) for v in np.trim_zeros(np.asarray(getattr(self, name), dtype=float), "b"))
            if not c or c[0] == 0.0:
                raise ValueError(f"ARMA polynomial {name} must have a nonzero constant term")
            object.__setattr__(self, name, c)
            roots = _poly_roots(np.asarray(c))
            if roots.size and np.min(np.abs(roots)) <= 1.0:
                raise ValueError(f"ARMA polynomial {name} must have all roots outside the unit disk")
        for a, b, label in ((self.psi, self.theta, "psi/theta"), (self.phi, self.H, "phi/H")):
            ra, rb = _poly_roots(np.asarray(a)), _poly_roots(np.asarray(b))
            if ra.size and rb.size and np.min(np.abs(ra[:, None] - rb[None, :])) < 1e-8:
                raise ValueError(f"ARMA polynomials {label} share a root (not coprime)")
        object.__setattr__(self, "_table", self._build_table())

    @property
    def deg_psi(self) -> int:
        return len(self.psi) - 1

    def _rate(self, den) -> float:
        roots = _poly_roots(np.asarray(den))
        return 0.0 if roots.size == 0 else float(1.0 / np.min(np.abs(roots)))

    def _length(self, num, den) -> int:
        r = self._rate(den)
        base = len(num) + len(den)
        if r == 0.0:
            return len(num)
        mult = len(den)
        n = base + 8
        # grow until the geometric envelope is far below double precision
        while n * math.log(r) + mult * math.log(n + 1.0) > math.log(1e-22):
            n = int(n * 1.25) + 8
            if n > 5_000_000:
                raise TruncationError("ARMA roots too close to the unit circle")
        return n + base

    def _build_table(self):
        la = self._length(self.theta, self.psi)
        lb = self._length(self.H, self.phi)
        a = _series(self.theta, self.psi, la)
        b = _series(self.H, self.phi, lb)
        # d_k = sum_n a_{k+n} b_n, k from -(lb-1) to la-1
        d = signal.correlate(a, b, mode="full", method="direct")
        d[np.abs(d) < 1e-300] = 0.0
        lo = -(lb - 1)
        return (lo, d)

    def coeff(self, k):
        lo, d = self._table
        ka = np.asarray(k)
        idx = ka - lo
        ok = (idx >= 0) & (idx < d.size)
        out = np.where(ok, d[np.clip(idx, 0, d.size - 1)], 0.0)
        return self._scalar(k, out)

    @property
    def support(self):
        lo = None if len(self.phi) > 1 else -(len(self.H) - 1)
        hi = None if len(self.psi) > 1 else len(self.theta) - 1
        return (lo, hi)

    def _rest(self, alpha, edge_val, r):
        if r == 0.0 or edge_val == 0.0:
            return 0.0
        rr = ((1.0 + r) / 2.0) ** alpha
        return abs(edge_val) ** alpha * rr / (1.0 - rr)

    def tail_upper(self, alpha, K):
        lo, d = self._table
        i = max(K + 1 - lo, 0)
        s = float(np.sum(np.abs(d[i:]) ** alpha)) if i < d.size else 0.0
        return s + self._rest(alpha, d[-1], self._rate(self.psi))

    def tail_lower(self, alpha, K):
        lo, d = self._table
        i = min(max(K - lo, 0), d.size)
        s = float(np.sum(np.abs(d[:i]) ** alpha))
        return s + self._rest(alpha, d[0], self._rate(self.phi))

    def m0(self, search_bound=10**6):
        if self.deg_psi == 0:
            # d_k = 0 for every k > deg(theta): an infinite zero run after the last nonzero
            return INFINITE
        _, d = self._table
        return _max_gap(d, rel_tol=1e-10, local=len(self.psi) + len(self.phi) + 2)

    def to_dict(self):
        return {"kind": "arma", "psi": list(self.psi), "phi": list(self.phi),
                "theta": list(self.theta), "H": list(self.H)}


def _max_gap(d: np.ndarray, rel_tol: float = 0.0, local: int = 0) -> int:
    """Longest run of zeros that directly follows (at higher index) a nonzero entry.

    Entries count as zero when |d_k| <= rel_tol times the local maximum over a
    window of half-width ``local``; runs reaching the end of the array are
    ignored (callers handle the unbounded tail themselves).
    """
    a = np.abs(np.asarray(d, dtype=float))
    if local > 0 and rel_tol > 0:
        from scipy.ndimage import maximum_filter1d

        scale = maximum_filter1d(a, size=2 * local + 1, mode="constant")
        zero = (a <= rel_tol * scale) | (scale < 1e-250)
        negligible = scale < 1e-250
    else:
        zero = a == 0.0
        negligible = np.zeros_like(zero)
    nz = np.flatnonzero(~zero)
    if nz.size < 2:
        return 0
    gaps = np.diff(nz) - 1
    # ignore gaps inside numerically negligible stretches
    keep = np.array([not negligible[nz[i] + 1 : nz[i + 1]].any() for i in range(nz.size - 1)]) if gaps.any() else None
    if keep is not None:
        gaps = gaps[keep]
    return int(gaps.max()) if gaps.size else 0


# --------------------------------------------------------------- strophoid


def _cubic_real_roots(k: np.ndarray, a: float, b: float):
    """Sorted distinct real roots of Pi_k(y) (nan padded) and their count."""
    x2 = np.asarray(k, dtype=float) ** 2
    n = x2.size
    c2 = -a * (b + 3.0)
    c1 = x2 + a * a * (2.0 * b + 3.0)
    c0 = -(a ** 3) * (b + 1.0)
    comp = np.zeros((n, 3, 3))
    comp[:, 0, 0] = -c2
    comp[:, 0, 1] = -c1
    comp[:, 0, 2] = -c0
    comp[:, 1, 0] = 1.0
    comp[:, 2, 1] = 1.0
    roots = np.linalg.eigvals(comp)
    mag = np.maximum(1.0, np.abs(roots))
    real = np.where(np.abs(roots.imag) <= 1e-5 * mag, roots.real, np.inf)
    real.sort(axis=1)
    distinct = np.isfinite(real)
    with np.errstate(invalid="ignore"):
        gap = np.diff(real, axis=1)
    close = np.abs(gap) <= 1e-5 * np.maximum(1.0, np.abs(real[:, 1:]))
    distinct[:, 1:] &= ~close
    # Newton polish on every finite root
    y = np.where(np.isfinite(real), real, 0.0)
    for _ in range(4):
        f = ((y + c2) * y + c1[:, None]) * y + c0
        fp = (3.0 * y + 2.0 * c2) * y + c1[:, None]
        step = np.where(np.abs(fp) > 1e-12 * np.maximum(1.0, np.abs(y)) ** 2, f / np.where(fp == 0, 1, fp), 0.0)
        y_new = y - step
        f_new = ((y_new + c2) * y_new + c1[:, None]) * y_new + c0
        y = np.where(np.abs(f_new) < np.abs(f), y_new, y)
    real = np.where(np.isfinite(real), y, np.nan)
    return real, distinct


def strophoid_coeffs(a: float, b: float, seed: int, k):
    """Real root of Pi_k(y) = y^3 - a(b+3) y^2 + (k^2 + a^2(2b+3)) y - a^3(b+1).

    The root is picked uniformly among the distinct real roots with a
    counter-based hash of (seed, k), so the sequence is fixed once the seed is.
    """
    if not (a > 0 and b > 0):
        raise ValueError("strophoid requires a > 0 and b > 0")
    ka = np.atleast_1d(np.asarray(k, dtype=np.int64))
    real, distinct = _cubic_real_roots(ka, a, b)
    count = distinct.sum(axis=1)
    zig = np.where(ka >= 0, 2 * ka, -2 * ka - 1).astype(np.uint64)
    key = _splitmix64(_splitmix64(np.full(ka.shape, np.uint64(seed & 0xFFFFFFFFFFFFFFFF))) ^ zig)
    pick = (key % count.astype(np.uint64)).astype(np.int64)
    rank = np.cumsum(distinct, axis=1) - 1
    sel = distinct & (rank == pick[:, None])
    out = real[sel]
    return float(out[0]) if np.ndim(k) == 0 else out


@dataclass(frozen=True)
class Strophoid(CoefficientSequence):
    """Two-sided kernel built from the real roots of the strophoid cubic."""

    a: float
    b: float
    seed: int = 0
    kind = "strophoid"

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("strophoid requires a > 0 and b > 0")

    def coeff(self, k):
        return strophoid_coeffs(self.a, self.b, self.seed, k)

    @property
    def support(self):
        return (None, None)

    def check_alpha(self, alpha):
        if not 2.0 * alpha > 1.0:
            raise ValueError("strophoid kernel decays like k^-2 and needs alpha > 1/2")

    @property
    def summability_exponent(self):
        return 0.5

    def _c(self):
        return self.a ** 3 * (self.b + 1.0)

    def _single_root_from(self) -> int:
        # beyond this |k| the cubic has one real root, of size <= a^3(b+1)/k^2
        return int(math.ceil(self.a * (self.b + 3.0))) + 1

    def _envelope(self, alpha, start):
        # sum_{k >= start} (c / k^2)^alpha for start >= 1
        expo = 2.0 * alpha
        return self._c() ** alpha * (start ** -expo + start ** (1.0 - expo) / (expo - 1.0))

    def tail_upper(self, alpha, K):
        k1 = self._single_root_from()
        head = 0.0
        if K + 1 < k1:
            ks = np.arange(K + 1, k1)
            head = float(np.sum(np.abs(self.coeff(ks)) ** alpha))
        return head + self._envelope(alpha, max(K + 1, k1))

    def tail_lower(self, alpha, K):
        k1 = self._single_root_from()
        head = 0.0
        if K - 1 > -k1:
            ks = np.arange(-k1 + 1, K)
            head = float(np.sum(np.abs(self.coeff(ks)) ** alpha))
        return head + self._envelope(alpha, max(1 - K, k1))

    def m0(self, search_bound=10**6):
        # the constant term -a^3(b+1) never vanishes, so d_k != 0 for every k
        return 0

    def to_dict(self):
        return {"kind": "strophoid", "a": self.a, "b": self.b, "seed": self.seed}


# ---------------------------------------------------------------- explicit


@dataclass(frozen=True, init=False)
class Explicit(CoefficientSequence):
    """Explicit finite kernel, optionally continued by a geometric forward tail.

    With ``tail_ratio=r`` the coefficients beyond the largest key continue as
    d_{K+i} = d_K r^i, which keeps the sequence anticipative.
    """

    coeffs: tuple
    tail_ratio: Optional[float] = None
    kind = "explicit"

    def __init__(self, coeffs, tail_ratio=None):
        items = coeffs.items() if isinstance(coeffs, dict) else coeffs
        clean = tuple(sorted((int(k), float(v)) for k, v in items))
        if len({k for k, _ in clean}) != len(clean):
            raise ValueError("duplicate indices in explicit coefficients")
        if not any(v != 0.0 for _, v in clean):
            raise ValueError("explicit kernel must have at least one nonzero coefficient")
        if tail_ratio is not None and not (0.0 < abs(tail_ratio) < 1.0):
            raise ValueError("tail_ratio must satisfy 0 < |r| < 1")
        if tail_ratio is not None and clean[-1][1] == 0.0:
            raise ValueError("a geometric tail needs a nonzero last coefficient")
        object.__setattr__(self, "coeffs", clean)
        object.__setattr__(self, "tail_ratio", None if tail_ratio is None else float(tail_ratio))

    @property
    def _lo(self):
        return self.coeffs[0][0]

    @property
    def _hi(self):
        return self.coeffs[-1][0]

    def _dense(self):
        lo, hi = self._lo, self._hi
        arr = np.zeros(hi - lo + 1)
        for k, v in self.coeffs:
            arr[k - lo] = v
        return lo, arr

    def coeff(self, k):
        lo, arr = self._dense()
        ka = np.asarray(k)
        idx = ka - lo
        ok = (idx >= 0) & (idx < arr.size)
        out = np.where(ok, arr[np.clip(idx, 0, arr.size - 1)], 0.0)
        if self.tail_ratio is not None:
            beyond = ka > self._hi
            steps = np.maximum(ka - self._hi, 0).astype(float)
            out = np.where(beyond, arr[-1] * self.tail_ratio ** steps, out)
        return self._scalar(k, out)

    @property
    def support(self):
        return (self._lo, None if self.tail_ratio is not None else self._hi)

    def tail_upper(self, alpha, K):
        lo, arr = self._dense()
        i = max(K + 1 - lo, 0)
        s = float(np.sum(np.abs(arr[i:]) ** alpha)) if i < arr.size else 0.0
        if self.tail_ratio is not None:
            ra = abs(self.tail_ratio) ** alpha
            first = max(K + 1 - self._hi, 1)
            s += abs(arr[-1]) ** alpha * ra ** first / (1.0 - ra)
        return s

    def tail_lower(self, alpha, K):
        lo, arr = self._dense()
        i = min(max(K - lo, 0), arr.size)
        s = float(np.sum(np.abs(arr[:i]) ** alpha))
        n = K - self._hi - 1
        if self.tail_ratio is not None and n > 0:
            # geometric terms hi+1 .. K-1
            ra = abs(self.tail_ratio) ** alpha
            s += abs(arr[-1]) ** alpha * ra * (1.0 - ra ** n) / (1.0 - ra)
        return s

    def m0(self, search_bound=10**6):
        lo, arr = self._dense()
        if arr.size > search_bound:
            raise ValueError("explicit support exceeds search_bound")
        if self.tail_ratio is None:
            # the last nonzero coefficient is followed by zeros forever
            return INFINITE
        return _max_gap(arr)

    def to_dict(self):
        return {"kind": "explicit", "coeffs": {str(k): v for k, v in self.coeffs}, "tail_ratio": self.tail_ratio}


def sequence_from_dict(d: dict) -> CoefficientSequence:
    kind = d["kind"]
    if kind == "ar1":
        return AR1(float(d["rho"]), bool(d.get("anticipative", True)))
    if kind == "ar2":
        return AR2(d["lambda1"], d["lambda2"])
    if kind == "fracint":
        return FracInt(float(d["d"]))
    if kind == "arma":
        return ARMA(tuple(d["psi"]), tuple(d["phi"]), tuple(d.get("theta", (1.0,))), tuple(d.get("H", (1.0,))))
    if kind == "strophoid":
        return Strophoid(float(d["a"]), float(d["b"]), int(d.get("seed", 0)))
    if kind == "explicit":
        return Explicit({int(k): float(v) for k, v in d["coeffs"].items()}, d.get("tail_ratio"))
    raise ValueError(f"unknown coefficient kind {kind!r}")


def coeff(seq: CoefficientSequence, k):
    return seq.coeff(k)


# ---------------------------------------------------------------- aggregate


@dataclass(frozen=True)
class Component:
    pi: float
    seq: CoefficientSequence
    beta: float = 0.0

    def __post_init__(self):
        if not (self.pi > 0):
            raise ValueError(f"component weight pi must be positive, got {self.pi}")
        if not (-1.0 <= self.beta <= 1.0):
            raise ValueError(f"component beta must lie in [-1, 1], got {self.beta}")


@dataclass(frozen=True)
class Aggregate:
    """Positive combination of independent stable moving averages sharing alpha."""

    alpha: float
    components: tuple

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0):
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        comps = tuple(self.components)
        if not comps:
            raise ValueError("an aggregate needs at least one component")
        for c in comps:
            if not isinstance(c, Component):
                raise TypeError("components must be Component instances")
            c.seq.check_alpha(self.alpha)
        object.__setattr__(self, "components", comps)

    @classmethod
    def single(cls, alpha: float, seq: CoefficientSequence, beta: float = 0.0, pi: float = 1.0) -> "Aggregate":
        return cls(alpha, (Component(pi, seq, beta),))

    @property
    def J(self) -> int:
        return len(self.components)

    @property
    def symmetric(self) -> bool:
        return all(c.beta == 0.0 for c in self.components)

    def component(self, j: int) -> Component:
        """Component j, numbered from 1 (0 is reserved for the spike pattern)."""
        if not 1 <= j <= self.J:
            raise IndexError(f"component index {j} outside 1..{self.J}")
        return self.components[j - 1]

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "components": [
                {**c.seq.to_dict(), "pi": c.pi, "beta": c.beta} for c in self.components
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Aggregate":
        comps = []
        for c in d["components"]:
            c = dict(c)
            pi = float(c.pop("pi", 1.0))
            beta = float(c.pop("beta", 0.0))
            comps.append(Component(pi, sequence_from_dict(c), beta))
        return cls(float(d["alpha"]), tuple(comps))


@dataclass(frozen=True)
class PathKernel:
    j: int
    k: int
    vector: np.ndarray


def kernel_windows(seq: CoefficientSequence, ks, m: int, h: int) -> np.ndarray:
    """Rows d_k = (d_{k+m}, ..., d_k, d_{k-1}, ..., d_{k-h}) for each k in ks."""
    ks = np.asarray(ks, dtype=np.int64)
    offsets = np.arange(m, -h - 1, -1, dtype=np.int64)
    idx = ks[:, None] + offsets[None, :]
    lo, hi = int(idx.min()), int(idx.max())
    table = np.asarray(seq.coeff(np.arange(lo, hi + 1)), dtype=float)
    return table[idx - lo]


def path_kernel(agg: Aggregate, j: int, k: int, m: int, h: int) -> PathKernel:
    if m < 0 or h < 1:
        raise ValueError("path kernels need m >= 0 and h >= 1")
    seq = agg.component(j).seq
    return PathKernel(j, int(k), kernel_windows(seq, [k], m, h)[0])


# ---------------------------------------------------------------- truncation


def _extent(bound, tol: float, limit: int) -> Optional[int]:
    """Smallest n in [0, limit] with bound(n) < tol (bound non-increasing), else None."""
    if bound(0) < tol:
        return 0
    lo, step = 0, 1
    while True:
        n = step
        if n > limit:
            if bound(limit) < tol:
                n = limit
                break
            return None
        if bound(n) < tol:
            break
        lo = n
        step *= 2
    hi = n
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if bound(mid) < tol:
            hi = mid
        else:
            lo = mid
    return hi


def truncation_range(seq: CoefficientSequence, alpha: float, policy: TruncationPolicy, pad: int = 0):
    """Index range [lo, hi] with discarded alpha-mass below ``policy.tol``.

    ``pad`` multiplies the tail bound (path kernels of width m+h+1 see every
    coefficient up to that many times).  Returns (lo, hi, omitted_bound).
    """
    mult = max(pad, 1)
    slo, shi = seq.support
    half = policy.tol / 2.0
    budget = policy.max_terms
    up_base = shi if shi is not None else 0
    lo_base = slo if slo is not None else 0
    if shi is not None and slo is not None:
        return slo, shi, 0.0
    up = 0 if shi is not None else _extent(lambda n: mult * seq.tail_upper(alpha, up_base + n), half, budget)
    dn = 0 if slo is not None else _extent(lambda n: mult * seq.tail_lower(alpha, lo_base - n), half, budget)
    if up is not None and dn is not None and (up_base + up) - (lo_base - dn) + 1 <= budget:
        hi, lo = up_base + up, lo_base - dn
        omitted = mult * (seq.tail_upper(alpha, hi) + seq.tail_lower(alpha, lo))
        return lo, hi, omitted
    if policy.strict:
        raise TruncationError(
            f"{seq.kind} kernel: tolerance {policy.tol:g} on the discarded alpha-mass "
            f"needs more than max_terms={policy.max_terms} coefficients"
        )
    span = budget - 1
    if slo is None and shi is None:
        lo, hi = -(span // 2), span - span // 2
    elif shi is None:
        lo, hi = lo_base, lo_base + span
    else:
        lo, hi = up_base - span, up_base
    omitted = mult * (seq.tail_upper(alpha, hi) + seq.tail_lower(alpha, lo))
    return lo, hi, omitted


# ---------------------------------------------------------------- simulation


def _filter(noise: np.ndarray, d: np.ndarray) -> np.ndarray:
    """X_t = sum_i d[i] noise[t + i] (valid part)."""
    if d.size <= 64:
        return np.correlate(noise, d, mode="valid")
    return signal.oaconvolve(noise, d[::-1], mode="valid")


def simulate(
    agg: Aggregate,
    T: int,
    truncation: TruncationPolicy = TruncationPolicy(),
    seed: int = 0,
    return_components: bool = False,
):
    """Simulate T consecutive values of the aggregate.

    Each component uses its own noise stream spawned from ``seed`` and a
    kernel truncated so that its discarded alpha-mass stays below the
    policy tolerance.  With ``return_components`` the per-component series
    pi_j X_{j,t} are returned as a (J, T) array as well.
    """
    if T < 1:
        raise ValueError("T must be positive")
    streams = np.random.SeedSequence(seed).spawn(agg.J)
    total = np.zeros(T)
    parts = []
    for comp, ss in zip(agg.components, streams):
        lo, hi, _ = truncation_range(comp.seq, agg.alpha, truncation)
        d = np.asarray(comp.seq.coeff(np.arange(lo, hi + 1)), dtype=float)
        rng = np.random.default_rng(ss)
        eps = sample_standard(agg.alpha, comp.beta, T + hi - lo, rng)
        x = comp.pi * _filter(eps, d)
        total += x
        if return_components:
            parts.append(x)
    if return_components:
        return total, np.vstack(parts)
    return total
