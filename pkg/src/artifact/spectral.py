"""Discrete spectral measures of path vectors and representability checks."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .model import (
    INFINITE,
    Aggregate,
    CoefficientSequence,
    Explicit,
    TruncationPolicy,
    kernel_windows,
    truncation_range,
)
from .seminorm import SemiNorm
from .stable_core import _abs_pow_skew

__all__ = [
    "NotRepresentable",
    "LogConditionFail",
    "DiscreteSpectralMeasure",
    "Verdict",
    "euclidean_spectral_measure",
    "cylinder_spectral_measure",
    "to_cylinder",
    "to_sphere",
    "merge_atoms",
    "compute_m0",
    "is_past_representable",
]

SPHERE = "sphere"


class NotRepresentable(ValueError):
    """The measure charges the kernel of the semi-norm."""

    def __init__(self, message, atom=None, label=None):
        super().__init__(message)
        self.atom = atom
        self.label = label


class LogConditionFail(NotRepresentable):
    """alpha = 1, asymmetric case: the log-integrability sum diverges."""


@dataclass
class DiscreteSpectralMeasure:
    """Finite atomic measure on the Euclidean sphere or on a semi-norm cylinder.

    ``labels`` optionally holds one (theta, j, k) integer triple per atom.
    """

    points: np.ndarray
    weights: np.ndarray
    alpha: float
    support: Union[str, SemiNorm] = SPHERE
    shift: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None
    omitted_mass: float = 0.0

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if self.points.shape[0] != self.weights.size:
            raise ValueError("points and weights disagree in length")
        if np.any(self.weights <= 0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("atom weights must be finite and strictly positive")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1, 3)
        if self.shift is not None:
            self.shift = np.asarray(self.shift, dtype=float).reshape(-1)
        nrm = self.support_norm(self.points)
        if nrm.size and np.max(np.abs(nrm - 1.0)) > 1e-9:
            raise ValueError("atoms must lie on the declared support")

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @property
    def n_atoms(self) -> int:
        return self.weights.size

    @property
    def on_sphere(self) -> bool:
        return isinstance(self.support, str)

    def support_norm(self, x):
        x = np.asarray(x, dtype=float)
        if self.on_sphere:
            return np.sqrt((x * x).sum(axis=-1))
        return self.support.evaluate(x)

    def total_mass(self) -> float:
        return float(self.weights.sum())

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        """Closed under negation with equal weights."""
        if self.n_atoms == 0:
            return True
        tree = cKDTree(self.points)
        dist, idx = tree.query(-self.points, p=np.inf)
        if np.any(dist > tol):
            return False
        return bool(np.allclose(self.weights[idx], self.weights, rtol=1e-10, atol=0.0))

    def exponent(self, u):
        """int |<u, s>|^alpha Gamma(ds) for each row of u."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        proj = u @ self.points.T
        return (np.abs(proj) ** self.alpha) @ self.weights

    def log_char_fn(self, u):
        """log E exp(i<u, X>) for the stable vector represented by the measure."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        proj = u @ self.points.T
        mag, skew = _abs_pow_skew(self.alpha, proj)
        out = -(mag @ self.weights) - 1j * (skew @ self.weights)
        if self.shift is not None:
            out = out + 1j * (u @ self.shift)
        return out

    # ------------------------------------------------------------ export

    def to_dict(self) -> dict:
        sup = {"type": SPHERE} if self.on_sphere else {"type": "cylinder", **self.support.to_dict()}
        atoms = []
        for i in range(self.n_atoms):
            a = {"point": [float(v) for v in self.points[i]], "weight": float(self.weights[i])}
            if self.labels is not None:
                t, j, k = (int(v) for v in self.labels[i])
                a.update(theta=t, j=j, k=k)
            atoms.append(a)
        return {
            "alpha": self.alpha,
            "dimension": self.dimension,
            "support": sup,
            "shift": None if self.shift is None else [float(v) for v in self.shift],
            "omitted_mass": float(self.omitted_mass),
            "atoms": atoms,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DiscreteSpectralMeasure":
        sup = d["support"]
        support = SPHERE if sup["type"] == SPHERE else SemiNorm.from_dict(sup)
        atoms = d["atoms"]
        pts = np.array([a["point"] for a in atoms], dtype=float).reshape(len(atoms), d["dimension"])
        w = np.array([a["weight"] for a in atoms], dtype=float)
        labels = None
        if atoms and "theta" in atoms[0]:
            labels = np.array([[a["theta"], a["j"], a["k"]] for a in atoms], dtype=np.int64)
        shift = None if d.get("shift") is None else np.array(d["shift"], dtype=float)
        return cls(pts, w, float(d["alpha"]), support, shift, labels, float(d.get("omitted_mass", 0.0)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def csv_rows(self):
        header = [f"s{i}" for i in range(self.dimension)] + ["weight"]
        if self.labels is not None:
            header += ["theta", "j", "k"]
        rows = []
        for i in range(self.n_atoms):
            row = [repr(float(v)) for v in self.points[i]] + [repr(float(self.weights[i]))]
            if self.labels is not None:
                row += [str(int(v)) for v in self.labels[i]]
            rows.append(row)
        return header, rows


def merge_atoms(points, weights, labels=None, tol: float = 1e-12):
    """Merge atoms whose points agree within ``tol`` in sup-distance.

    Merged labels keep the smallest k; theta follows that representative and
    j becomes 0 when the merged atoms come from different components.
    Atoms equal to +-(1, 0, ..., 0), the pure spike, always get j = 0.
    """
    points = np.asarray(points, dtype=float)
    weights = np.asarray(weights, dtype=float)
    n = weights.size
    if n == 0:
        return points, weights, labels
    pairs = cKDTree(points).query_pairs(r=tol, p=np.inf, output_type="ndarray")
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n)) if len(pairs) else coo_matrix((n, n))
    ncomp, comp = connected_components(graph, directed=False)
    w = np.bincount(comp, weights=weights, minlength=ncomp)
    # representative: smallest k within each group (labels) or first index
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64)
        order = np.lexsort((np.arange(n), labels[:, 2], comp))
    else:
        order = np.lexsort((np.arange(n), comp))
    first = np.ones(n, dtype=bool)
    first[1:] = comp[order][1:] != comp[order][:-1]
    rep = order[first]
    pts = points[rep]
    out_labels = None
    if labels is not None:
        out_labels = labels[rep].copy()
        jmin = np.full(ncomp, np.iinfo(np.int64).max)
        jmax = np.full(ncomp, np.iinfo(np.int64).min)
        np.minimum.at(jmin, comp, labels[:, 1])
        np.maximum.at(jmax, comp, labels[:, 1])
        out_labels[jmin != jmax, 1] = 0
        spike = (np.abs(np.abs(pts[:, 0]) - 1.0) <= tol) & (np.abs(pts[:, 1:]).max(axis=1, initial=0.0) <= tol)
        out_labels[spike, 1] = 0
        key = np.lexsort((-out_labels[:, 0], out_labels[:, 2], out_labels[:, 1]))
        return pts[key], w[key], out_labels[key]
    return pts, w, None


def euclidean_spectral_measure(
    agg: Aggregate,
    m: int,
    h: int,
    trunc: TruncationPolicy = TruncationPolicy(),
    dedup_tol: float = 1e-12,
) -> DiscreteSpectralMeasure:
    """Spectral measure of (X_{t-m}, ..., X_{t+h}) on the Euclidean unit sphere.

    Atoms sit at +-d_{j,k}/||d_{j,k}||_e with weight w_{j,theta} pi_j^alpha
    ||d_{j,k}||_e^alpha, w_{j,theta} = (1 + theta beta_j)/2.  The kernel range
    is truncated so that the omitted mass stays below ``trunc.tol``; for
    alpha = 1 the shift vector of the representation is filled in.
    """
    if m < 0 or h < 1:
        raise ValueError("need m >= 0 and h >= 1")
    alpha = agg.alpha
    dim = m + h + 1
    pts, wts, labs = [], [], []
    shift = np.zeros(dim)
    omitted = 0.0
    for j, comp in enumerate(agg.components, start=1):
        scale = comp.pi ** alpha
        pol = TruncationPolicy(trunc.tol / (agg.J * scale), trunc.max_terms, trunc.strict)
        lo, hi, om = truncation_range(comp.seq, alpha, pol, pad=dim)
        omitted += scale * om
        ks = np.arange(lo - m, hi + h + 1, dtype=np.int64)
        win = kernel_windows(comp.seq, ks, m, h)
        nrm = np.sqrt((win * win).sum(axis=1))
        keep = nrm > 0
        ks, win, nrm = ks[keep], win[keep], nrm[keep]
        unit = win / nrm[:, None]
        base = scale * nrm ** alpha
        for theta in (1, -1):
            wt = 0.5 * (1.0 + theta * comp.beta)
            if wt == 0.0:
                continue
            pts.append(theta * unit)
            wts.append(wt * base)
            labs.append(np.column_stack([np.full(ks.size, theta), np.full(ks.size, j), ks]))
        if alpha == 1.0 and comp.beta != 0.0:
            shift -= (2.0 / math.pi) * comp.pi * comp.beta * (win * np.log(comp.pi * nrm)[:, None]).sum(axis=0)
    points = np.vstack(pts) if pts else np.zeros((0, dim))
    weights = np.concatenate(wts) if wts else np.zeros(0)
    labels = np.vstack(labs) if labs else np.zeros((0, 3), dtype=np.int64)
    points, weights, labels = merge_atoms(points, weights, labels, dedup_tol)
    return DiscreteSpectralMeasure(
        points, weights, alpha, SPHERE, shift if alpha == 1.0 else None, labels, omitted
    )


def to_cylinder(measure: DiscreteSpectralMeasure, sn: SemiNorm, kernel_tol: float = 1e-14) -> DiscreteSpectralMeasure:
    """Push a sphere measure to the unit cylinder of ``sn``.

    Each atom s with weight w moves to s/||s|| with weight w ||s||^alpha; for
    alpha = 1 the shift gains -(2/pi) int s ln||s|| Gamma(ds) so that the
    characteristic function is unchanged.
    """
    if not measure.on_sphere:
        raise ValueError("to_cylinder expects a measure on the Euclidean sphere")
    if measure.dimension != sn.dim:
        raise ValueError("semi-norm dimension does not match the measure")
    nrm = sn.evaluate(measure.points)
    bad = np.flatnonzero(nrm <= kernel_tol)
    if bad.size:
        i = int(bad[0])
        label = None if measure.labels is None else tuple(int(v) for v in measure.labels[i])
        raise NotRepresentable(
            f"atom {measure.points[i].tolist()} (label {label}) lies in the kernel of the semi-norm",
            atom=measure.points[i],
            label=label,
        )
    alpha = measure.alpha
    pts = measure.points / nrm[:, None]
    w = measure.weights * nrm ** alpha
    shift = measure.shift
    if alpha == 1.0 and shift is not None:
        shift = shift - (2.0 / math.pi) * (measure.weights * np.log(nrm)) @ measure.points
    return DiscreteSpectralMeasure(pts, w, alpha, sn, shift, measure.labels, measure.omitted_mass)


def to_sphere(measure: DiscreteSpectralMeasure) -> DiscreteSpectralMeasure:
    """Inverse of :func:`to_cylinder`."""
    if measure.on_sphere:
        return measure
    e = np.sqrt((measure.points ** 2).sum(axis=1))
    pts = measure.points / e[:, None]
    w = measure.weights * e ** measure.alpha
    shift = measure.shift
    if measure.alpha == 1.0 and shift is not None:
        sn_of_sphere = 1.0 / e
        shift = shift + (2.0 / math.pi) * (w * np.log(sn_of_sphere)) @ pts
    return DiscreteSpectralMeasure(pts, w, measure.alpha, SPHERE, shift, measure.labels, measure.omitted_mass)


# ---------------------------------------------------------------- m0 and representability


def compute_m0(seq: CoefficientSequence, search_bound: int = 10**6):
    """Largest gap length m in {m >= 1: d_{k+m} = ... = d_{k+1} = 0 != d_k}, 0 if none."""
    return seq.m0(search_bound)


@dataclass
class Verdict:
    ok: bool
    reason: str
    m0: list = field(default_factory=list)

    def __bool__(self):
        return self.ok

    @property
    def required_m(self):
        return max(self.m0) if self.m0 else 0

    def to_dict(self) -> dict:
        enc = [("inf" if v == INFINITE else int(v)) for v in self.m0]
        req = self.required_m
        return {"representable": self.ok, "reason": self.reason, "m0": enc,
                "required_m": "inf" if req == INFINITE else int(req)}


def _log_condition(seq: CoefficientSequence, m: int, h: int) -> bool:
    """sum_k ||d_k||_e |ln(||d_k|| / ||d_k||_e)| < inf (alpha = 1, asymmetric).

    Every analytic kind has kernels whose norm ratio converges to a positive
    limit along both tails, so the series is dominated by sum ||d_k||_e.  An
    explicit kernel with a geometric tail behaves the same way beyond its
    table, which leaves a finite check.
    """
    if isinstance(seq, Explicit):
        lo, _ = seq.support
        ks = np.arange(lo - m, seq._hi + h + 1)
        win = kernel_windows(seq, ks, m, h)
        e = np.sqrt((win ** 2).sum(axis=1))
        s = np.sqrt((win[:, : m + 1] ** 2).sum(axis=1))
        live = e > 0
        return bool(np.all(s[live] > 0))
    return True


def is_past_representable(agg: Aggregate, m: int, h: int) -> Verdict:
    """(m, h)-past-representability of the aggregate path vector."""
    if m < 0 or h < 1:
        raise ValueError("need m >= 0 and h >= 1")
    m0s = [compute_m0(c.seq) for c in agg.components]
    for j, (c, v) in enumerate(zip(agg.components, m0s), start=1):
        if v == INFINITE:
            return Verdict(
                False,
                f"component {j} ({c.seq.kind}) has m0 = inf: an unbounded run of zero "
                "coefficients follows its last nonzero one, so extremes can appear "
                "without warning and no m makes the path representable",
                m0s,
            )
    need = max(m0s)
    if m < need:
        return Verdict(False, f"not past-representable: m = {m} < m0 = {need} (need m >= m0)", m0s)
    if agg.alpha == 1.0 and not agg.symmetric:
        for j, c in enumerate(agg.components, start=1):
            if c.beta != 0.0 and not _log_condition(c.seq, m, h):
                return Verdict(False, f"component {j}: log-integrability condition fails for alpha = 1", m0s)
    return Verdict(True, f"representable: m = {m} >= m0 = {need}", m0s)


def cylinder_spectral_measure(
    agg: Aggregate,
    sn: SemiNorm,
    trunc: TruncationPolicy = TruncationPolicy(),
    dedup_tol: float = 1e-12,
) -> DiscreteSpectralMeasure:
    """Spectral measure of the path vector on the unit cylinder of ``sn``."""
    verdict = is_past_representable(agg, sn.m, sn.h)
    if not verdict:
        raise NotRepresentable(verdict.reason)
    sphere = euclidean_spectral_measure(agg, sn.m, sn.h, trunc, dedup_tol)
    return to_cylinder(sphere, sn)
