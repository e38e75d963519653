"""Tail-conditional path distributions.

Given that the semi-norm of the path vector is large and its observed part
points in some direction V0, the future path concentrates on a few pattern
atoms theta d_{j,k} / ||d_{j,k}||.  The limiting probabilities are ratios of
spectral masses; this module computes them generically from a cylinder
measure and in closed form for aggregates of anticipative AR(1) processes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from .model import AR1, Aggregate, Component, TruncationPolicy, kernel_windows
from .seminorm import KernelVector, SemiNorm
from .spectral import DiscreteSpectralMeasure, cylinder_spectral_measure

__all__ = [
    "ZeroConditioningMass",
    "NoMatch",
    "PatternAtom",
    "PatternDistribution",
    "Match",
    "conditional_ratio",
    "match_pattern",
    "predict",
    "aggar1_closed_form",
]

Predicate = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


class ZeroConditioningMass(ValueError):
    """The conditioning set carries no spectral mass."""


class NoMatch(ZeroConditioningMass):
    """No atom matches the observed pattern within tolerance."""


@dataclass(frozen=True)
class PatternAtom:
    theta: int
    j: int
    k: int
    point: tuple
    weight: float

    @property
    def key(self):
        return (self.theta, self.j, self.k)


@dataclass
class PatternDistribution:
    """Probabilities over pattern atoms plus a description of the conditioning."""

    entries: list
    m: int
    conditioning: dict = field(default_factory=dict)

    def probabilities(self) -> dict:
        return {a.key: p for a, p in self.entries}

    def total(self) -> float:
        return float(sum(p for _, p in self.entries))

    def is_degenerate(self, tol: float = 1e-12) -> bool:
        return any(p >= 1.0 - tol for _, p in self.entries)

    def modal(self) -> PatternAtom:
        return max(self.entries, key=lambda e: e[1])[0]

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "conditioning": self.conditioning,
            "entries": [
                {"theta": a.theta, "j": a.j, "k": a.k, "point": [float(v) for v in a.point],
                 "weight": float(a.weight), "probability": float(p)}
                for a, p in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PatternDistribution":
        entries = [
            (PatternAtom(int(e["theta"]), int(e["j"]), int(e["k"]), tuple(float(v) for v in e["point"]),
                         float(e["weight"])), float(e["probability"]))
            for e in d["entries"]
        ]
        return cls(entries, int(d["m"]), d.get("conditioning", {}))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def csv_rows(self):
        h = len(self.entries[0][0].point) - self.m - 1 if self.entries else 0
        header = ["theta", "j", "k", "probability"] + [f"future_{i}" for i in range(1, h + 1)]
        rows = []
        for a, p in self.entries:
            rows.append([str(a.theta), str(a.j), str(a.k), repr(float(p))]
                        + [repr(float(v)) for v in a.point[self.m + 1:]])
        return header, rows


def _mask(pred: Predicate, measure: DiscreteSpectralMeasure) -> np.ndarray:
    if callable(pred):
        out = np.asarray(pred(measure.points), dtype=bool)
    else:
        out = np.asarray(pred, dtype=bool)
    if out.shape != (measure.n_atoms,):
        raise ValueError("predicate must yield one boolean per atom")
    return out


def conditional_ratio(measure: DiscreteSpectralMeasure, A: Predicate, B: Predicate) -> float:
    """Gamma(A and B) / Gamma(B) over the atoms of a cylinder measure.

    Predicates are boolean masks over the atoms or callables mapping the
    (n, d) array of atom points to such a mask.
    """
    a = _mask(A, measure)
    b = _mask(B, measure)
    den = float(measure.weights[b].sum())
    if den <= 0.0:
        raise ZeroConditioningMass("the conditioning set has zero spectral mass")
    return float(measure.weights[a & b].sum()) / den


@dataclass
class Match:
    normalized: np.ndarray
    indices: np.ndarray
    classes: list


def match_pattern(observed, measure: DiscreteSpectralMeasure, sn: SemiNorm, tol: float = 1e-6) -> Match:
    """Atoms whose observed block is within ``tol`` (sup-distance) of the normalized observation.

    Matched atoms sharing the same observed block form one class.
    """
    obs = np.asarray(observed, dtype=float).reshape(-1)
    if obs.size != sn.m + 1:
        raise ValueError(f"observed window must have length m + 1 = {sn.m + 1}")
    nrm = float(sn.norm_observed(obs))
    if nrm == 0.0:
        raise KernelVector("observed window has zero semi-norm")
    z = obs / nrm
    f = measure.points[:, : sn.m + 1]
    dist = np.abs(f - z[None, :]).max(axis=1)
    idx = np.flatnonzero(dist <= tol)
    if idx.size == 0:
        raise NoMatch("observed pattern matches no atom of the spectral measure")
    fb = f[idx]
    groups = cKDTree(fb).query_ball_point(fb, r=1e-10, p=np.inf)
    seen, classes = set(), []
    for i, g in enumerate(groups):
        if i in seen:
            continue
        members = sorted(set(g))
        seen.update(members)
        classes.append(idx[members])
    return Match(z, idx, classes)


def _atom(measure, i, sign_label=True) -> PatternAtom:
    t, j, k = (int(v) for v in measure.labels[i])
    return PatternAtom(t, j, k, tuple(float(v) for v in measure.points[i]), float(measure.weights[i]))


def predict(
    agg: Optional[Aggregate],
    sn: SemiNorm,
    observed,
    tol: float = 1e-6,
    trunc: TruncationPolicy = TruncationPolicy(tol=1e-12),
    measure: Optional[DiscreteSpectralMeasure] = None,
) -> PatternDistribution:
    """Limit law of the normalized path given the observed window.

    Conditions on the union of every matched class; the per-class
    conditional laws are reported in ``conditioning['classes']``.
    ``measure`` may carry a prebuilt cylinder measure (it must have labels).
    """
    if measure is None:
        measure = cylinder_spectral_measure(agg, sn, trunc)
    if measure.labels is None:
        raise ValueError("prediction needs a labelled measure")
    match = match_pattern(observed, measure, sn, tol)
    w = measure.weights
    total = float(w[match.indices].sum())
    order = sorted(match.indices.tolist(), key=lambda i: (int(measure.labels[i, 1]), int(measure.labels[i, 2]), -int(measure.labels[i, 0])))
    entries = [(_atom(measure, i), float(w[i]) / total) for i in order]
    classes = []
    for cls in match.classes:
        mass = float(w[cls].sum())
        classes.append({
            "observed_part": [float(v) for v in measure.points[cls[0], : sn.m + 1]],
            "mass": mass,
            "probability": mass / total,
            "conditional": [
                {"theta": int(measure.labels[i, 0]), "j": int(measure.labels[i, 1]),
                 "k": int(measure.labels[i, 2]), "probability": float(w[i]) / mass}
                for i in sorted(cls.tolist(), key=lambda i: (int(measure.labels[i, 1]), int(measure.labels[i, 2]), -int(measure.labels[i, 0])))
            ],
        })
    cond = {
        "observed": [float(v) for v in np.asarray(observed, dtype=float).reshape(-1)],
        "normalized": [float(v) for v in match.normalized],
        "tol": tol,
        "n_classes": len(classes),
        "classes": classes,
    }
    return PatternDistribution(entries, sn.m, cond)


# ---------------------------------------------------------------- closed forms


def aggar1_closed_form(
    rhos: Sequence[float],
    pis: Sequence[float],
    betas: Sequence[float],
    alpha: float,
    m: int,
    h: int,
    case: tuple,
    p: float = 2.0,
) -> PatternDistribution:
    """Closed-form limit law for aggregates of anticipative AR(1), 0 < rho_j < 1.

    ``case`` is (theta0, j0, k0) with j0 numbered from 1.  For m >= 1 and
    k0 >= 0 the law spreads over the peak dates k = 0..h of component j0;
    for -m <= k0 <= -1 it is a point mass; for m = 0 only theta0 matters.
    """
    rhos = [float(r) for r in rhos]
    if any(not (0.0 < r < 1.0) for r in rhos):
        raise ValueError("the closed form requires every rho_j in (0, 1)")
    if not (len(rhos) == len(pis) == len(betas)):
        raise ValueError("rhos, pis and betas must have equal length")
    theta0, j0, k0 = (int(v) for v in case)
    if theta0 not in (-1, 1):
        raise ValueError("theta0 must be +1 or -1")
    sn = SemiNorm(m, h, p)
    J = len(rhos)
    wts = [0.5 * (1.0 + theta0 * b) for b in betas]

    def window(j, k):
        return kernel_windows(AR1(rhos[j - 1]), [k], m, h)[0]

    def atom(j, k, weight, label_j=None):
        d = window(j if j > 0 else 1, k)
        pt = theta0 * d / float(sn.evaluate(d))
        return PatternAtom(theta0, j if label_j is None else label_j, k, tuple(float(v) for v in pt), weight)

    def semi(j, k):
        return float(sn.evaluate(window(j, k)))

    entries = []
    if m >= 1:
        if not 1 <= j0 <= J:
            raise ValueError("j0 out of range")
        if k0 < -m:
            raise ValueError("k0 must be >= -m")
        if k0 <= -1:
            if k0 == -m:
                weight = sum(pi ** alpha * w for pi, w in zip(pis, wts))
                entries = [(atom(0, -m, weight), 1.0)]
            else:
                weight = wts[j0 - 1] * pis[j0 - 1] ** alpha * semi(j0, k0) ** alpha
                entries = [(atom(j0, k0, weight), 1.0)]
        else:
            r = rhos[j0 - 1] ** alpha
            base = wts[j0 - 1] * pis[j0 - 1] ** alpha
            for k in range(h + 1):
                prob = r ** k * (1.0 - r) if k < h else r ** h
                weight = base * semi(j0, k) ** alpha * (1.0 if k < h else 1.0 / (1.0 - r))
                entries.append((atom(j0, k, weight), prob))
    else:
        pvals = [pi ** alpha * w / (1.0 - r ** alpha) for pi, w, r in zip(pis, wts, rhos)]
        total = sum(pvals)
        if total <= 0.0:
            raise ZeroConditioningMass("no mass in direction theta0")
        spike = sum(pi ** alpha * w for pi, w in zip(pis, wts))
        entries.append((atom(0, 0, spike), spike / total))
        for j in range(1, J + 1):
            if pvals[j - 1] == 0.0:
                continue
            r = rhos[j - 1] ** alpha
            base = wts[j - 1] * pis[j - 1] ** alpha
            for k in range(1, h + 1):
                if k < h:
                    prob = pvals[j - 1] / total * r ** k * (1.0 - r)
                    weight = base * semi(j, k) ** alpha
                else:
                    prob = pvals[j - 1] / total * r ** h
                    weight = base * semi(j, h) ** alpha / (1.0 - r)
                entries.append((atom(j, k, weight), prob))
    cond = {"closed_form": True, "case": [theta0, j0, k0]}
    return PatternDistribution(entries, m, cond)
