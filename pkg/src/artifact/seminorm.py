"""Semi-norms that only look at the observed part of a path vector.

A path vector of a window with ``m`` observed lags and horizon ``h`` is
stored oldest first, ``(x_{-m}, ..., x_0, x_1, ..., x_h)``, so the observed
coordinates are the first ``m + 1`` entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["SemiNorm", "KernelVector", "evaluate", "project_to_cylinder"]


class KernelVector(ValueError):
    """Raised when a vector has zero semi-norm, i.e. lies in the kernel."""


@dataclass(frozen=True)
class SemiNorm:
    """p-norm of the first ``m + 1`` coordinates of a vector in R^{m+h+1}."""

    m: int
    h: int
    p: float = 2.0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise ValueError(f"m must be a non-negative integer, got {self.m}")
        if int(self.h) != self.h or self.h < 1:
            raise ValueError(f"h must be a positive integer, got {self.h}")
        if not (self.p >= 1.0):
            raise ValueError(f"p must lie in [1, inf], got {self.p}")

    @property
    def dim(self) -> int:
        return self.m + self.h + 1

    @property
    def n_observed(self) -> int:
        return self.m + 1

    def observed(self, x):
        """The observed block f(x) = (x_{-m}, ..., x_0)."""
        x = np.asarray(x, dtype=float)
        return x[..., : self.m + 1]

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected vectors of length {self.dim}, got {x.shape[-1]}")
        return self.norm_observed(x[..., : self.m + 1])

    def norm_observed(self, obs):
        """Norm of an observed block of length m + 1."""
        obs = np.asarray(obs, dtype=float)
        if obs.shape[-1] != self.m + 1:
            raise ValueError(f"expected observed blocks of length {self.m + 1}, got {obs.shape[-1]}")
        a = np.abs(obs)
        if math.isinf(self.p):
            return a.max(axis=-1)
        if self.p == 2.0:
            return np.sqrt((a * a).sum(axis=-1))
        if self.p == 1.0:
            return a.sum(axis=-1)
        return (a ** self.p).sum(axis=-1) ** (1.0 / self.p)

    def project(self, x):
        """Map x to x / ||x|| on the unit cylinder (rows independently)."""
        x = np.asarray(x, dtype=float)
        nrm = self.evaluate(x)
        if np.any(nrm == 0.0):
            raise KernelVector("vector has zero semi-norm and cannot be projected on the cylinder")
        return x / np.asarray(nrm)[..., None]

    def to_dict(self) -> dict:
        return {"m": self.m, "h": self.h, "p": "inf" if math.isinf(self.p) else self.p}

    @classmethod
    def from_dict(cls, d: dict) -> "SemiNorm":
        p = d.get("p", 2.0)
        return cls(int(d["m"]), int(d["h"]), math.inf if p in ("inf", "Infinity") else float(p))


def evaluate(sn: SemiNorm, x):
    return sn.evaluate(x)


def project_to_cylinder(sn: SemiNorm, x):
    return sn.project(x)
