"""Run configuration: one JSON document drives every command."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .bivariate import Arc, BivarModel, Region, TailRegion
from .model import Aggregate, TruncationPolicy
from .seminorm import SemiNorm


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class _Comp(_Strict):
    pi: float = Field(1.0, gt=0)
    beta: float = Field(0.0, ge=-1, le=1)


class AR1Config(_Comp):
    kind: Literal["ar1"]
    rho: float
    anticipative: bool = True


class AR2Config(_Comp):
    kind: Literal["ar2"]
    lambda1: Union[float, List[float]]
    lambda2: Union[float, List[float]]


class FracIntConfig(_Comp):
    kind: Literal["fracint"]
    d: float


class ARMAConfig(_Comp):
    kind: Literal["arma"]
    psi: List[float]
    phi: List[float]
    theta: List[float] = [1.0]
    H: List[float] = [1.0]


class StrophoidConfig(_Comp):
    kind: Literal["strophoid"]
    a: float
    b: float
    seed: int = 0


class ExplicitConfig(_Comp):
    kind: Literal["explicit"]
    coeffs: dict[str, float]
    tail_ratio: Optional[float] = None


ComponentConfig = Annotated[
    Union[AR1Config, AR2Config, FracIntConfig, ARMAConfig, StrophoidConfig, ExplicitConfig],
    Field(discriminator="kind"),
]


class ModelConfig(_Strict):
    alpha: float = Field(gt=0, lt=2)
    components: List[ComponentConfig] = Field(min_length=1)

    @model_validator(mode="after")
    def _build(self):
        # constructing the aggregate checks every coefficient family and alpha
        self.to_aggregate()
        return self

    def to_aggregate(self) -> Aggregate:
        return Aggregate.from_dict({"alpha": self.alpha, "components": [c.model_dump() for c in self.components]})


class SemiNormConfig(_Strict):
    m: int = Field(ge=0)
    h: int = Field(ge=1)
    p: Union[float, Literal["inf"]] = 2.0

    @field_validator("p")
    @classmethod
    def _p(cls, v):
        if v != "inf" and v < 1:
            raise ValueError("p must be at least 1")
        return v

    def to_seminorm(self) -> SemiNorm:
        return SemiNorm(self.m, self.h, math.inf if self.p == "inf" else float(self.p))


class TruncationConfig(_Strict):
    tol: float = Field(1e-10, gt=0)
    max_terms: int = Field(1_000_000, ge=1)
    strict: bool = True

    def to_policy(self) -> TruncationPolicy:
        return TruncationPolicy(self.tol, self.max_terms, self.strict)


class SimulateConfig(_Strict):
    T: int = Field(ge=1)
    seed: int = 0
    components: bool = False


class PredictConfig(_Strict):
    observed: Optional[List[List[float]]] = None
    observed_csv: Optional[str] = None
    tol: float = Field(1e-6, gt=0)


class VerifyConfig(_Strict):
    N: int = Field(10**6, ge=10**4)
    quantile: float = Field(0.999, gt=0.9, lt=1)
    tube: float = Field(0.05, gt=0)
    theta0: Literal[-1, 1] = 1
    j0: int = Field(1, ge=0)
    k0: int = 0
    n_blocks: int = Field(50, ge=2)
    seed: int = 0
    scaling_quantiles: List[float] = [0.99, 0.995, 0.999, 0.9995, 0.9999]


class AtomConfig(_Strict):
    point: List[float] = Field(min_length=2, max_length=2)
    weight: float = Field(gt=0)


class ArcConfig(_Strict):
    theta: float
    eta: float = Field(ge=0)

    def to_arc(self) -> Arc:
        return Arc(self.theta, self.eta)


class QueryConfig(_Strict):
    name: Optional[str] = None
    theta: float
    eta: float = Field(ge=0)
    P: List[List[float]] = Field(min_length=1)

    @field_validator("P")
    @classmethod
    def _rects(cls, v):
        for r in v:
            if len(r) != 4:
                raise ValueError("each rectangle is [xlo, xhi, ylo, yhi]")
            if r[0] > r[1] or r[2] > r[3]:
                raise ValueError("rectangle bounds must satisfy xlo <= xhi and ylo <= yhi")
        return v

    def to_region(self) -> TailRegion:
        return TailRegion(Arc(self.theta, self.eta), Region.from_list(self.P))


class BivarMCConfig(_Strict):
    N: int = Field(10**6, ge=10**4)
    quantile: float = Field(0.999, gt=0.9, lt=1)
    seed: int = 0
    n_blocks: int = Field(50, ge=2)


class BivariateConfig(_Strict):
    alpha: float = Field(gt=0, lt=2)
    rho1: float
    rho2: float
    gamma2: List[AtomConfig] = Field(min_length=2)
    v0: ArcConfig
    queries: List[QueryConfig] = []
    mc: Optional[BivarMCConfig] = None

    @model_validator(mode="after")
    def _build(self):
        self.to_model()
        return self

    def to_model(self) -> BivarModel:
        pts = [[float(v) for v in a.point] for a in self.gamma2]
        nrm = [math.hypot(*p) for p in pts]
        if any(abs(n - 1.0) > 1e-9 for n in nrm):
            raise ValueError("gamma2 atoms must lie on the unit circle")
        return BivarModel.from_atoms(self.alpha, self.rho1, self.rho2, pts, [a.weight for a in self.gamma2])


class Config(_Strict):
    model: Optional[ModelConfig] = None
    seminorm: Optional[SemiNormConfig] = None
    truncation: TruncationConfig = TruncationConfig()
    simulate: Optional[SimulateConfig] = None
    predict: Optional[PredictConfig] = None
    verify: Optional[VerifyConfig] = None
    bivariate: Optional[BivariateConfig] = None

    def require(self, *blocks: str):
        missing = [b for b in blocks if getattr(self, b) is None]
        if missing:
            raise ValueError(f"this command needs the config block(s): {', '.join(missing)}")


def load_config(path) -> Config:
    path = Path(path)
    with path.open() as fh:
        data = json.load(fh)
    return Config.model_validate(data)
