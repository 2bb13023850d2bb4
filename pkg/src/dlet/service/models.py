"""Request and response schemas of the HTTP service.

The diffusion exponent is spelled ``lambda`` on the wire; models accept
both the wire name and the Python-safe ``lam``.  Expansions travel in
the same sparse layout the library serializes: ``alpha`` as ``[k,
value]`` pairs and ``beta`` as ``[level, k, value]`` triples.
"""

from __future__ import annotations

from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from ..wavelets import WaveletExpansion


class BasisRequest(BaseModel):
    order: int = Field(4, ge=1, le=10)
    resolution: int = Field(11, ge=3, le=16)


class DecomposeRequest(BaseModel):
    preset: str
    order: int = Field(4, ge=1, le=10)
    levels: int = Field(3, ge=0, le=12)
    period: int = Field(8, ge=2)
    origin: float = 0.0


class SolveRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lam: float = Field(alias="lambda", ge=0.0, le=1.0)
    sigma: float = Field(gt=0.0)
    preset: str
    x_lo: float
    x_hi: float
    horizon: float = Field(gt=0.0)
    nx: int = Field(513, ge=3)
    nt: int = Field(128, ge=1)
    r: float = 0.0
    taus: Optional[List[float]] = None


class CacheBuildRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lam: float = Field(alias="lambda", ge=0.0, le=1.0)
    sigma: float = Field(gt=0.0)
    order: int = Field(4, ge=1, le=10)
    tau_max: float = Field(gt=0.0)
    tau_min: Optional[float] = Field(None, gt=0.0)
    dx: float = Field(1.0 / 128.0, gt=0.0)
    n_substeps: int = Field(32, ge=1)
    x_lo: Optional[float] = None
    x_hi: Optional[float] = None
    mode: str = "fast"
    exact_levels: Optional[List[int]] = None
    exact_period: Optional[int] = None


class ExpansionModel(BaseModel):
    order: int = Field(ge=1, le=10)
    levels: int = Field(ge=0)
    origin: float = 0.0
    alpha: List[Tuple[int, float]]
    beta: List[Tuple[int, int, float]] = []

    def to_expansion(self) -> WaveletExpansion:
        return WaveletExpansion.from_dict(self.model_dump())

    @classmethod
    def from_expansion(cls, expansion: WaveletExpansion) -> "ExpansionModel":
        return cls(**expansion.to_dict())


class ReconstructRequest(BaseModel):
    cache_id: str
    expansion: ExpansionModel
    tau: float = Field(ge=0.0)
    x: List[float]
    epsilon: Optional[float] = Field(None, gt=0.0)


class GammaModel(BaseModel):
    c: float = Field(1.0, ge=0.0)
    eta: float = 0.0


class VarianceRequest(BaseModel):
    cache_id: str
    expansion: ExpansionModel
    taus: List[float]
    x: List[float]
    gamma: GammaModel = GammaModel()


class CovarianceRequest(BaseModel):
    cache_id: str
    expansion: ExpansionModel
    pairs: List[Tuple[float, float, float, float]]
    gamma: GammaModel = GammaModel()


class ValidateRequest(BaseModel):
    suite: str
    seed: int = 0


class HealthResponse(BaseModel):
    status: str
    version: str
