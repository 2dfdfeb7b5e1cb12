"""Request/response models for the HTTP service.

Rule payloads travel as the same JSON document save_rule writes, so a rule
file and a rule over the wire are interchangeable.
"""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from .cbc import RULE_FORMAT
from .criterion import GeneralWeights, ProductWeights, Weights


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class WeightEntryModel(StrictModel):
    coords: list[int] = Field(min_length=1)
    gamma: float = Field(ge=0)


class WeightsModel(StrictModel):
    """Mirror of the weights block in a rule file."""

    type: Literal["product", "general"]
    gammas: Optional[list[float]] = None
    s: Optional[int] = None
    entries: Optional[list[WeightEntryModel]] = None

    def to_weights(self) -> Weights:
        if self.type == "product":
            if self.gammas is None:
                raise ValueError("product weights need 'gammas'")
            return ProductWeights(tuple(float(g) for g in self.gammas))
        if self.s is None or self.entries is None:
            raise ValueError("general weights need 's' and 'entries'")
        return GeneralWeights.from_entries(
            self.s, [(e.coords, e.gamma) for e in self.entries]
        )


class ConstructRequest(StrictModel):
    b: int = Field(ge=2)
    m: int = Field(ge=1)
    s: int = Field(ge=1)
    d: int = Field(ge=1)
    alpha: int = Field(ge=1)
    weights: WeightsModel
    method: Literal["fast", "naive"] = "fast"
    modulus: Optional[list[int]] = None
    generator: Optional[list[int]] = None


class ConstructResponse(StrictModel):
    rule: dict
    criterion_value: float


class PointsRequest(StrictModel):
    rule: dict
    scrambled: bool = True
    seed: int = Field(default=0, ge=0, lt=1 << 64)
    replication_id: int = Field(default=0, ge=0)
    depth: Optional[int] = Field(default=None, ge=1)


class PointsResponse(StrictModel):
    text: str
    n_points: int
    dim: int


class TauBoundModel(StrictModel):
    tau: int
    lambda_star: float
    bound_star: float


class BoundRequest(StrictModel):
    rule: dict
    grid_size: int = Field(default=33, ge=1)
    per_tau: bool = False


class BoundResponse(StrictModel):
    lambda_star: float
    bound_star: float
    criterion_value: float
    ratio: float
    per_tau: Optional[list[TauBoundModel]] = None


class IntegrateRequest(StrictModel):
    rule: dict
    kind: str
    params: dict = Field(default_factory=dict)
    replications: int = Field(default=30, ge=2)
    seed: int = Field(default=0, ge=0, lt=1 << 64)
    threads: int = Field(default=1, ge=1, le=64)
    depth: Optional[int] = Field(default=None, ge=1)


class IntegrateResponse(StrictModel):
    estimates: list[float]
    mean: float
    sample_variance: float
    stderr: float
    replications: int
    seed: int
    description: str
    exact_integral: Optional[float] = None
    abs_error: Optional[float] = None


class SweepSettingModel(StrictModel):
    alpha: int = Field(ge=1)
    d: int = Field(ge=1)
    s: int = Field(ge=1)
    weights: Union[float, str, list[float]]


class SweepRequest(StrictModel):
    preset: Optional[Literal["fig1", "fig2", "fig3"]] = None
    settings: Optional[list[SweepSettingModel]] = None
    m_lo: int = 4
    m_hi: int = 14
    base: int = 2
    method: Literal["fast", "naive"] = "fast"


class SlopeModel(StrictModel):
    config_id: int
    label: str
    slope: float


class SweepResponse(StrictModel):
    csv: str
    slopes: list[SlopeModel]


class HealthResponse(StrictModel):
    status: str
    rule_format: str = RULE_FORMAT
