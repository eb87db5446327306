"""Request and response shapes for the HTTP service.

Non-finite numbers cannot travel in JSON, so every field that may be
infinite is typed ``float | str`` and carries "inf", "-inf", or "nan" as
a string on the wire.
"""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel, ConfigDict, Field

Wire = float | str


class KLRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    from_model: str = Field(alias="from")
    to_model: str = Field(alias="to")
    method: str = "auto"
    tol: float = 1e-8
    n: int = 1_000_000
    seed: int = 0


class KLResponse(BaseModel):
    value: Wire
    method: str
    error_bound: Wire | None = None
    n_used: int | None = None
    support_violation: bool = False


class SampleKLRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    from_model: str = Field(alias="from")
    to_model: str = Field(alias="to")
    data: list[float]


class MinKLRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    from_model: str = Field(alias="from")
    target: str
    method: str = "auto"
    tol: float = 1e-9
    n: int = 1_000_000
    seed: int = 0


class MinKLResponse(BaseModel):
    argmin: dict[str, Wire]
    value: KLResponse
    method: str
    converged: bool
    diagnostics: dict[str, Any] = {}


class IndependenceRequest(BaseModel):
    source: str
    target: str
    grid: str
    tol: float = 1e-5


class IndependenceResponse(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    source: str
    target: str
    grid: list[dict[str, float]]
    values: list[Wire]
    spread: Wire
    tolerance: float
    passed: bool = Field(alias="pass")
    methods: list[str]


class PriorsRequest(BaseModel):
    source1: str
    prior1: str | None = None
    source2: str
    prior2: str | None = None
    loss_source: str = "numeric"


class ModelPriorsOut(BaseModel):
    mass1: float
    mass2: float
    p1: float
    p2: float
    loss1: Wire
    loss2: Wire
    loss_source: str


class SelectRequest(BaseModel):
    m1: str
    prior1: str | None = None
    m2: str
    prior2: str | None = None
    data: list[float] | None = None
    truth: str | None = None
    n: int = 100
    seed: int = 0
    loss_source: str = "numeric"


class SelectResponse(BaseModel):
    log_marginal1: Wire
    log_marginal2: Wire
    log_bayes_factor: Wire
    log_prior_odds: Wire
    log_posterior_odds: Wire
    bayes_factor: Wire
    prior_odds: Wire
    posterior_odds: Wire
    model_priors: ModelPriorsOut
    n_used: int


class SimulateRequest(BaseModel):
    truth: str
    m1: str
    prior1: str | None = None
    m2: str
    prior2: str | None = None
    n_grid: list[int] = [20, 100, 500]
    reps: int = 100
    seed: int = 0
    loss_source: str = "numeric"


class SimulateRow(BaseModel):
    n: int
    rep: int
    posterior_prob: float


class MedianRow(BaseModel):
    n: int
    median: float


class SimulateResponse(BaseModel):
    truth: str
    family1: str
    family2: str
    nearest: int
    n_grid: list[int]
    reps: int
    seed: int
    model_priors: ModelPriorsOut
    medians: list[MedianRow]
    rows: list[SimulateRow]


class HealthResponse(BaseModel):
    status: str
    version: str
