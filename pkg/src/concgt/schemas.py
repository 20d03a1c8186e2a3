"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class RunRequest(BaseModel):
    scheme: Literal[
        "det-nonadaptive", "adaptive2", "adaptive-m", "rand1", "rand2", "rand3", "las-vegas"
    ]
    n: int = Field(gt=0)
    sizes: list[int] = Field(min_length=1)
    trials: int = Field(ge=1)
    seed: int
    epsilon: Optional[float] = Field(default=None, gt=0, lt=1)
    alpha: Optional[float] = Field(default=None, gt=0, lt=1)
    instance_mode: Literal["random-uniform", "from-file"] = "random-uniform"
    exact_sizes: bool = True
    instance_text: Optional[str] = None
    max_attempts: int = Field(default=10_000, ge=1)


class TrialRecordModel(BaseModel):
    run_id: str
    scheme: str
    n: int
    sizes: list[int]
    seed: int
    tests_used: int
    stages_used: int
    succeeded: bool
    wall_time_ms: float


class SummaryModel(BaseModel):
    trials: int
    successes: int
    success_rate: float
    wilson_low: float
    wilson_high: float
    mean_tests: float
    max_tests: int
    mean_stages: float
    max_stages: int
    lower_bound_bits: float
    prng: str


class RunResponse(BaseModel):
    records: list[TrialRecordModel]
    summary: SummaryModel


class BoundsRequest(BaseModel):
    n: int = Field(gt=0)
    sizes: list[int] = Field(min_length=1)


class BoundReportModel(BaseModel):
    n: int
    sizes: list[int]
    lower_bound_bits: float
    simplified_bound_bits: float
    simplified_valid: bool
    baseline_tests: Optional[float] = None
    baseline_precondition_ok: Optional[bool] = None


class DisjunctCheckRequest(BaseModel):
    matrix: str
    u: int = Field(ge=1)
    v: int = Field(ge=0)


class DisjunctCheckResponse(BaseModel):
    disjunct: bool
    witness_designated: Optional[list[int]] = None
    witness_others: Optional[list[int]] = None


class DisjunctBuildRequest(BaseModel):
    n: int = Field(gt=0)
    v: int = Field(ge=1)
    seed: int
    verify: bool = False
    u: int = Field(default=2, ge=1)


class DisjunctBuildResponse(BaseModel):
    matrix: str
    t: int
    n: int
    u: int
    v: int
    verified: bool


class HealthResponse(BaseModel):
    status: str
    version: str
