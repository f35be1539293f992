"""Request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class SqueezeRequest(BaseModel):
    embedding: list[list[float]] = Field(min_length=1)


class SqueezeResponse(BaseModel):
    values: list[float]


class SeriesRequest(BaseModel):
    values: list[float] = Field(min_length=2)


class AccumulateResponse(BaseModel):
    values: list[float]


class PeriodResponse(BaseModel):
    crossings: int
    omega: float


class FitRequest(BaseModel):
    values: list[float] = Field(min_length=4)
    order: int = 3
    omega: float | None = None


class FitResponse(BaseModel):
    lam: float
    a0: float
    an: list[float]
    bn: list[float]
    omega: float
    order: int
    eta: float
    a0_coef: float
    response_an: list[float]
    response_bn: list[float]
    degenerate: bool


class GuidanceRequest(BaseModel):
    values: list[float] | None = None
    embedding: list[list[float]] | None = None
    order: int = 3
    model: str = "fsgm"


class GuidanceResponse(BaseModel):
    gg: list[float]
    width: int
    degenerate: bool


class MetricsRequest(BaseModel):
    predictions: list[int]
    labels: list[int]
    num_classes: int = Field(ge=1)


class ClassifyRequest(BaseModel):
    checkpoint_path: str
    embedding: list[list[float]] = Field(min_length=1)


class ClassifyResponse(BaseModel):
    theme: str
    probabilities: list[float]
    level: int
