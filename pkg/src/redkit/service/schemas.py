"""Pydantic request/response models for the HTTP service.

Binary payloads travel as base64 strings; everything else is plain JSON.
"""

from __future__ import annotations

import base64
import binascii

from pydantic import BaseModel, Field

from ..config import ExperimentConfig
from ..errors import InputError


def decode_b64(value: str, field: str) -> bytes:
    try:
        return base64.b64decode(value, validate=True)
    except (binascii.Error, ValueError):
        raise InputError(f"{field} is not valid base64") from None


def encode_b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str


class CompressRequest(BaseModel):
    data_b64: str
    backend: str = "lz"


class LengthResponse(BaseModel):
    bits: float


class PairRequest(BaseModel):
    x_b64: str
    y_b64: str
    backend: str = "lz"
    metric: str = "ncd"  # ncd | nid | aid | cond


class ValueResponse(BaseModel):
    value: float


class MatrixItem(BaseModel):
    id: str
    data_b64: str


class MatrixRequest(BaseModel):
    items: list[MatrixItem]
    backend: str = "lz"
    metric: str = "ncd"
    max_workers: int | None = None


class MatrixResponse(BaseModel):
    items: list[str]
    values: list[list[float]]
    csv: str


class NwdRequest(BaseModel):
    term_a: str
    term_b: str
    corpus_text: str


class KgEncodeRequest(BaseModel):
    text: str


class KgEncodeResponse(BaseModel):
    data_b64: str
    byte_count: int
    entity_count: int
    relation_count: int
    triple_count: int


class FitRequest(BaseModel):
    csv_text: str
    family: str = "best"  # polynomial | fourier | best
    max_terms: int = Field(8, ge=1)
    epsilon: float = Field(2.0**-8, gt=0)


class FitResponse(BaseModel):
    record: dict


class DetectRequest(BaseModel):
    model: dict
    batch_csv: str
    tau: float = Field(3.0, gt=0)
    epsilon: float = Field(2.0**-8, gt=0)
    # baseline and range come from the training set when provided, else
    # explicitly
    train_csv: str | None = None
    baseline: float | None = None
    x_low: float | None = None
    x_high: float | None = None
    margin: float = Field(0.1, ge=0)


class DetectResponse(BaseModel):
    report: dict


class RedRequest(BaseModel):
    pre_b64: str
    pretr_b64: str
    post_b64: str
    backend: str = "lz"


class RedResponse(BaseModel):
    red: float
    red_estimators: dict
    pd: float


class ExperimentRequest(BaseModel):
    config: ExperimentConfig


class ExperimentResponse(BaseModel):
    report: dict


class BatteryRequest(BaseModel):
    config: ExperimentConfig
    seeds: int = Field(..., ge=1)


class BatteryResponse(BaseModel):
    result: dict
