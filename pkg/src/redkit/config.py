"""Experiment configuration: the JSON surface shared by the CLI, the service,
and the runner. A seed is mandatory -- no ambient randomness anywhere."""

from __future__ import annotations

import hashlib
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .compressor import Backend


class TaskConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str = "task-0"
    theta: float = Field(0.9, gt=0, le=1)
    omega: float = Field(1.0, ge=0)


class CurriculumConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    pb: float = Field(1.0, gt=0, le=1)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: Literal["KG", "REGRESSION", "NETWORK"]
    seed: int = Field(..., ge=0, lt=2**63)
    backend: Backend = Backend.LZ

    # KG scenario
    base_triples: int = Field(100, ge=1)
    novel_triples: int = Field(20, ge=0)

    # REGRESSION scenario
    n_train: int = Field(200, ge=20)
    n_test: int = Field(100, ge=1)
    noise_sigma: float = Field(0.1, gt=0)
    max_terms: int = Field(8, ge=1)
    epsilon: float = Field(2.0**-8, gt=0)
    tau: float = Field(3.0, gt=0)
    margin: float = Field(0.1, ge=0)

    # NETWORK scenario
    quant_bits: int = Field(8, ge=2, le=16)

    # experience accumulation
    experience_start: Literal["pre", "empty"] = "pre"
    curriculum_chunks: int = Field(4, ge=1)

    tasks: list[TaskConfig] = Field(default_factory=lambda: [TaskConfig()])
    curricula: list[CurriculumConfig] = Field(default_factory=lambda: [CurriculumConfig()])

    @model_validator(mode="after")
    def _validate(self):
        if not self.tasks:
            raise ValueError("at least one task is required")
        if not self.curricula:
            raise ValueError("at least one curriculum is required")
        ids = [t.id for t in self.tasks]
        if len(set(ids)) != len(ids):
            raise ValueError("task ids must be unique")
        pb_sum = sum(c.pb for c in self.curricula)
        if pb_sum > 1.0 + 1e-9:
            raise ValueError(f"curriculum probabilities sum to {pb_sum}, exceeding 1")
        return self

    def config_hash(self) -> str:
        canonical = self.model_dump_json()
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
