"""Pydantic request/response models for the design service.

Complex matrices travel as separate real and imaginary float arrays with
matching shapes; channel sets carry their generating configuration so that
design endpoints are fully stateless.
"""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, Field, model_validator


class ComplexMatrix(BaseModel):
    re: list[list[float]]
    im: list[list[float]]

    @model_validator(mode="after")
    def _check_shapes(self):
        if len(self.re) != len(self.im):
            raise ValueError("re and im must have the same number of rows")
        widths = {len(row) for row in self.re} | {len(row) for row in self.im}
        if len(widths) > 1:
            raise ValueError("all rows must have the same length")
        if not self.re or not self.re[0]:
            raise ValueError("matrix must be non-empty")
        return self

    @classmethod
    def from_array(cls, w: np.ndarray) -> "ComplexMatrix":
        w = np.atleast_2d(np.asarray(w, dtype=np.complex128))
        return cls(re=w.real.tolist(), im=w.imag.tolist())

    def to_array(self) -> np.ndarray:
        return np.asarray(self.re, dtype=float) + 1j * np.asarray(self.im, dtype=float)


class ChannelVector(BaseModel):
    group: int = Field(ge=0)
    ue: int = Field(ge=0)
    re: list[float]
    im: list[float]


class SystemConfigModel(BaseModel):
    n_antennas: int = Field(ge=1)
    group_sizes: list[int] = Field(min_length=1)
    n_paths: int = Field(default=3, ge=1)
    spacing_ratio: float = Field(default=0.5, gt=0)
    noise_power: float = Field(default=1.0, gt=0)


class ChannelSetModel(BaseModel):
    config: SystemConfigModel
    seed: int = Field(ge=0)
    channels: list[ChannelVector]


class GenerateChannelsRequest(BaseModel):
    config: SystemConfigModel
    seed: int = Field(default=0, ge=0)


class QosDesignRequest(BaseModel):
    channels: ChannelSetModel
    sinr_target: float = Field(gt=0)
    n_rand: int = Field(default=100, ge=1)
    seed: int = Field(default=0, ge=0)


class MmfDesignRequest(BaseModel):
    channels: ChannelSetModel
    power_budget: float = Field(gt=0)
    n_rand: int = Field(default=100, ge=1)
    seed: int = Field(default=0, ge=0)


class DesignResponse(BaseModel):
    precoder: ComplexMatrix
    total_power: float
    min_sinr: float
    sdr_objective: float | None = None
    sdr_gamma_upper: float | None = None
    candidate_index: int


class DecomposeRequest(BaseModel):
    precoder: ComplexMatrix
    family: str = "primary"
    rho_mode: str = "per_group"
    bits: int | None = Field(default=None, ge=1)


class HybridModel(BaseModel):
    phases_a: list[list[float]]
    phases_b: list[list[float]]
    digital: ComplexMatrix
    n_rf: int
    family: str
    bits: int | None


class DecomposeResponse(BaseModel):
    hybrid: HybridModel
    n_phase_shifters: int
    relative_reconstruction_error: float


class EvaluateRequest(BaseModel):
    channels: ChannelSetModel
    precoder: ComplexMatrix


class SinrEntry(BaseModel):
    group: int
    ue: int
    sinr: float


class EvaluateResponse(BaseModel):
    min_sinr: float
    total_power: float
    per_ue: list[SinrEntry]


class HealthResponse(BaseModel):
    status: str
    version: str
