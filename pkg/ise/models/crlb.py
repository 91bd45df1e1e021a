import math
from typing import Any, Self

import numpy as np
from pydantic import PositiveFloat, model_validator

from ..typedefs import FloatArray
from .base import FrozenModel, NDFloat
from .geometry import SensorGeometry


class FimInputs(FrozenModel):
    """Unknowns (Δk, Δφ, 𝒜) of the sum-of-sinusoids model and Σ_y."""

    geometry: SensorGeometry
    spatial_frequencies: NDFloat
    phase_offsets: NDFloat
    amplitudes: NDFloat
    noise_sigma: PositiveFloat | None = None
    noise_cov: NDFloat | None = None

    @model_validator(mode="after")
    def check_inputs(self) -> Self:
        n = len(self.spatial_frequencies)
        if len(self.phase_offsets) != n or len(self.amplitudes) != n:
            raise ValueError("Δk, Δφ and 𝒜 need one entry per target")
        if np.any(self.amplitudes == 0.0):
            raise ValueError("zero-amplitude targets make the FIM singular")
        if (self.noise_sigma is None) == (self.noise_cov is None):
            raise ValueError("give exactly one of noise_sigma or noise_cov")
        if self.noise_cov is not None:
            k = self.geometry.channel_count
            if self.noise_cov.shape != (k, k):
                raise ValueError(f"noise covariance must be {k}x{k}")
            if not np.allclose(self.noise_cov, self.noise_cov.T):
                raise ValueError("noise covariance must be symmetric")
        return self

    @property
    def target_count(self) -> int:
        return len(self.spatial_frequencies)

    @property
    def covariance(self) -> FloatArray:
        if self.noise_cov is not None:
            return self.noise_cov
        sigma = self.noise_sigma or 0.0
        return sigma**2 * np.eye(self.geometry.channel_count)


def _matrix_dict(matrix: FloatArray) -> dict[str, Any]:
    rows, cols = matrix.shape
    return {"rows": rows, "cols": cols, "data": matrix.ravel().tolist()}


class CrlbReport(FrozenModel):
    angles: NDFloat
    fim: NDFloat
    effective_fim_dk: NDFloat
    crlb_theta: NDFloat
    per_target_std: NDFloat
    condition_number: float

    @property
    def per_target_std_deg(self) -> FloatArray:
        return np.degrees(self.per_target_std)

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "angles_rad": self.angles,
            "angles_deg": np.degrees(self.angles),
            "fim": _matrix_dict(self.fim),
            "effective_fim_dk": _matrix_dict(self.effective_fim_dk),
            "crlb_theta": _matrix_dict(self.crlb_theta),
            "per_target_std_rad": self.per_target_std,
            "per_target_std_deg": self.per_target_std_deg,
            "condition_number": self.condition_number,
        }

    def csv_rows(self) -> list[tuple[int, float, float]]:
        return [
            (i, math.degrees(float(theta)), float(std))
            for i, (theta, std) in enumerate(
                zip(self.angles, self.per_target_std_deg, strict=True),
                start=1,
            )
        ]
