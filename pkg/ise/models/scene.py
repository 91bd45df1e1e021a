import logging
import math
from typing import Annotated, Self

import numpy as np
from pydantic import Field, NonNegativeFloat, PositiveFloat, model_validator
from scipy import constants

from ..exc import InvalidModelInput
from ..typedefs import FloatArray
from .base import FrozenModel

logger = logging.getLogger(__name__)

HalfPi = math.pi / 2.0


class PlaneWave(FrozenModel):
    amplitude: Annotated[NonNegativeFloat, Field(description="V/m")]
    angle: Annotated[float, Field(ge=-HalfPi, le=HalfPi, description="rad")]
    phase: Annotated[float, Field(description="rad")] = 0.0

    @classmethod
    def from_degrees(
        cls,
        amplitude: float,
        angle_deg: float,
        phase_deg: float = 0.0,
    ) -> "PlaneWave":
        return cls(
            amplitude=amplitude,
            angle=math.radians(angle_deg),
            phase=math.radians(phase_deg),
        )


class RfScene(FrozenModel):
    """LO plane wave plus N incident signals at a common carrier."""

    lo: PlaneWave
    signals: tuple[PlaneWave, ...] = ()
    carrier_freq: Annotated[PositiveFloat, Field(description="Hz")] = 2.03e9

    @model_validator(mode="after")
    def check_lo(self) -> Self:
        if self.lo.amplitude <= 0.0:
            raise ValueError("LO amplitude must be strictly positive")
        if self.signals and not self.is_identifiable:
            logger.warning(
                "scene is not identifiable: spatial frequencies %s",
                self.spatial_frequencies,
            )
        return self

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi * self.carrier_freq / constants.c

    @property
    def wavelength(self) -> float:
        return constants.c / self.carrier_freq

    @property
    def signal_count(self) -> int:
        return len(self.signals)

    @property
    def amplitudes(self) -> FloatArray:
        return np.array([s.amplitude for s in self.signals], dtype=np.float64)

    @property
    def angles(self) -> FloatArray:
        return np.array([s.angle for s in self.signals], dtype=np.float64)

    @property
    def spatial_frequencies(self) -> FloatArray:
        """Δk_i = k (sin θ0 − sin θi)."""
        return self.wavenumber * (np.sin(self.lo.angle) - np.sin(self.angles))

    @property
    def phase_offsets(self) -> FloatArray:
        """Δφ_i = φ_i − φ0."""
        phases = np.array([s.phase for s in self.signals], dtype=np.float64)
        return phases - self.lo.phase

    @property
    def lo_dominance_ratio(self) -> float:
        total = float(self.amplitudes.sum())
        if total == 0.0:
            return math.inf
        return self.lo.amplitude / total

    @property
    def is_identifiable(self) -> bool:
        dk = self.spatial_frequencies
        if np.any(dk == 0.0):
            return False
        return len(np.unique(dk)) == len(dk)

    def with_lo_ratio(self, ratio: float) -> "RfScene":
        total = float(self.amplitudes.sum())
        if ratio <= 0.0 or total == 0.0:
            raise InvalidModelInput(
                f"LO ratio needs a positive ratio and signals, got {ratio}",
            )
        lo = self.lo.model_copy(update={"amplitude": ratio * total})
        return self.model_copy(update={"lo": lo})
