import math
from typing import Annotated, ClassVar, Final, Self

import numpy as np
from pydantic import Field, PositiveFloat, PositiveInt, model_validator

from ..typedefs import FloatArray
from .base import FrozenModel

# floor() guard for window counts computed in floating point
_CountSlack: Final[float] = 1e-9


class SensorGeometry(FrozenModel):
    """Virtual array of K shifted rectangular windows along the cell."""

    EdgeTolerance: ClassVar[float] = 1e-12

    cell_length: Annotated[PositiveFloat, Field(description="L, m")]
    window_width: Annotated[PositiveFloat, Field(description="ℓ, m")]
    first_center: Annotated[float, Field(description="x_0, m")]
    spacing: Annotated[PositiveFloat, Field(description="Δx, m")]
    channel_count: Annotated[int, Field(ge=2, description="K")]
    grid_points_per_rf_wavelength: PositiveInt = 256

    @model_validator(mode="after")
    def check_windows(self) -> Self:
        tol = self.EdgeTolerance * self.cell_length
        lower = self.first_center - self.window_width / 2.0
        upper = (
            self.first_center
            + (self.channel_count - 1) * self.spacing
            + self.window_width / 2.0
        )
        if lower < -tol or upper > self.cell_length + tol:
            raise ValueError(
                f"windows span [{lower:.6g}, {upper:.6g}] m, "
                f"outside the cell [0, {self.cell_length:.6g}] m",
            )
        return self

    @classmethod
    def fitted(
        cls,
        cell_length: float,
        window_width: float,
        spacing: float,
        *,
        first_center: float | None = None,
        channel_count: int | None = None,
        grid_points_per_rf_wavelength: int = 256,
    ) -> "SensorGeometry":
        """Pack as many windows as fit, starting flush with x = 0."""
        x0 = window_width / 2.0 if first_center is None else first_center
        if channel_count is None:
            room = cell_length - window_width / 2.0 - x0
            channel_count = math.floor(room / spacing + _CountSlack) + 1
        return cls(
            cell_length=cell_length,
            window_width=window_width,
            first_center=x0,
            spacing=spacing,
            channel_count=channel_count,
            grid_points_per_rf_wavelength=grid_points_per_rf_wavelength,
        )

    @classmethod
    def from_wavelengths(
        cls,
        wavelength: float,
        cell_length: float,
        window_width: float,
        spacing: float,
        *,
        first_center: float | None = None,
        channel_count: int | None = None,
        grid_points_per_rf_wavelength: int = 256,
    ) -> "SensorGeometry":
        return cls.fitted(
            cell_length * wavelength,
            window_width * wavelength,
            spacing * wavelength,
            first_center=None
            if first_center is None
            else first_center * wavelength,
            channel_count=channel_count,
            grid_points_per_rf_wavelength=grid_points_per_rf_wavelength,
        )

    @property
    def centers(self) -> FloatArray:
        return self.first_center + self.spacing * np.arange(
            self.channel_count,
            dtype=np.float64,
        )

    @property
    def lower_edges(self) -> FloatArray:
        return self.centers - self.window_width / 2.0

    @property
    def upper_edges(self) -> FloatArray:
        return self.centers + self.window_width / 2.0

    def grid(self, rf_wavelength: float) -> FloatArray:
        points = math.ceil(
            self.cell_length / rf_wavelength
            * self.grid_points_per_rf_wavelength,
        )
        return np.linspace(0.0, self.cell_length, points + 1)

    def shifted(self, offset: float) -> "SensorGeometry":
        return self.model_copy(
            update={"first_center": self.first_center + offset},
        )


class SamplingReport(FrozenModel):
    rf_wavelength: PositiveFloat
    spacing: PositiveFloat
    window_width: PositiveFloat
    spacing_compliant: bool
    window_compliant: bool

    @property
    def spacing_margin(self) -> float:
        """λ/4 − Δx; negative when aliasing is possible."""
        return self.rf_wavelength / 4.0 - self.spacing

    @property
    def window_margin(self) -> float:
        """λ/2 − ℓ; non-positive when a window null falls in band."""
        return self.rf_wavelength / 2.0 - self.window_width

    @property
    def compliant(self) -> bool:
        return self.spacing_compliant and self.window_compliant

    def lines(self) -> list[str]:
        dx = self.spacing / self.rf_wavelength
        width = self.window_width / self.rf_wavelength
        spacing_state = "ok" if self.spacing_compliant else "ALIASING"
        window_state = "ok" if self.window_compliant else "NULL IN BAND"
        return [
            f"spacing  Δx = {dx:.4g} λ (limit 0.25 λ): {spacing_state}",
            f"window    ℓ = {width:.4g} λ (limit < 0.5 λ): {window_state}",
        ]
