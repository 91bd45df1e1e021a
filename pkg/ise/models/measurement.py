import csv
import io
import math
from enum import StrEnum
from pathlib import Path
from typing import Annotated, Final, Self

import numpy as np
from pydantic import Field, NonNegativeFloat, PositiveFloat, model_validator

from ..exc import SchemaError
from ..typedefs import FloatArray
from ..utils import csvdumps
from .base import FrozenModel, NDFloat
from .geometry import SensorGeometry

MeasurementHeader: Final[tuple[str, ...]] = ("j", "x_j_m", "y_tilde")
FluorescenceHeader: Final[tuple[str, ...]] = (
    "x_m",
    "probe_power",
    "fluorescence",
)


class MeasurementSource(StrEnum):
    AnalyticModel = "analytic_model"
    ExactAbsorption = "exact_absorption"
    SimulatedFluorescence = "simulated_fluorescence"


class FluorescenceProfile(FrozenModel):
    """Probe power and side fluorescence sampled on a uniform grid.

    Positivity is not enforced here so that measured profiles with dead
    pixels can still be represented; ``recover_alpha`` rejects them.
    """

    positions: NDFloat
    probe_power: NDFloat
    fluorescence: NDFloat
    kappa: PositiveFloat = 1.0

    @model_validator(mode="after")
    def check_profile(self) -> Self:
        n = len(self.positions)
        if len(self.probe_power) != n or len(self.fluorescence) != n:
            raise ValueError("profile arrays must share the grid length")
        if np.any(np.diff(self.probe_power) > 0.0):
            raise ValueError("probe power must be non-increasing")
        if not np.allclose(
            self.fluorescence,
            self.kappa * self.probe_power,
            rtol=1e-12,
            atol=0.0,
        ):
            raise ValueError("fluorescence must equal kappa * probe_power")
        return self

    @property
    def transmission(self) -> float:
        return float(self.probe_power[-1] / self.probe_power[0])

    def to_csv(self) -> str:
        return csvdumps(
            FluorescenceHeader,
            (
                (float(x), float(p), float(f))
                for x, p, f in zip(
                    self.positions,
                    self.probe_power,
                    self.fluorescence,
                    strict=True,
                )
            ),
        )


class SampledAbsorption(FrozenModel):
    positions: NDFloat
    values: Annotated[NDFloat, Field(description="α, 1/m")]

    @model_validator(mode="after")
    def check_lengths(self) -> Self:
        if len(self.positions) != len(self.values):
            raise ValueError("positions and values must share length")
        return self


class MeasurementVector(FrozenModel):
    """Calibrated virtual-channel samples ỹ_j."""

    values: NDFloat
    geometry: SensorGeometry
    noise_sigma: NonNegativeFloat = 0.0
    rng_seed: int | None = None
    source: MeasurementSource = MeasurementSource.AnalyticModel

    @model_validator(mode="after")
    def check_length(self) -> Self:
        if len(self.values) != self.geometry.channel_count:
            raise ValueError(
                f"{len(self.values)} values for "
                f"{self.geometry.channel_count} channels",
            )
        return self

    @property
    def positions(self) -> FloatArray:
        return self.geometry.centers

    def scaled(self, factor: float) -> "MeasurementVector":
        return self.model_copy(update={"values": self.values * factor})

    def to_csv(self) -> str:
        return csvdumps(
            MeasurementHeader,
            (
                (j, float(x), float(y))
                for j, (x, y) in enumerate(
                    zip(self.positions, self.values, strict=True),
                    start=1,
                )
            ),
        )

    @classmethod
    def from_csv(
        cls,
        text: str,
        geometry: SensorGeometry,
        *,
        path: Path,
        source: MeasurementSource = MeasurementSource.SimulatedFluorescence,
    ) -> "MeasurementVector":
        """Parse a ``j, x_j_m, y_tilde`` file against a known geometry."""
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != (
            MeasurementHeader
        ):
            raise SchemaError(
                f"expected header {','.join(MeasurementHeader)}",
                path=path,
                row=1,
            )
        positions: list[float] = []
        values: list[float] = []
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(MeasurementHeader):
                raise SchemaError(
                    f"expected {len(MeasurementHeader)} columns, "
                    f"got {len(row)}",
                    path=path,
                    row=row_number,
                )
            try:
                j = int(row[0])
                x, y = float(row[1]), float(row[2])
            except ValueError as err:
                raise SchemaError(str(err), path=path, row=row_number) from err
            if j != len(values) + 1 or not (
                math.isfinite(x) and math.isfinite(y)
            ):
                raise SchemaError(
                    "channel index out of order or non-finite value",
                    path=path,
                    row=row_number,
                )
            positions.append(x)
            values.append(y)
        if len(values) != geometry.channel_count:
            raise SchemaError(
                f"expected {geometry.channel_count} channels, "
                f"got {len(values)}",
                path=path,
                row=len(values) + 1,
            )
        mismatch = np.abs(np.asarray(positions) - geometry.centers)
        tol = 1e-9 * geometry.cell_length
        if np.any(mismatch > tol):
            first = int(np.argmax(mismatch > tol))
            raise SchemaError(
                "window center disagrees with the configured geometry",
                path=path,
                row=first + 2,
            )
        return cls(values=values, geometry=geometry, source=source)
