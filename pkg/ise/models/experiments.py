import math
from enum import StrEnum
from typing import Annotated, Self

import numpy as np
from pydantic import Field, model_validator

from ..utils import csvdumps
from .atomic import AtomicParams
from .base import FrozenModel, NDFloat
from .estimation import PronyConfig
from .geometry import SensorGeometry
from .measurement import MeasurementSource
from .scene import RfScene


class SweepAxis(StrEnum):
    LoRatio = "lo_ratio"
    SnrDb = "snr_db"
    CellLength = "cell_length"
    SamplingInterval = "sampling_interval"
    WindowWidth = "window_width"


class Sweep(FrozenModel):
    axis: SweepAxis
    values: Annotated[tuple[float, ...], Field(min_length=1)]


class ScenarioConfig(FrozenModel):
    scene: RfScene
    geometry: SensorGeometry
    prony: PronyConfig
    params: AtomicParams = AtomicParams()
    snr_db: float | None = 30.0
    trials: Annotated[int, Field(ge=1)] = 100
    base_seed: int = 0
    source: MeasurementSource = MeasurementSource.AnalyticModel
    threads: Annotated[int, Field(ge=1)] = 1
    sweep: Sweep | None = None

    def sweep_values(self, axis: SweepAxis) -> tuple[float, ...] | None:
        if self.sweep is None or self.sweep.axis is not axis:
            return None
        return self.sweep.values


class MonteCarloResult(FrozenModel):
    """Per-trial absolute DoA errors (rad); NaN rows are failed trials."""

    errors: NDFloat
    failures: int

    @property
    def trials(self) -> int:
        return len(self.errors)

    @property
    def rmse(self) -> float:
        ok = self.errors[~np.isnan(self.errors).any(axis=1)]
        if ok.size == 0:
            return math.nan
        return float(np.sqrt(np.mean(ok**2)))


class SweepResult(FrozenModel):
    axis: SweepAxis
    values: NDFloat
    rmse: Annotated[NDFloat, Field(description="rad")]
    crlb_std: Annotated[
        NDFloat | None,
        Field(description="rad, NaN where no bound applies"),
    ] = None
    trials: int
    failures: tuple[int, ...]
    label: str = ""
    smoke_value: float | None = None

    @model_validator(mode="after")
    def check_lengths(self) -> Self:
        n = len(self.values)
        if len(self.rmse) != n or len(self.failures) != n:
            raise ValueError("one RMSE and failure count per axis value")
        if self.crlb_std is not None and len(self.crlb_std) != n:
            raise ValueError("one CRLB entry per axis value")
        return self

    def to_csv(self) -> str:
        crlb = (
            [math.nan] * len(self.values)
            if self.crlb_std is None
            else list(self.crlb_std)
        )
        return csvdumps(
            (self.axis.value, "rmse_deg", "crlb_deg", "trials", "failures"),
            (
                (
                    float(value),
                    math.degrees(float(rmse)),
                    None if math.isnan(bound) else math.degrees(float(bound)),
                    self.trials,
                    failures,
                )
                for value, rmse, bound, failures in zip(
                    self.values,
                    self.rmse,
                    crlb,
                    self.failures,
                    strict=True,
                )
            ),
        )


class ResidualSummary(FrozenModel):
    lo_ratio: float
    rms: float
    sup: float
    modulation: float
    normalized_rms: float
    normalized_sup: float


class LinearizationCheck(FrozenModel):
    positions: NDFloat
    exact_weak: NDFloat
    lin_weak: NDFloat
    exact_strong: NDFloat
    lin_strong: NDFloat
    weak: ResidualSummary
    strong: ResidualSummary

    @property
    def residual_ratio(self) -> float:
        """Normalized RMS residual, weak LO over strong LO."""
        if self.strong.normalized_rms == 0.0:
            return math.nan
        return self.weak.normalized_rms / self.strong.normalized_rms

    def to_csv(self) -> str:
        return csvdumps(
            (
                "x_m",
                "alpha_exact_weak",
                "alpha_lin_weak",
                "alpha_exact_strong",
                "alpha_lin_strong",
            ),
            (
                tuple(float(v) for v in row)
                for row in zip(
                    self.positions,
                    self.exact_weak,
                    self.lin_weak,
                    self.exact_strong,
                    self.lin_strong,
                    strict=True,
                )
            ),
        )


class SamplingDemoConfig(FrozenModel):
    """Angles in degrees, lengths in RF wavelengths."""

    cell_length: float = 16.0
    aliasing_target: float = 60.0
    aliasing_spacings: tuple[float, float] = (0.25, 0.5)
    aliasing_window: float = 0.25
    null_target: float = 0.0
    null_widths: tuple[float, float] = (0.25, 1.0)
    null_spacing: float = 0.25
    angle_step: Annotated[float, Field(gt=0.0)] = 0.25


class SpectralCurve(FrozenModel):
    panel: str
    label: str
    target_angle: float
    angles: Annotated[NDFloat, Field(description="rad")]
    power: Annotated[NDFloat, Field(description="normalized to panel max")]
    geometry: SensorGeometry

    def power_at(self, angle: float) -> float:
        return float(self.power[int(np.argmin(np.abs(self.angles - angle)))])

    def local_peak_near(self, angle: float, half_width: float) -> float:
        """Angle of the strongest sample within ±half_width of ``angle``."""
        mask = np.abs(self.angles - angle) <= half_width
        index = np.flatnonzero(mask)[int(np.argmax(self.power[mask]))]
        return float(self.angles[index])


class SamplingDemoResult(FrozenModel):
    curves: tuple[SpectralCurve, ...]

    def curve(self, panel: str, label: str) -> SpectralCurve:
        for curve in self.curves:
            if curve.panel == panel and curve.label == label:
                return curve
        raise KeyError(f"{panel}/{label}")

    def to_csv(self) -> str:
        return csvdumps(
            ("panel", "label", "angle_deg", "normalized_power"),
            (
                (curve.panel, curve.label, math.degrees(float(a)), float(p))
                for curve in self.curves
                for a, p in zip(curve.angles, curve.power, strict=True)
            ),
        )


class MeasurementPanel(FrozenModel):
    """Simulated and linearized ỹ at one LO ratio, plus the estimate.

    ``estimated_angles`` is all NaN when the estimator failed.
    """

    lo_ratio: float
    positions: Annotated[NDFloat, Field(description="window centers, m")]
    simulated: NDFloat
    linear: NDFloat
    true_angles: Annotated[NDFloat, Field(description="rad")]
    estimated_angles: Annotated[NDFloat, Field(description="rad")]

    @model_validator(mode="after")
    def check_lengths(self) -> Self:
        k = len(self.positions)
        if len(self.simulated) != k or len(self.linear) != k:
            raise ValueError("ỹ curves need one value per window")
        if len(self.estimated_angles) != len(self.true_angles):
            raise ValueError("one estimate per target")
        return self

    @property
    def normalized_residual(self) -> float:
        """RMS(simulated − linear) / RMS(linear)."""
        scale = float(np.sqrt(np.mean(self.linear**2)))
        misfit = float(np.sqrt(np.mean((self.simulated - self.linear) ** 2)))
        return misfit / scale if scale > 0.0 else math.inf


class MeasurementDemoResult(FrozenModel):
    panels: tuple[MeasurementPanel, ...]

    def panel(self, lo_ratio: float) -> MeasurementPanel:
        for panel in self.panels:
            if math.isclose(panel.lo_ratio, lo_ratio):
                return panel
        raise KeyError(lo_ratio)

    def to_csv(self) -> str:
        return csvdumps(
            ("lo_ratio", "j", "x_j_m", "y_tilde_simulated", "y_tilde_linear"),
            (
                (panel.lo_ratio, j, float(x), float(sim), float(lin))
                for panel in self.panels
                for j, (x, sim, lin) in enumerate(
                    zip(
                        panel.positions,
                        panel.simulated,
                        panel.linear,
                        strict=True,
                    ),
                    start=1,
                )
            ),
        )

    def doas_to_csv(self) -> str:
        return csvdumps(
            ("lo_ratio", "i", "true_deg", "estimated_deg"),
            (
                (panel.lo_ratio, i, math.degrees(t), math.degrees(e))
                for panel in self.panels
                for i, (t, e) in enumerate(
                    zip(
                        panel.true_angles,
                        panel.estimated_angles,
                        strict=True,
                    ),
                    start=1,
                )
            ),
        )


class LengthSweepResult(FrozenModel):
    cell_lengths: Annotated[NDFloat, Field(description="in wavelengths")]
    angles: Annotated[NDFloat, Field(description="rad")]
    channel_counts: tuple[int, ...]
    crlb_std: Annotated[
        NDFloat,
        Field(description="rad, lengths x angles"),
    ]

    def to_csv(self) -> str:
        return csvdumps(
            (
                "cell_length_wavelengths",
                "channel_count",
                "angle_deg",
                "crlb_std_deg",
            ),
            (
                (
                    float(length),
                    count,
                    math.degrees(float(theta)),
                    math.degrees(float(self.crlb_std[i, j])),
                )
                for i, (length, count) in enumerate(
                    zip(self.cell_lengths, self.channel_counts, strict=True),
                )
                for j, theta in enumerate(self.angles)
            ),
        )
