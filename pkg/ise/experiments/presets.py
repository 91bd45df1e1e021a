"""Reference scenes and grids for the bundled studies."""

import math
from collections.abc import Mapping, Sequence
from types import MappingProxyType
from typing import Final

from ..models.atomic import AtomicParams
from ..models.estimation import PronyConfig
from ..models.experiments import ScenarioConfig
from ..models.geometry import SensorGeometry
from ..models.measurement import MeasurementSource
from ..models.scene import PlaneWave, RfScene

CarrierFrequency: Final[float] = 2.03e9
LoAngleDeg: Final[float] = 90.0
SignalAmplitude: Final[float] = 5e-7
DefaultLoRatio: Final[float] = 20.0

TwoTargetAngles: Final[tuple[float, float]] = (-30.0, 45.0)
LoRatios: Final[tuple[float, ...]] = (0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0)
MeasurementDemoRatios: Final[tuple[float, ...]] = (20.0, 1.0)
SnrGrid: Final[tuple[float, ...]] = tuple(float(v) for v in range(10, 55, 5))
SnrPresets: Final[Mapping[str, tuple[float, ...]]] = MappingProxyType(
    {
        "single": (15.0,),
        "wide_pair": (-15.0, 15.0),
        "close_pair": (15.0, 20.0),
    },
)
LengthGrid: Final[tuple[float, ...]] = (1.0, 2.0, 4.0, 8.0)
LengthAngles: Final[tuple[float, ...]] = (0.0, 30.0, 60.0)
LengthSnrDb: Final[float] = 30.0

# integrated-power scene: 𝒜L stays small at L = 0.3λ
IntegratedLoAmplitude: Final[float] = 0.0137
IntegratedSignalAmplitude: Final[float] = IntegratedLoAmplitude / 10.0


def scene_from_degrees(
    angles_deg: Sequence[float],
    *,
    amplitude: float = SignalAmplitude,
    lo_ratio: float = DefaultLoRatio,
    phases_deg: Sequence[float] | None = None,
    lo_angle_deg: float = LoAngleDeg,
    carrier_freq: float = CarrierFrequency,
) -> RfScene:
    phases = phases_deg or [0.0] * len(angles_deg)
    signals = tuple(
        PlaneWave.from_degrees(amplitude, angle, phase)
        for angle, phase in zip(angles_deg, phases, strict=True)
    )
    total = amplitude * len(signals)
    lo = PlaneWave.from_degrees(
        lo_ratio * (total or SignalAmplitude),
        lo_angle_deg,
    )
    return RfScene(lo=lo, signals=signals, carrier_freq=carrier_freq)


def default_geometry(
    wavelength: float,
    cell_length: float = 4.0,
    window_width: float = 0.25,
    spacing: float = 0.25,
) -> SensorGeometry:
    """L = 4λ, ℓ = Δx = λ/4, packed from x = 0 (K = 16)."""
    return SensorGeometry.from_wavelengths(
        wavelength,
        cell_length,
        window_width,
        spacing,
    )


def two_target_scenario(
    *,
    snr_db: float | None = 30.0,
    trials: int = 100,
    base_seed: int = 0,
    source: MeasurementSource = MeasurementSource.AnalyticModel,
) -> ScenarioConfig:
    scene = scene_from_degrees(TwoTargetAngles)
    return ScenarioConfig(
        scene=scene,
        geometry=default_geometry(scene.wavelength),
        prony=PronyConfig.for_targets(len(TwoTargetAngles)),
        params=AtomicParams(),
        snr_db=snr_db,
        trials=trials,
        base_seed=base_seed,
        source=source,
    )


def integrated_power_scene(angle_deg: float = 0.0) -> RfScene:
    return RfScene(
        lo=PlaneWave.from_degrees(IntegratedLoAmplitude, LoAngleDeg),
        signals=(
            PlaneWave.from_degrees(IntegratedSignalAmplitude, angle_deg),
        ),
        carrier_freq=CarrierFrequency,
    )


def angle_grid(step_deg: float = 0.25) -> list[float]:
    """[−90°, 90°] in radians at the given step."""
    count = round(180.0 / step_deg)
    return [math.radians(-90.0 + i * step_deg) for i in range(count + 1)]
