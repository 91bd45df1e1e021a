"""Desk-scale studies: linearization, Monte Carlo sweeps, bounds, demos."""

import logging
import math
from collections.abc import Mapping, Sequence

import numpy as np
from pydantic import ValidationError

from .. import crlb, estimation, physics, sensing
from ..exc import DomainError, InvalidModelInput
from ..models.atomic import AtomicParams
from ..models.estimation import PronyConfig
from ..models.experiments import (
    LengthSweepResult,
    LinearizationCheck,
    MeasurementDemoResult,
    MeasurementPanel,
    ResidualSummary,
    SamplingDemoConfig,
    SamplingDemoResult,
    ScenarioConfig,
    SpectralCurve,
    SweepAxis,
    SweepResult,
)
from ..models.geometry import SensorGeometry
from ..models.measurement import MeasurementSource
from ..models.scene import RfScene
from ..typedefs import FloatArray
from . import presets
from .montecarlo import derive_seed, mc_rmse

logger = logging.getLogger(__name__)


def _summary(
    params: AtomicParams,
    scene: RfScene,
    grid: FloatArray,
) -> ResidualSummary:
    residual = physics.linearization_residual(params, scene, grid)
    return ResidualSummary(
        lo_ratio=scene.lo_dominance_ratio,
        rms=residual.rms,
        sup=residual.sup,
        modulation=residual.modulation,
        normalized_rms=residual.normalized_rms,
        normalized_sup=residual.normalized_sup,
    )


def run_linearization_check(
    params: AtomicParams,
    scene_weak: RfScene,
    scene_strong: RfScene,
    grid: FloatArray,
) -> LinearizationCheck:
    """Exact and linearized α for a weak and a strong LO."""
    if (
        scene_weak.signals != scene_strong.signals
        or scene_weak.carrier_freq != scene_strong.carrier_freq
    ):
        raise InvalidModelInput("the two scenes may differ only in A_0")
    grid = np.asarray(grid, dtype=np.float64)
    check = LinearizationCheck(
        positions=grid,
        exact_weak=physics.absorption_exact(params, scene_weak, grid),
        lin_weak=physics.absorption_linearized(params, scene_weak, grid),
        exact_strong=physics.absorption_exact(params, scene_strong, grid),
        lin_strong=physics.absorption_linearized(params, scene_strong, grid),
        weak=_summary(params, scene_weak, grid),
        strong=_summary(params, scene_strong, grid),
    )
    logger.info(
        "normalized RMS residual %.3g (weak) vs %.3g (strong)",
        check.weak.normalized_rms,
        check.strong.normalized_rms,
    )
    return check


def _crlb_std(
    scene: RfScene,
    geometry: SensorGeometry,
    params: AtomicParams,
    noise_sigma: float,
) -> float:
    """Root-mean-square of the per-target bounds; NaN if none applies."""
    if noise_sigma <= 0.0 or scene.signal_count == 0:
        return math.nan
    try:
        report = crlb.crlb_report(
            crlb.scene_fim_inputs(
                scene,
                geometry,
                params,
                noise_sigma=noise_sigma,
            ),
            scene.angles,
            scene.wavenumber,
        )
    except DomainError as err:
        logger.warning("no bound for this cell: %s", err)
        return math.nan
    return float(np.sqrt(np.mean(report.per_target_std**2)))


def _nominal_sigma(
    params: AtomicParams,
    scene: RfScene,
    window_width: float,
    snr_db: float,
) -> float:
    """σ from the per-channel power Σ(𝒜_i ℓ)²/2, independent of K."""
    amps = physics.effective_amplitudes(params, scene)
    power = float(np.sum((amps * window_width) ** 2)) / 2.0
    return math.sqrt(power / 10.0 ** (snr_db / 10.0))


def _signal_amplitude(scene: RfScene) -> float:
    if scene.signals:
        return float(scene.amplitudes[0])
    return presets.SignalAmplitude


def _lo_ratio(scene: RfScene) -> float:
    ratio = scene.lo_dominance_ratio
    return presets.DefaultLoRatio if math.isinf(ratio) else ratio


def _like(config: ScenarioConfig, angles_deg: Sequence[float]) -> RfScene:
    """Scene with the config's amplitudes, LO and carrier at new angles."""
    return presets.scene_from_degrees(
        angles_deg,
        amplitude=_signal_amplitude(config.scene),
        lo_ratio=_lo_ratio(config.scene),
        lo_angle_deg=math.degrees(config.scene.lo.angle),
        carrier_freq=config.scene.carrier_freq,
    )


def run_lo_ratio_sweep(
    config: ScenarioConfig,
    ratios: Sequence[float] | None = None,
) -> SweepResult:
    """RMSE against A_0/ΣA_i on the non-linearized measurement path.

    The last cell runs the full fluorescence simulation. At p = 2N every
    cell uses the real-tone predictor.
    """
    values = tuple(
        ratios
        or config.sweep_values(SweepAxis.LoRatio)
        or presets.LoRatios,
    )
    source = config.source
    if source is MeasurementSource.AnalyticModel:
        logger.info("the linear model ignores the LO ratio; using α_exact")
        source = MeasurementSource.ExactAbsorption
    prony = config.prony
    if prony.target_count and prony.model_order == 2 * prony.target_count:
        prony = prony.model_copy(update={"real_tones": True})
    rmse, failures = [], []
    for cell, ratio in enumerate(values):
        smoke = cell == len(values) - 1
        scenario = config.model_copy(
            update={
                "scene": config.scene.with_lo_ratio(ratio),
                "prony": prony,
                "source": MeasurementSource.SimulatedFluorescence
                if smoke
                else source,
            },
        )
        result = mc_rmse(scenario, cell_index=cell)
        logger.info(
            "LO ratio %g: RMSE %.4g deg, %d failures",
            ratio,
            math.degrees(result.rmse),
            result.failures,
        )
        rmse.append(result.rmse)
        failures.append(result.failures)
    return SweepResult(
        axis=SweepAxis.LoRatio,
        values=values,
        rmse=rmse,
        trials=config.trials,
        failures=tuple(failures),
        smoke_value=values[-1],
    )


def run_measurement_demo(
    config: ScenarioConfig,
    ratios: Sequence[float] | None = None,
) -> MeasurementDemoResult:
    """Simulated ỹ against the linear prediction, with the Prony estimate.

    One panel per LO ratio; ỹ comes from the full fluorescence path with
    noise at the scenario SNR.
    """
    values = tuple(
        ratios
        or config.sweep_values(SweepAxis.LoRatio)
        or presets.MeasurementDemoRatios,
    )
    geometry = config.geometry
    sensing.check_sampling(geometry, config.scene.wavelength)
    panels = []
    for cell, ratio in enumerate(values):
        scene = config.scene.with_lo_ratio(ratio)
        simulated = sensing.synthesize_measurement(
            scene,
            geometry,
            config.params,
            MeasurementSource.SimulatedFluorescence,
        )
        if config.snr_db is not None:
            simulated = sensing.add_noise(
                simulated,
                config.snr_db,
                derive_seed(config.base_seed, cell, 0),
            )
        linear = sensing.predicted_measurements(scene, geometry, config.params)
        truth = np.sort(scene.angles)
        try:
            result = estimation.estimate_doa(
                simulated,
                scene.wavenumber,
                scene.lo.angle,
                config.prony,
            )
            estimates = np.sort(result.doas)
        except DomainError as err:
            logger.warning("LO ratio %g: estimation failed: %s", ratio, err)
            estimates = np.full(len(truth), math.nan)
        if len(estimates) != len(truth):
            estimates = np.full(len(truth), math.nan)
        panel = MeasurementPanel(
            lo_ratio=ratio,
            positions=geometry.centers,
            simulated=simulated.values,
            linear=linear.values,
            true_angles=truth,
            estimated_angles=estimates,
        )
        logger.info(
            "LO ratio %g: normalized misfit %.3g, estimates %s deg",
            ratio,
            panel.normalized_residual,
            np.round(np.degrees(estimates), 3),
        )
        panels.append(panel)
    return MeasurementDemoResult(panels=tuple(panels))

def run_snr_sweep(
    config: ScenarioConfig,
    scenes: Mapping[str, Sequence[float]] = presets.SnrPresets,
    snr_values: Sequence[float] | None = None,
) -> dict[str, SweepResult]:
    """RMSE against SNR for each preset, with the bound for single targets.

    The lowest-SNR cell of every preset uses the fluorescence simulation.
    """
    values = tuple(
        snr_values
        or config.sweep_values(SweepAxis.SnrDb)
        or presets.SnrGrid,
    )
    results: dict[str, SweepResult] = {}
    for index, (name, angles) in enumerate(scenes.items()):
        scene = _like(config, angles)
        n = scene.signal_count
        prony = PronyConfig(
            model_order=2 * n,
            target_count=n,
            unit_circle_tolerance=config.prony.unit_circle_tolerance,
        )
        base = config.model_copy(
            update={
                "scene": scene,
                "prony": prony,
                "source": MeasurementSource.AnalyticModel,
            },
        )
        clean = sensing.predicted_measurements(
            scene,
            config.geometry,
            config.params,
        )
        rmse, bounds, failures = [], [], []
        for cell, snr in enumerate(values):
            smoke = cell == 0
            scenario = base.model_copy(
                update={
                    "snr_db": snr,
                    "source": MeasurementSource.SimulatedFluorescence
                    if smoke
                    else MeasurementSource.AnalyticModel,
                },
            )
            result = mc_rmse(
                scenario,
                cell_index=index * len(values) + cell,
                clean=None if smoke else clean,
            )
            rmse.append(result.rmse)
            failures.append(result.failures)
            bounds.append(
                _crlb_std(
                    scene,
                    config.geometry,
                    config.params,
                    sensing.noise_sigma_for_snr(clean.values, snr),
                )
                if n == 1
                else math.nan,
            )
        results[name] = SweepResult(
            axis=SweepAxis.SnrDb,
            values=values,
            rmse=rmse,
            crlb_std=bounds if n == 1 else None,
            trials=config.trials,
            failures=tuple(failures),
            label=name,
            smoke_value=values[0],
        )
        logger.info("SNR sweep %s done", name)
    return results


def run_geometry_sweep(
    config: ScenarioConfig,
    axis: SweepAxis,
    values: Sequence[float] | None = None,
) -> SweepResult:
    """RMSE and bound against Δx or ℓ (in RF wavelengths) at fixed L."""
    if axis not in (SweepAxis.SamplingInterval, SweepAxis.WindowWidth):
        raise InvalidModelInput(f"{axis} is not a window-geometry axis")
    cells = tuple(values or config.sweep_values(axis) or ())
    if not cells:
        raise InvalidModelInput(f"no values given for {axis}")
    wavelength = config.scene.wavelength
    current = config.geometry
    rmse, bounds, failures = [], [], []
    for cell, value in enumerate(cells):
        spacing, width = current.spacing, current.window_width
        if axis is SweepAxis.SamplingInterval:
            spacing = value * wavelength
        else:
            width = value * wavelength
        try:
            geometry = SensorGeometry.fitted(
                current.cell_length,
                width,
                spacing,
                grid_points_per_rf_wavelength=(
                    current.grid_points_per_rf_wavelength
                ),
            )
        except ValidationError as err:
            raise InvalidModelInput(
                f"{axis} = {value:g} λ leaves no valid window layout: "
                f"{err.errors()[0]['msg']}",
            ) from err
        sensing.check_sampling(geometry, wavelength)
        scenario = config.model_copy(
            update={
                "geometry": geometry,
                "source": MeasurementSource.SimulatedFluorescence
                if cell == 0
                else config.source,
            },
        )
        clean = sensing.predicted_measurements(
            config.scene,
            geometry,
            config.params,
        )
        result = mc_rmse(scenario, cell_index=cell)
        rmse.append(result.rmse)
        failures.append(result.failures)
        bounds.append(
            math.nan
            if config.snr_db is None
            else _crlb_std(
                config.scene,
                geometry,
                config.params,
                sensing.noise_sigma_for_snr(clean.values, config.snr_db),
            ),
        )
    return SweepResult(
        axis=axis,
        values=cells,
        rmse=rmse,
        crlb_std=bounds,
        trials=config.trials,
        failures=tuple(failures),
        smoke_value=cells[0],
    )


def run_length_sweep(
    config: ScenarioConfig,
    lengths: Sequence[float] | None = None,
    angles_deg: Sequence[float] = presets.LengthAngles,
    snr_db: float = presets.LengthSnrDb,
) -> LengthSweepResult:
    """CRLB std against L/λ for single targets at fixed Δx and ℓ."""
    values = tuple(
        lengths
        or config.sweep_values(SweepAxis.CellLength)
        or presets.LengthGrid,
    )
    wavelength = config.scene.wavelength
    width = config.geometry.window_width
    spacing = config.geometry.spacing
    scenes = [_like(config, [angle]) for angle in angles_deg]
    sigma = _nominal_sigma(config.params, scenes[0], width, snr_db)

    counts: list[int] = []
    table = np.empty((len(values), len(scenes)))
    for i, length in enumerate(values):
        geometry = SensorGeometry.fitted(length * wavelength, width, spacing)
        counts.append(geometry.channel_count)
        for j, scene in enumerate(scenes):
            report = crlb.crlb_report(
                crlb.scene_fim_inputs(
                    scene,
                    geometry,
                    config.params,
                    noise_sigma=sigma,
                ),
                scene.angles,
                scene.wavenumber,
            )
            table[i, j] = report.per_target_std[0]
        logger.debug("L = %g λ, K = %d", length, geometry.channel_count)
    return LengthSweepResult(
        cell_lengths=values,
        angles=np.radians(angles_deg),
        channel_counts=tuple(counts),
        crlb_std=table,
    )


def condition_number_sweep(
    config: ScenarioConfig,
    separations_deg: Sequence[float],
    center_deg: float = 15.0,
    snr_db: float = 30.0,
) -> FloatArray:
    """Effective-FIM condition number of a pair against its separation."""
    conditions = []
    for separation in separations_deg:
        scene = _like(
            config,
            [center_deg - separation / 2.0, center_deg + separation / 2.0],
        )
        sigma = _nominal_sigma(
            config.params,
            scene,
            config.geometry.window_width,
            snr_db,
        )
        inputs = crlb.scene_fim_inputs(
            scene,
            config.geometry,
            config.params,
            noise_sigma=sigma,
        )
        fim = crlb.fisher_information(
            crlb.mean_jacobian(inputs),
            inputs.covariance,
        )
        effective = crlb.effective_fim(fim, inputs.target_count)
        conditions.append(float(np.linalg.cond(effective)))
    return np.asarray(conditions)


def spectral_power(
    values: FloatArray,
    centers: FloatArray,
    wavenumber: float,
    lo_angle: float,
    angles: FloatArray,
) -> FloatArray:
    """|Σ_j ỹ_j exp(−iΔk(θ) x_j)|² / K² over candidate angles θ."""
    dk = wavenumber * (math.sin(lo_angle) - np.sin(np.asarray(angles)))
    steering = np.exp(-1j * np.outer(dk, centers))
    power = np.abs(steering @ values) ** 2 / len(centers) ** 2
    return np.asarray(power, dtype=np.float64)


def _panel(
    name: str,
    cases: Sequence[tuple[str, SensorGeometry]],
    scene: RfScene,
    params: AtomicParams,
    angles: FloatArray,
) -> list[SpectralCurve]:
    raw = []
    for _, geometry in cases:
        sensing.check_sampling(geometry, scene.wavelength)
        measurement = sensing.predicted_measurements(scene, geometry, params)
        raw.append(
            spectral_power(
                measurement.values,
                geometry.centers,
                scene.wavenumber,
                scene.lo.angle,
                angles,
            ),
        )
    peak = max(float(np.max(power)) for power in raw)
    return [
        SpectralCurve(
            panel=name,
            label=label,
            target_angle=float(scene.angles[0]),
            angles=angles,
            power=power / peak,
            geometry=geometry,
        )
        for (label, geometry), power in zip(cases, raw, strict=True)
    ]


def run_sampling_demo(
    demo: SamplingDemoConfig,
    config: ScenarioConfig,
) -> SamplingDemoResult:
    """Spectral power for the aliasing and window-null demonstrations.

    Curves of a panel share one normalization, the panel maximum.
    """
    wavelength = config.scene.wavelength
    length = demo.cell_length
    angles = np.asarray(presets.angle_grid(demo.angle_step))

    def geometry(width: float, spacing: float) -> SensorGeometry:
        return SensorGeometry.from_wavelengths(
            wavelength,
            length,
            width,
            spacing,
        )

    aliasing = _panel(
        "aliasing",
        [
            (f"spacing_{dx:g}", geometry(demo.aliasing_window, dx))
            for dx in demo.aliasing_spacings
        ],
        _like(config, [demo.aliasing_target]),
        config.params,
        angles,
    )
    null = _panel(
        "null",
        [
            (f"width_{w:g}", geometry(w, demo.null_spacing))
            for w in demo.null_widths
        ],
        _like(config, [demo.null_target]),
        config.params,
        angles,
    )
    return SamplingDemoResult(curves=(*aliasing, *null))
