"""Probe propagation, fluorescence readout and the virtual window array."""

import logging
import math
from collections.abc import Sequence
from typing import Final

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.optimize import brentq

from . import physics
from .exc import (
    InvalidModelInput,
    NonPositiveFluorescence,
    WindowOutOfCell,
    ZeroSignalPower,
)
from .models.atomic import AtomicParams
from .models.geometry import SamplingReport, SensorGeometry
from .models.measurement import (
    FluorescenceProfile,
    MeasurementSource,
    MeasurementVector,
    SampledAbsorption,
)
from .models.scene import RfScene
from .typedefs import AbsorptionProfile, FloatArray, FloatLike

logger = logging.getLogger(__name__)

SpacingLimit: Final[float] = 0.25
WindowLimit: Final[float] = 0.5
_RelativeSlack: Final[float] = 1e-12


def propagate_probe(
    alpha: AbsorptionProfile,
    geometry: SensorGeometry,
    input_power: float = 1.0,
    *,
    rf_wavelength: float,
    kappa: float = 1.0,
) -> FluorescenceProfile:
    """Integrate dP/dx = −α P along the cell (Beer-Lambert)."""
    if input_power <= 0.0:
        raise InvalidModelInput("input power must be positive")
    x = geometry.grid(rf_wavelength)
    optical_depth = cumulative_trapezoid(
        np.asarray(alpha(x), dtype=np.float64),
        x,
        initial=0.0,
    )
    power = input_power * np.exp(-optical_depth)
    return FluorescenceProfile(
        positions=x,
        probe_power=power,
        fluorescence=kappa * power,
        kappa=kappa,
    )


def recover_alpha(profile: FluorescenceProfile) -> SampledAbsorption:
    """α̂(x) = −d/dx ln P_f(x), second order in the grid step."""
    fluorescence = profile.fluorescence
    bad = ~(np.isfinite(fluorescence) & (fluorescence > 0.0))
    if np.any(bad):
        index = int(np.argmax(bad))
        raise NonPositiveFluorescence(index, float(fluorescence[index]))
    values = -np.gradient(
        np.log(fluorescence / fluorescence[0]),
        profile.positions,
        edge_order=2,
    )
    return SampledAbsorption(positions=profile.positions, values=values)


def channel_measurements(
    alpha: SampledAbsorption,
    geometry: SensorGeometry,
) -> FloatArray:
    """y_j = ∫ w_j(x) α(x) dx for rectangular windows."""
    x, a = alpha.positions, alpha.values
    tol = _RelativeSlack * geometry.cell_length
    lowers, uppers = geometry.lower_edges, geometry.upper_edges
    y = np.empty(geometry.channel_count, dtype=np.float64)
    for j, (lo, hi) in enumerate(zip(lowers, uppers, strict=True)):
        if lo < x[0] - tol or hi > x[-1] + tol:
            raise WindowOutOfCell(j + 1, float(lo), float(hi))
        lo_c, hi_c = max(lo, x[0]), min(hi, x[-1])
        inside = (x > lo_c) & (x < hi_c)
        xs = np.concatenate(([lo_c], x[inside], [hi_c]))
        ys = np.concatenate(
            (np.interp([lo_c], x, a), a[inside], np.interp([hi_c], x, a)),
        )
        y[j] = trapezoid(ys, xs)
    return y


def calibrate(
    y: FloatArray,
    geometry: SensorGeometry,
    alpha_dc: float,
    *,
    source: MeasurementSource = MeasurementSource.SimulatedFluorescence,
) -> MeasurementVector:
    """ỹ_j = y_j − α_DC · ℓ."""
    y = np.asarray(y, dtype=np.float64)
    if len(y) != geometry.channel_count:
        raise InvalidModelInput(
            f"{len(y)} channel values for {geometry.channel_count} windows",
        )
    return MeasurementVector(
        values=y - alpha_dc * geometry.window_width,
        geometry=geometry,
        source=source,
    )


def window_transform(window_width: float, omega: FloatLike) -> FloatLike:
    """Fourier transform of a centered rectangle: 2 sin(ωℓ/2)/ω."""
    if window_width <= 0.0:
        raise InvalidModelInput("window width must be positive")
    omega = np.asarray(omega, dtype=np.float64)
    value = window_width * np.sinc(omega * window_width / (2.0 * math.pi))
    return float(value) if value.ndim == 0 else value


def mixture_mean(
    geometry: SensorGeometry,
    spatial_frequencies: Sequence[float] | FloatArray,
    phase_offsets: Sequence[float] | FloatArray,
    amplitudes: Sequence[float] | FloatArray,
) -> FloatArray:
    """Σ_i 𝒜_i ŵ_0(Δk_i) cos(Δk_i x_j − Δφ_i) at the centers."""
    centers = geometry.centers
    values = np.zeros_like(centers)
    for w, p, amp in zip(
        spatial_frequencies,
        phase_offsets,
        amplitudes,
        strict=True,
    ):
        gain = window_transform(geometry.window_width, w)
        values = values + amp * gain * np.cos(w * centers - p)
    return values


def predicted_measurements(
    scene: RfScene,
    geometry: SensorGeometry,
    params: AtomicParams,
) -> MeasurementVector:
    values = mixture_mean(
        geometry,
        scene.spatial_frequencies,
        scene.phase_offsets,
        physics.effective_amplitudes(params, scene),
    )
    return MeasurementVector(
        values=values,
        geometry=geometry,
        source=MeasurementSource.AnalyticModel,
    )


def synthesize_measurement(
    scene: RfScene,
    geometry: SensorGeometry,
    params: AtomicParams,
    source: MeasurementSource = MeasurementSource.AnalyticModel,
    *,
    kappa: float = 1.0,
) -> MeasurementVector:
    """Noiseless ỹ from the linear model, exact α, or full simulation."""
    if source is MeasurementSource.AnalyticModel:
        return predicted_measurements(scene, geometry, params)

    def alpha(x: FloatArray) -> FloatArray:
        return physics.absorption_exact(params, scene, x)

    if source is MeasurementSource.ExactAbsorption:
        x = geometry.grid(scene.wavelength)
        sampled = SampledAbsorption(positions=x, values=alpha(x))
    else:
        profile = propagate_probe(
            alpha,
            geometry,
            rf_wavelength=scene.wavelength,
            kappa=kappa,
        )
        sampled = recover_alpha(profile)
    return calibrate(
        channel_measurements(sampled, geometry),
        geometry,
        physics.dc_absorption(params, scene),
        source=source,
    )


def check_sampling(
    geometry: SensorGeometry,
    rf_wavelength: float,
) -> SamplingReport:
    """Spatial Nyquist (Δx ≤ λ/4) and window-null (ℓ < λ/2) checks."""
    if rf_wavelength <= 0.0:
        raise InvalidModelInput("RF wavelength must be positive")
    slack = _RelativeSlack * rf_wavelength
    report = SamplingReport(
        rf_wavelength=rf_wavelength,
        spacing=geometry.spacing,
        window_width=geometry.window_width,
        spacing_compliant=geometry.spacing
        <= SpacingLimit * rf_wavelength + slack,
        window_compliant=geometry.window_width < WindowLimit * rf_wavelength,
    )
    if not report.spacing_compliant:
        logger.warning(
            "sampling interval %.4g λ exceeds λ/4; frequencies alias",
            geometry.spacing / rf_wavelength,
        )
    if not report.window_compliant:
        logger.warning(
            "window width %.4g λ is not below λ/2; a window null is in band",
            geometry.window_width / rf_wavelength,
        )
    return report


def noise_sigma_for_snr(values: FloatArray, snr_db: float) -> float:
    """σ with σ² = var(ỹ) / 10^(SNR/10); zero at infinite SNR."""
    power = float(np.var(values))
    scale = float(np.max(np.abs(values))) if len(values) else 0.0
    if power <= (np.finfo(np.float64).eps * scale) ** 2:
        raise ZeroSignalPower("measurement has no signal variance")
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return math.sqrt(power / 10.0 ** (snr_db / 10.0))


def add_noise(
    measurement: MeasurementVector,
    snr_db: float,
    seed: int,
) -> MeasurementVector:
    if measurement.noise_sigma != 0.0:
        raise InvalidModelInput("noise can only be added to a clean vector")
    sigma = noise_sigma_for_snr(measurement.values, snr_db)
    if sigma == 0.0:
        return measurement.model_copy(update={"rng_seed": seed})
    rng = np.random.default_rng(seed)
    noisy = measurement.values + rng.normal(
        0.0,
        sigma,
        size=measurement.values.shape,
    )
    noisy.setflags(write=False)
    return measurement.model_copy(
        update={"values": noisy, "noise_sigma": sigma, "rng_seed": seed},
    )


def sinc_response(spatial_frequency: FloatLike, length: float) -> FloatLike:
    """∫_0^L cos(Δk x) dx = L sinc(Δk L), unnormalized sinc."""
    dk = np.asarray(spatial_frequency, dtype=np.float64)
    value = length * np.sinc(dk * length / math.pi)
    return float(value) if value.ndim == 0 else value


def integrated_absorption(
    scene: RfScene,
    params: AtomicParams,
    length: float,
) -> float:
    """y_1 over a single window covering [0, L], linearized single target."""
    if scene.signal_count != 1:
        raise InvalidModelInput("the integrated-power model needs N = 1")
    amp = float(physics.effective_amplitudes(params, scene)[0])
    dk = float(scene.spatial_frequencies[0])
    dphi = float(scene.phase_offsets[0])
    if dk == 0.0:
        modulation = length * math.cos(dphi)
    else:
        modulation = (math.sin(dk * length - dphi) + math.sin(dphi)) / dk
    return physics.dc_absorption(params, scene) * length + amp * modulation


def integrated_power_transmission(
    scene: RfScene,
    params: AtomicParams,
    length: float,
) -> float:
    return math.exp(-integrated_absorption(scene, params, length))


def first_sinc_extremum() -> float:
    """First positive root of tan u = u, written u cos u − sin u = 0."""
    return float(
        brentq(
            lambda u: u * math.cos(u) - math.sin(u),
            math.pi,
            1.5 * math.pi,
            xtol=1e-14,
        ),
    )


def monotonic_length_bound(rf_wavelength: float) -> float:
    """Largest L keeping T(θ) monotone over all angles: u₁ / (2k)."""
    return first_sinc_extremum() * rf_wavelength / (4.0 * math.pi)


def transmission_curve(
    scene: RfScene,
    params: AtomicParams,
    length: float,
    angles: FloatArray,
) -> FloatArray:
    """T(θ) for the single signal of ``scene`` swept over ``angles``."""
    if scene.signal_count != 1:
        raise InvalidModelInput("the integrated-power model needs N = 1")
    wave = scene.signals[0]
    return np.array(
        [
            integrated_power_transmission(
                scene.model_copy(
                    update={
                        "signals": (
                            wave.model_copy(update={"angle": float(theta)}),
                        ),
                    },
                ),
                params,
                length,
            )
            for theta in angles
        ],
    )


def is_strictly_monotone(values: FloatArray) -> bool:
    steps = np.diff(values)
    return bool(np.all(steps > 0.0) or np.all(steps < 0.0))
