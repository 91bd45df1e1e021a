"""Interference field, EIT susceptibility and local absorption.

All quantities are SI with angular rates in rad/s. Every function is
vectorized over the position or Rabi-frequency argument.
"""

import logging
import math
from typing import Final, NamedTuple

import numpy as np

from .exc import (
    DegenerateDetuning,
    InvalidModelInput,
    SingularPoint,
)
from .models.atomic import AtomicParams
from .models.scene import RfScene
from .typedefs import ComplexArray, FloatArray, FloatLike

logger = logging.getLogger(__name__)

LoDominanceFloor: Final[float] = 10.0
IdentityTolerance: Final[float] = 1e-9


class LinearizationConstants(NamedTuple):
    C: float
    beta: float


class LinearizationResidual(NamedTuple):
    rms: float
    sup: float
    modulation: float

    @staticmethod
    def _normalize(value: float, scale: float) -> float:
        if scale == 0.0:
            return 0.0 if value == 0.0 else math.inf
        return value / scale

    @property
    def normalized_rms(self) -> float:
        return self._normalize(self.rms, self.modulation)

    @property
    def normalized_sup(self) -> float:
        return self._normalize(self.sup, self.modulation)


def rabi_frequency(
    params: AtomicParams,
    field_magnitude: FloatLike,
) -> FloatLike:
    magnitude = np.asarray(field_magnitude, dtype=np.float64)
    if np.any(magnitude < 0.0):
        raise InvalidModelInput("field magnitude must be non-negative")
    rabi = params.rf_dipole * magnitude / params.reduced_planck
    return float(rabi) if rabi.ndim == 0 else rabi


def total_field(scene: RfScene, x: FloatLike) -> ComplexArray:
    """Directly summed complex phasor of LO and signals."""
    x = np.asarray(x, dtype=np.float64)
    k = scene.wavenumber
    field = scene.lo.amplitude * np.exp(
        1j * (k * x * math.sin(scene.lo.angle) + scene.lo.phase),
    )
    for wave in scene.signals:
        field = field + wave.amplitude * np.exp(
            1j * (k * x * math.sin(wave.angle) + wave.phase),
        )
    return np.asarray(field, dtype=np.complex128)


def field_intensity(scene: RfScene, x: FloatLike) -> FloatArray:
    """|E_RF(x)|² assembled term by term.

    LO self-term, signal self-terms, signal-LO beats and every
    signal-signal cross-term.
    """
    x = np.asarray(x, dtype=np.float64)
    a0 = scene.lo.amplitude
    amps = scene.amplitudes
    dk = scene.spatial_frequencies
    dphi = scene.phase_offsets
    k = scene.wavenumber

    s = np.full_like(x, a0**2 + float(np.sum(amps**2)))
    for a, w, p in zip(amps, dk, dphi, strict=True):
        s = s + 2.0 * a0 * a * np.cos(w * x - p)
    waves = scene.signals
    for i in range(len(waves)):
        for ell in range(i + 1, len(waves)):
            kx = k * (math.sin(waves[i].angle) - math.sin(waves[ell].angle))
            s = s + 2.0 * waves[i].amplitude * waves[ell].amplitude * np.cos(
                kx * x + (waves[i].phase - waves[ell].phase),
            )
    return np.maximum(s, 0.0)


def susceptibility_full(
    params: AtomicParams,
    rf_rabi: FloatLike,
    *,
    decay_31: float = 0.0,
    decay_41: float = 0.0,
) -> ComplexArray:
    """Four-level continued-fraction susceptibility."""
    rabi = np.asarray(rf_rabi, dtype=np.float64)
    dp, dc, drf = (
        params.probe_detuning,
        params.coupling_detuning,
        params.rf_detuning,
    )
    inner = complex(decay_41, -(dp + dc + drf))
    if inner == 0.0:
        raise DegenerateDetuning("the Rydberg-Rydberg denominator")
    middle = complex(decay_31, -(dp + dc)) + (rabi**2 / 4.0) / inner
    if np.any(middle == 0.0):
        raise DegenerateDetuning("the coupling denominator")
    outer = complex(params.decay_21, -dp) + params.coupling_quarter / middle
    if np.any(outer == 0.0):
        raise DegenerateDetuning("the probe denominator")
    return np.asarray(
        1j * params.susceptibility_prefactor / outer,
        dtype=np.complex128,
    )


def susceptibility_simplified(
    params: AtomicParams,
    rf_rabi: FloatLike,
) -> ComplexArray:
    """On-resonance weak-probe limit with negligible Rydberg decay."""
    if params.probe_detuning != 0.0:
        raise InvalidModelInput(
            "the simplified susceptibility assumes probe_detuning = 0",
        )
    rabi = np.asarray(rf_rabi, dtype=np.float64)
    dc = params.coupling_detuning
    inner = -1j * (dc + params.rf_detuning)
    middle = -1j * dc + (rabi**2 / 4.0) / inner
    if np.any(middle == 0.0):
        raise DegenerateDetuning("the coupling denominator")
    outer = params.decay_21 + params.coupling_quarter / middle
    return np.asarray(
        1j * params.susceptibility_prefactor / outer,
        dtype=np.complex128,
    )


def lin_constants(params: AtomicParams) -> LinearizationConstants:
    detuning = params.coupling_detuning + params.rf_detuning
    if detuning == 0.0:
        raise DegenerateDetuning("β (Δ_c + Δ_RF = 0)")
    C = (
        params.susceptibility_prefactor
        * params.probe_wavenumber
        * params.decay_21
    )
    beta = params.rf_dipole**2 / (4.0 * params.reduced_planck**2 * detuning)
    return LinearizationConstants(C=C, beta=beta)


def _detuning_gap(params: AtomicParams, s: FloatLike) -> FloatArray:
    """Δ_c − β s, refusing the singular point."""
    s = np.asarray(s, dtype=np.float64)
    gap = params.coupling_detuning - lin_constants(params).beta * s
    floor = np.finfo(np.float64).eps * abs(params.coupling_detuning)
    singular = np.abs(gap) <= floor
    if np.any(singular):
        raise SingularPoint(float(np.ravel(s)[np.argmax(np.ravel(singular))]))
    return gap


def f_of_s(params: AtomicParams, s: FloatLike) -> FloatLike:
    gap = _detuning_gap(params, s)
    f = 1.0 / (params.decay_21**2 + (params.coupling_quarter / gap) ** 2)
    return float(f) if f.ndim == 0 else f


def f_prime(params: AtomicParams, s: FloatLike) -> FloatLike:
    gap = _detuning_gap(params, s)
    beta = lin_constants(params).beta
    a = params.coupling_quarter
    f = 1.0 / (params.decay_21**2 + (a / gap) ** 2)
    df = -2.0 * beta * a**2 / gap**3 * f**2
    return float(df) if df.ndim == 0 else df


def absorption_identity_discrepancy(
    params: AtomicParams,
    s: FloatLike,
) -> float:
    """Largest relative gap between C·f(s) and k_pr·Im χ at intensity s."""
    s = np.asarray(s, dtype=np.float64)
    via_f = lin_constants(params).C * np.asarray(f_of_s(params, s))
    rabi = rabi_frequency(params, np.sqrt(s))
    via_chi = params.probe_wavenumber * np.imag(
        susceptibility_simplified(params, rabi),
    )
    discrepancy = float(np.max(np.abs(via_f - via_chi) / np.abs(via_chi)))
    if discrepancy > IdentityTolerance:
        logger.warning(
            "C·f(s) and k_pr·Im χ disagree by %.3g (relative)",
            discrepancy,
        )
    return discrepancy


def absorption_exact(
    params: AtomicParams,
    scene: RfScene,
    x: FloatLike,
) -> FloatArray:
    s = field_intensity(scene, x)
    _detuning_gap(params, s)
    rabi = rabi_frequency(params, np.sqrt(s))
    chi = susceptibility_simplified(params, rabi)
    return np.asarray(params.probe_wavenumber * np.imag(chi), dtype=np.float64)


def dc_absorption(params: AtomicParams, scene: RfScene) -> float:
    """α_DC = C·f(A_0²)."""
    s0 = scene.lo.amplitude**2
    return lin_constants(params).C * float(f_of_s(params, s0))


def effective_amplitudes(params: AtomicParams, scene: RfScene) -> FloatArray:
    """𝒜_i = 2 C A_0 A_i f′(A_0²)."""
    ratio = scene.lo_dominance_ratio
    if ratio < LoDominanceFloor:
        logger.warning(
            "LO dominance ratio %.3g is below %.3g; "
            "the linearized model is inaccurate",
            ratio,
            LoDominanceFloor,
        )
    a0 = scene.lo.amplitude
    slope = float(f_prime(params, a0**2))
    C = lin_constants(params).C
    return np.asarray(2.0 * C * a0 * scene.amplitudes * slope)


def absorption_linearized(
    params: AtomicParams,
    scene: RfScene,
    x: FloatLike,
) -> FloatArray:
    x = np.asarray(x, dtype=np.float64)
    absorption_identity_discrepancy(params, scene.lo.amplitude**2)
    alpha = np.full_like(x, dc_absorption(params, scene))
    for amp, w, p in zip(
        effective_amplitudes(params, scene),
        scene.spatial_frequencies,
        scene.phase_offsets,
        strict=True,
    ):
        alpha = alpha + amp * np.cos(w * x - p)
    return alpha


def linearization_residual(
    params: AtomicParams,
    scene: RfScene,
    x: FloatLike,
) -> LinearizationResidual:
    if scene.signal_count == 0:
        # both sides are α_DC
        return LinearizationResidual(rms=0.0, sup=0.0, modulation=0.0)
    residual = absorption_exact(params, scene, x) - absorption_linearized(
        params,
        scene,
        x,
    )
    modulation = float(np.sum(np.abs(effective_amplitudes(params, scene))))
    return LinearizationResidual(
        rms=float(np.sqrt(np.mean(residual**2))),
        sup=float(np.max(np.abs(residual))),
        modulation=modulation,
    )


def scattering_rate(
    gamma: float,
    intensity_ratio: FloatLike,
    detuning_ratio: FloatLike = 0.0,
) -> FloatLike:
    """Two-level photon scattering rate for saturation I/I_sat."""
    ratio = np.asarray(intensity_ratio, dtype=np.float64)
    if np.any(ratio < 0.0):
        raise InvalidModelInput("intensity ratio must be non-negative")
    detuning = np.asarray(detuning_ratio, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        rate = gamma / 2.0 * ratio / (1.0 + ratio + 4.0 * detuning**2)
    # saturation limit
    rate = np.where(np.isposinf(ratio), gamma / 2.0, rate)
    return float(rate) if rate.ndim == 0 else rate
