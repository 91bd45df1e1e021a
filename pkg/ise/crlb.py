"""Fisher information and the Cramér-Rao bound on the DoAs.

Parameters are ordered (Δk_1..Δk_N, Δφ_1..Δφ_N, 𝒜_1..𝒜_N).
"""

import logging
import math
from typing import Final, NamedTuple

import numpy as np
import scipy.linalg
from scipy.integrate import simpson

from . import physics
from .exc import EndFireSingularity, SingularCovariance, SingularNuisanceBlock
from .models.atomic import AtomicParams
from .models.crlb import CrlbReport, FimInputs
from .models.geometry import SensorGeometry
from .models.scene import RfScene
from .sensing import window_transform
from .typedefs import FloatArray

logger = logging.getLogger(__name__)

EndFireGuard: Final[float] = 1e-9
_SeriesCutoff: Final[float] = 0.1


class WindowIntegrals(NamedTuple):
    c: FloatArray
    s: FloatArray
    t: FloatArray


def _first_moment(spatial_frequency: float, half_width: float) -> float:
    """∫_{−h}^{h} τ sin(Δk τ) dτ."""
    x = spatial_frequency * half_width
    h2 = half_width**2
    if abs(x) < _SeriesCutoff:
        return 2.0 * h2 * (x / 3 - x**3 / 30 + x**5 / 840 - x**7 / 45360)
    return 2.0 * h2 * (math.sin(x) / x**2 - math.cos(x) / x)


def cst_vectors(
    geometry: SensorGeometry,
    spatial_frequency: float,
    phase_offset: float,
) -> WindowIntegrals:
    """Closed-form c, s, t integrals over each rectangular window.

    c_j = ∫ cos(Δk x − Δφ), s_j = ∫ sin(Δk x − Δφ) and
    t_j = −∫ x sin(Δk x − Δφ), each over [x_j − ℓ/2, x_j + ℓ/2].
    """
    centers = geometry.centers
    u = spatial_frequency * centers - phase_offset
    area = float(window_transform(geometry.window_width, spatial_frequency))
    moment = _first_moment(spatial_frequency, geometry.window_width / 2.0)
    c = np.cos(u) * area
    s = np.sin(u) * area
    t = -(centers * np.sin(u) * area + np.cos(u) * moment)
    return WindowIntegrals(c=c, s=s, t=t)


def cst_vectors_quadrature(
    geometry: SensorGeometry,
    spatial_frequency: float,
    phase_offset: float,
    points: int = 10_001,
) -> WindowIntegrals:
    c, s, t = (np.empty(geometry.channel_count) for _ in range(3))
    for j, (lo, hi) in enumerate(
        zip(geometry.lower_edges, geometry.upper_edges, strict=True),
    ):
        x = np.linspace(lo, hi, points)
        arg = spatial_frequency * x - phase_offset
        c[j] = simpson(np.cos(arg), x=x)
        s[j] = simpson(np.sin(arg), x=x)
        t[j] = -simpson(x * np.sin(arg), x=x)
    return WindowIntegrals(c=c, s=s, t=t)


def _window_integrals(inputs: FimInputs) -> list[WindowIntegrals]:
    return [
        cst_vectors(inputs.geometry, float(w), float(p))
        for w, p in zip(
            inputs.spatial_frequencies,
            inputs.phase_offsets,
            strict=True,
        )
    ]


def mean_jacobian(inputs: FimInputs) -> FloatArray:
    """K×3N matrix [𝒜_i t_i | 𝒜_i s_i | c_i]."""
    k = inputs.geometry.channel_count
    if inputs.target_count == 0:
        return np.empty((k, 0))
    integrals = _window_integrals(inputs)
    amps = inputs.amplitudes
    return np.column_stack(
        [a * w.t for a, w in zip(amps, integrals, strict=True)]
        + [a * w.s for a, w in zip(amps, integrals, strict=True)]
        + [w.c for w in integrals],
    )


def _factor(covariance: FloatArray) -> tuple[FloatArray, bool]:
    try:
        return scipy.linalg.cho_factor(covariance, lower=True)
    except np.linalg.LinAlgError as err:
        raise SingularCovariance(
            "noise covariance is not positive definite",
        ) from err


def fisher_information(
    jacobian: FloatArray,
    covariance: FloatArray,
) -> FloatArray:
    """JᵀΣ⁻¹J through a Cholesky factorization of Σ."""
    weighted = scipy.linalg.cho_solve(_factor(covariance), jacobian)
    fim = jacobian.T @ weighted
    return (fim + fim.T) / 2.0


def fisher_information_blocks(inputs: FimInputs) -> FloatArray:
    """The same FIM assembled from the weighted inner-product blocks."""
    integrals = _window_integrals(inputs)
    n = inputs.target_count
    if n == 0:
        return np.empty((0, 0))
    factor = _factor(inputs.covariance)
    C = np.column_stack([w.c for w in integrals])
    S = np.column_stack([w.s for w in integrals])
    T = np.column_stack([w.t for w in integrals])

    def inner(u: FloatArray, v: FloatArray) -> FloatArray:
        return u.T @ scipy.linalg.cho_solve(factor, v)

    amps = inputs.amplitudes
    outer = np.outer(amps, amps)
    scale_rows = amps[:, np.newaxis]
    kk = outer * inner(T, T)
    kp = outer * inner(T, S)
    ka = scale_rows * inner(T, C)
    pp = outer * inner(S, S)
    pa = scale_rows * inner(S, C)
    aa = inner(C, C)
    return np.block(
        [
            [kk, kp, ka],
            [kp.T, pp, pa],
            [ka.T, pa.T, aa],
        ],
    )


def effective_fim(fim: FloatArray, target_count: int) -> FloatArray:
    """Schur complement of the nuisance block (Δφ, 𝒜)."""
    n = target_count
    kk = fim[:n, :n]
    ke = fim[:n, n:]
    ee = fim[n:, n:]
    if ee.size == 0:
        return kk.copy()
    try:
        solved = scipy.linalg.solve(ee, ke.T, assume_a="sym")
    except np.linalg.LinAlgError as err:
        raise SingularNuisanceBlock(
            "nuisance block of the FIM is singular",
        ) from err
    effective = kk - ke @ solved
    return (effective + effective.T) / 2.0


def crlb_theta(
    effective: FloatArray,
    angles: FloatArray,
    wavenumber: float,
) -> tuple[FloatArray, FloatArray]:
    """Angle-domain bound J⁻¹ I_eff⁻¹ J⁻ᵀ, J = diag(−k cos θ)."""
    angles = np.asarray(angles, dtype=np.float64)
    for theta in angles:
        if abs(theta) >= math.pi / 2.0 - EndFireGuard:
            raise EndFireSingularity(float(theta))
    try:
        inverse = scipy.linalg.inv(effective)
    except np.linalg.LinAlgError as err:
        raise SingularNuisanceBlock("effective FIM is singular") from err
    gain = wavenumber * np.cos(angles)
    bound = inverse / np.outer(gain, gain)
    bound = (bound + bound.T) / 2.0
    return bound, np.sqrt(np.diag(bound))


def single_target_variance(
    effective_information: float,
    angle: float,
    wavenumber: float,
) -> float:
    """var(θ̂) ≥ 1 / (k² cos²θ · I_eff)."""
    if abs(angle) >= math.pi / 2.0 - EndFireGuard:
        raise EndFireSingularity(angle)
    return 1.0 / (
        wavenumber**2 * math.cos(angle) ** 2 * effective_information
    )


def scene_fim_inputs(
    scene: RfScene,
    geometry: SensorGeometry,
    params: AtomicParams,
    *,
    noise_sigma: float,
) -> FimInputs:
    return FimInputs(
        geometry=geometry,
        spatial_frequencies=scene.spatial_frequencies,
        phase_offsets=scene.phase_offsets,
        amplitudes=physics.effective_amplitudes(params, scene),
        noise_sigma=noise_sigma,
    )


def crlb_report(
    inputs: FimInputs,
    angles: FloatArray,
    wavenumber: float,
) -> CrlbReport:
    for theta in np.asarray(angles, dtype=np.float64):
        if abs(theta) >= math.pi / 2.0 - EndFireGuard:
            raise EndFireSingularity(float(theta))
    fim = fisher_information(mean_jacobian(inputs), inputs.covariance)
    effective = effective_fim(fim, inputs.target_count)
    bound, std = crlb_theta(effective, angles, wavenumber)
    condition = float(np.linalg.cond(effective))
    logger.debug("effective FIM condition number %.3g", condition)
    return CrlbReport(
        angles=angles,
        fim=fim,
        effective_fim_dk=effective,
        crlb_theta=bound,
        per_target_std=std,
        condition_number=condition,
    )
