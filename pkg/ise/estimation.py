"""Prony spectral estimation of the beat frequencies and the DoA map."""

import logging
import math
from typing import Final, NamedTuple

import numpy as np
import scipy.linalg

from .exc import (
    InsufficientSamples,
    InsufficientSignalRoots,
    RootfindingFailure,
)
from .models.estimation import EstimationResult, OrderSelection, PronyConfig
from .models.measurement import MeasurementVector
from .typedefs import ComplexArray, FloatArray

logger = logging.getLogger(__name__)

RootResidualBound: Final[float] = 1e-8
ClampTolerance: Final[float] = 1e-6
_NewtonSteps: Final[int] = 8
_PairTolerance: Final[float] = 1e-6
_TieTolerance: Final[float] = 1e-12


class LpcSolution(NamedTuple):
    coefficients: FloatArray
    residual_norm: float
    rank: int
    singular_values: FloatArray

    @property
    def rank_deficient(self) -> bool:
        return self.rank < len(self.coefficients)


def build_hankel(
    values: FloatArray,
    model_order: int,
) -> tuple[FloatArray, FloatArray]:
    """Forward linear-prediction system.

    Row r holds (ỹ_{p+r-1}, ..., ỹ_r) and the right-hand side is
    −ỹ_{p+r} (0-based), so every diagonal of the matrix is constant.
    """
    y = np.asarray(values, dtype=np.float64)
    samples = len(y)
    if not samples > model_order >= 1:
        raise InsufficientSamples(samples, model_order)
    matrix = scipy.linalg.toeplitz(
        y[model_order - 1 : samples - 1],
        y[model_order - 1 :: -1],
    )
    return matrix, -y[model_order:]


def fold_self_reciprocal(
    matrix: FloatArray,
    rhs: FloatArray,
) -> tuple[FloatArray, FloatArray]:
    """Constrain the forward system to a_k = a_{p−k} and a_p = 1.

    Undamped real tones have a self-reciprocal characteristic polynomial,
    so only a_1, ..., a_{p/2} remain unknown.
    """
    order = matrix.shape[1]
    if order % 2:
        raise ValueError("the real-tone predictor needs an even order")
    half = order // 2
    folded = np.array(matrix[:, :half], dtype=np.float64)
    folded[:, : half - 1] += matrix[:, order - 2 : half - 1 : -1]
    return folded, rhs - matrix[:, order - 1]


def unfold_self_reciprocal(half: FloatArray) -> FloatArray:
    """(a_1, ..., a_{p/2}) to the full (a_1, ..., a_p)."""
    h = np.asarray(half, dtype=np.float64)
    return np.concatenate((h, h[-2::-1], [1.0]))


def solve_lpc(matrix: FloatArray, rhs: FloatArray) -> LpcSolution:
    """Minimum-norm least squares by SVD; never the normal equations."""
    if matrix.size == 0:
        raise InsufficientSamples(len(rhs), matrix.shape[1])
    coefficients, _, rank, singular_values = scipy.linalg.lstsq(
        matrix,
        rhs,
        lapack_driver="gelsd",
    )
    residual = float(np.linalg.norm(matrix @ coefficients - rhs))
    return LpcSolution(
        coefficients=np.asarray(coefficients, dtype=np.float64),
        residual_norm=residual,
        rank=int(rank),
        singular_values=np.asarray(singular_values, dtype=np.float64),
    )


def _root_residual(poly: FloatArray, z: complex) -> float:
    p = len(poly) - 1
    return abs(np.polyval(poly, z)) / (1.0 + abs(z) ** p)


def char_poly_roots(coefficients: FloatArray) -> ComplexArray:
    """Roots of z^p + a_1 z^{p−1} + ... + a_p via companion eigenvalues."""
    a = np.asarray(coefficients, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise RootfindingFailure("non-finite prediction coefficients")
    poly = np.concatenate(([1.0], a))
    if len(a) == 0:
        return np.empty(0, dtype=np.complex128)
    companion = scipy.linalg.companion(poly)
    roots = scipy.linalg.eigvals(companion).astype(np.complex128)
    derivative = np.polyder(poly)
    for i, z in enumerate(roots):
        best, best_residual = z, _root_residual(poly, z)
        current = z
        for _ in range(_NewtonSteps):
            if best_residual < RootResidualBound * 1e-4:
                break
            slope = np.polyval(derivative, current)
            if slope == 0.0:
                break
            current = current - np.polyval(poly, current) / slope
            residual = _root_residual(poly, current)
            if residual < best_residual:
                best, best_residual = current, residual
        if best_residual >= RootResidualBound:
            raise RootfindingFailure(
                f"root {best:.6g} leaves residual {best_residual:.3g}",
            )
        roots[i] = best
    return roots


def _has_partner(z: complex, lower: list[complex]) -> bool:
    tol = _PairTolerance * max(1.0, abs(z))
    return any(abs(z.conjugate() - w) <= tol for w in lower)


def select_signal_roots(
    roots: ComplexArray,
    target_count: int,
    tolerance: float,
    *,
    angle_floor: float = 0.0,
) -> ComplexArray:
    """Keep the N root pairs closest to the unit circle.

    One representative per conjugate pair is returned (non-negative
    imaginary part), sorted by angle.
    """
    near = [
        complex(z)
        for z in roots
        if np.isfinite(z)
        and abs(abs(z) - 1.0) <= tolerance
        and abs(np.angle(z)) >= angle_floor
    ]
    lower = [z for z in near if z.imag < 0.0]
    candidates = [
        z
        for z in near
        if (z.imag > 0.0 and _has_partner(z, lower))
        or (z.imag == 0.0 and z.real < 0.0)
    ]
    selected: list[complex] = []
    while candidates and len(selected) < target_count:
        distances = [abs(abs(z) - 1.0) for z in candidates]
        best = min(distances)
        ties = [
            z
            for z, d in zip(candidates, distances, strict=True)
            if d - best <= _TieTolerance
        ]

        def separation(z: complex) -> float:
            if not selected:
                return abs(np.angle(z))
            return min(abs(np.angle(z) - np.angle(s)) for s in selected)

        choice = max(ties, key=separation)
        selected.append(choice)
        candidates.remove(choice)
    if len(selected) < target_count:
        raise InsufficientSignalRoots(len(selected), target_count)
    return np.array(
        sorted(selected, key=lambda z: np.angle(z)),
        dtype=np.complex128,
    )


def frequencies_from_roots(
    representatives: ComplexArray,
    spacing: float,
) -> FloatArray:
    """Δk̂ = arg z / Δx, in (0, π/Δx]."""
    if spacing <= 0.0:
        raise ValueError("sampling interval must be positive")
    return np.sort(np.angle(representatives) / spacing)


def doa_from_frequency(
    spatial_frequency: float,
    wavenumber: float,
    lo_angle: float,
) -> tuple[float, bool]:
    """θ̂ = arcsin(sin θ_0 − Δk̂/k), argument clamped into [−1, 1]."""
    if wavenumber <= 0.0:
        raise ValueError("wavenumber must be positive")
    argument = math.sin(lo_angle) - spatial_frequency / wavenumber
    clamped = abs(argument) > 1.0 + ClampTolerance
    if clamped:
        logger.warning(
            "arcsin argument %.6g outside [-1, 1]; DoA clamped",
            argument,
        )
    return math.asin(min(1.0, max(-1.0, argument))), clamped


def estimate_order(singular_values: FloatArray, threshold: float) -> int:
    """Number of real sinusoids supported by the Hankel spectrum."""
    if len(singular_values) == 0 or singular_values[0] == 0.0:
        return 0
    significant = int(np.sum(singular_values > threshold * singular_values[0]))
    return (significant + 1) // 2


def estimate_doa(
    measurement: MeasurementVector,
    wavenumber: float,
    lo_angle: float,
    config: PronyConfig,
) -> EstimationResult:
    values = measurement.values
    samples = len(values)
    matrix, rhs = build_hankel(values, config.model_order)

    target_count = config.target_count or config.model_order // 2
    if config.order_selection is OrderSelection.SingularValueThreshold:
        detected = estimate_order(
            scipy.linalg.svdvals(matrix),
            config.sv_threshold,
        )
        target_count = max(1, min(detected, config.model_order // 2))
        logger.debug("order selection found %d target(s)", target_count)

    if config.real_tones:
        solution = solve_lpc(*fold_self_reciprocal(matrix, rhs))
        coefficients = unfold_self_reciprocal(solution.coefficients)
    else:
        solution = solve_lpc(matrix, rhs)
        coefficients = solution.coefficients
    if solution.rank_deficient:
        logger.warning(
            "prediction system is rank deficient (rank %d < %d)",
            solution.rank,
            len(solution.coefficients),
        )
    roots = char_poly_roots(coefficients)
    representatives = select_signal_roots(
        roots,
        target_count,
        config.unit_circle_tolerance,
        angle_floor=2.0 * math.pi / (4.0 * samples),
    )
    spacing = measurement.geometry.spacing
    frequencies = frequencies_from_roots(representatives, spacing)
    mapped = [doa_from_frequency(w, wavenumber, lo_angle) for w in frequencies]
    return EstimationResult(
        spatial_frequencies=frequencies,
        doas=[theta for theta, _ in mapped],
        roots=representatives,
        lpc_coefficients=coefficients,
        lpc_residual_norm=solution.residual_norm,
        rank_deficient=solution.rank_deficient,
        clamped_flags=tuple(flag for _, flag in mapped),
        model_order=config.model_order,
    )
