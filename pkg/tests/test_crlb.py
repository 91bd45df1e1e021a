import math

import numpy as np
import pytest

from ise import crlb, sensing
from ise.exc import EndFireSingularity, SingularCovariance
from ise.experiments import presets
from ise.models.atomic import AtomicParams
from ise.models.crlb import FimInputs
from ise.models.geometry import SensorGeometry
from ise.models.scene import RfScene
from ise.typedefs import FloatArray


def random_inputs(
    geometry: SensorGeometry,
    wavelength: float,
    target_count: int,
    rng: np.random.Generator,
    sigma: float = 1.0,
) -> FimInputs:
    k = 2 * math.pi / wavelength
    slot = 1.8 * k / target_count
    return FimInputs(
        geometry=geometry,
        spatial_frequencies=[
            0.1 * k + slot * (i + rng.uniform(0.3, 0.7))
            for i in range(target_count)
        ],
        phase_offsets=rng.uniform(-math.pi, math.pi, target_count),
        amplitudes=rng.uniform(0.5, 2.0, target_count),
        noise_sigma=sigma,
    )


def test_cst_vectors_match_quadrature(wavelength: float) -> None:
    rng = np.random.default_rng(17)
    k = 2 * math.pi / wavelength
    for width in (0.1, 0.25, 0.4):
        windows = SensorGeometry.from_wavelengths(wavelength, 4.0, width, 0.25)
        for _ in range(3):
            dk, dphi = rng.uniform(0.01, 2.0) * k, rng.uniform(-3.0, 3.0)
            closed = crlb.cst_vectors(windows, dk, dphi)
            numeric = crlb.cst_vectors_quadrature(windows, dk, dphi)
            for a, b in zip(closed, numeric, strict=True):
                np.testing.assert_allclose(
                    a,
                    b,
                    rtol=1e-8,
                    atol=1e-10 * float(np.max(np.abs(b))),
                )


def test_cst_vectors_phase_flip(geometry: SensorGeometry) -> None:
    base = crlb.cst_vectors(geometry, 30.0, 0.4)
    flipped = crlb.cst_vectors(geometry, 30.0, 0.4 + math.pi)
    np.testing.assert_allclose(flipped.c, -base.c, atol=1e-15)
    np.testing.assert_allclose(flipped.s, -base.s, atol=1e-15)


def test_cst_vectors_zero_frequency(geometry: SensorGeometry) -> None:
    integrals = crlb.cst_vectors(geometry, 0.0, 0.0)
    np.testing.assert_allclose(integrals.c, geometry.window_width)
    np.testing.assert_array_equal(integrals.s, 0.0)


def test_mean_jacobian_matches_finite_differences(
    geometry: SensorGeometry,
    wavelength: float,
) -> None:
    rng = np.random.default_rng(23)
    for trial in range(20):
        inputs = random_inputs(geometry, wavelength, 1 + trial % 3, rng)
        jacobian = crlb.mean_jacobian(inputs)
        theta = np.concatenate(
            (
                inputs.spatial_frequencies,
                inputs.phase_offsets,
                inputs.amplitudes,
            ),
        )
        n = inputs.target_count

        def mean(vector: FloatArray, n: int = n) -> FloatArray:
            return sensing.mixture_mean(
                geometry,
                vector[:n],
                vector[n : 2 * n],
                vector[2 * n :],
            )

        for col in range(3 * n):
            step = 1e-6 * max(1.0, abs(theta[col]))
            up, down = theta.copy(), theta.copy()
            up[col] += step
            down[col] -= step
            numeric = (mean(up) - mean(down)) / (2 * step)
            scale = float(np.linalg.norm(jacobian[:, col]))
            assert np.linalg.norm(jacobian[:, col] - numeric) < 1e-6 * scale


def test_mean_jacobian_amplitude_scaling(
    geometry: SensorGeometry,
    wavelength: float,
) -> None:
    inputs = random_inputs(geometry, wavelength, 2, np.random.default_rng(1))
    doubled = inputs.model_copy(
        update={"amplitudes": 2.0 * inputs.amplitudes},
    )
    base, scaled = crlb.mean_jacobian(inputs), crlb.mean_jacobian(doubled)
    np.testing.assert_allclose(scaled[:, :4], 2.0 * base[:, :4])
    np.testing.assert_allclose(scaled[:, 4:], base[:, 4:])


def test_mean_jacobian_without_targets(geometry: SensorGeometry) -> None:
    inputs = FimInputs(
        geometry=geometry,
        spatial_frequencies=[],
        phase_offsets=[],
        amplitudes=[],
        noise_sigma=1.0,
    )
    assert crlb.mean_jacobian(inputs).shape == (geometry.channel_count, 0)


def test_fisher_information_white_noise(
    geometry: SensorGeometry,
    wavelength: float,
) -> None:
    inputs = random_inputs(
        geometry,
        wavelength,
        2,
        np.random.default_rng(2),
        sigma=0.3,
    )
    jacobian = crlb.mean_jacobian(inputs)
    fim = crlb.fisher_information(jacobian, inputs.covariance)
    np.testing.assert_allclose(
        fim,
        jacobian.T @ jacobian / 0.09,
        rtol=1e-10,
        atol=1e-12 * float(np.max(np.abs(fim))),
    )
    np.testing.assert_array_equal(fim, fim.T)
    assert np.min(np.linalg.eigvalsh(fim)) >= -1e-10 * np.trace(fim)

    doubled = crlb.fisher_information(jacobian, 4.0 * inputs.covariance)
    np.testing.assert_allclose(
        doubled,
        fim / 4.0,
        rtol=1e-12,
        atol=1e-14 * float(np.max(np.abs(fim))),
    )


def test_fisher_information_block_assembly(
    geometry: SensorGeometry,
    wavelength: float,
) -> None:
    rng = np.random.default_rng(3)
    for n in (1, 2, 3):
        inputs = random_inputs(geometry, wavelength, n, rng)
        direct = crlb.fisher_information(
            crlb.mean_jacobian(inputs),
            inputs.covariance,
        )
        blocks = crlb.fisher_information_blocks(inputs)
        np.testing.assert_allclose(
            blocks,
            direct,
            rtol=1e-10,
            atol=1e-12 * float(np.max(np.abs(direct))),
        )


def test_fisher_information_correlated_noise(
    geometry: SensorGeometry,
    wavelength: float,
) -> None:
    k = geometry.channel_count
    lags = np.abs(np.subtract.outer(np.arange(k), np.arange(k)))
    cov = 0.04 * 0.5**lags
    inputs = random_inputs(geometry, wavelength, 2, np.random.default_rng(4))
    correlated = inputs.model_copy(
        update={"noise_sigma": None, "noise_cov": cov},
    )
    jacobian = crlb.mean_jacobian(correlated)
    np.testing.assert_allclose(
        crlb.fisher_information(jacobian, correlated.covariance),
        jacobian.T @ np.linalg.solve(cov, jacobian),
        rtol=1e-8,
        atol=1e-10 * float(np.max(np.abs(jacobian.T @ jacobian))) / 0.04,
    )
    np.testing.assert_allclose(
        crlb.fisher_information_blocks(correlated),
        crlb.fisher_information(jacobian, cov),
        rtol=1e-8,
        atol=1e-10 * float(np.max(np.abs(jacobian.T @ jacobian))) / 0.04,
    )


def test_fisher_information_rejects_indefinite_covariance(
    geometry: SensorGeometry,
    wavelength: float,
) -> None:
    inputs = random_inputs(geometry, wavelength, 1, np.random.default_rng(5))
    with pytest.raises(SingularCovariance):
        crlb.fisher_information(
            crlb.mean_jacobian(inputs),
            -np.eye(geometry.channel_count),
        )


def test_fim_inputs_validation(geometry: SensorGeometry) -> None:
    with pytest.raises(ValueError, match="zero-amplitude"):
        FimInputs(
            geometry=geometry,
            spatial_frequencies=[10.0],
            phase_offsets=[0.0],
            amplitudes=[0.0],
            noise_sigma=1.0,
        )
    with pytest.raises(ValueError, match="exactly one"):
        FimInputs(
            geometry=geometry,
            spatial_frequencies=[10.0],
            phase_offsets=[0.0],
            amplitudes=[1.0],
        )


def test_effective_fim_without_coupling() -> None:
    fim = np.diag([4.0, 3.0, 2.0])
    np.testing.assert_array_equal(crlb.effective_fim(fim, 1), [[4.0]])


def test_effective_fim_schur_consistency(
    geometry: SensorGeometry,
    wavelength: float,
) -> None:
    rng = np.random.default_rng(6)
    for n in (1, 2, 3):
        inputs = random_inputs(geometry, wavelength, n, rng)
        fim = crlb.fisher_information(
            crlb.mean_jacobian(inputs),
            inputs.covariance,
        )
        effective = crlb.effective_fim(fim, n)
        np.testing.assert_allclose(
            np.linalg.inv(fim)[:n, :n],
            np.linalg.inv(effective),
            rtol=1e-8,
            atol=1e-10 * float(np.max(np.abs(np.linalg.inv(effective)))),
        )
        loss = fim[:n, :n] - effective
        assert np.min(np.linalg.eigvalsh(loss)) >= -1e-10 * np.trace(fim)


def test_single_target_closed_form(
    params: AtomicParams,
    geometry: SensorGeometry,
) -> None:
    scene = presets.scene_from_degrees([30.0])
    report = crlb.crlb_report(
        crlb.scene_fim_inputs(scene, geometry, params, noise_sigma=1e-4),
        scene.angles,
        scene.wavenumber,
    )
    closed = crlb.single_target_variance(
        float(report.effective_fim_dk[0, 0]),
        float(scene.angles[0]),
        scene.wavenumber,
    )
    assert report.crlb_theta[0, 0] == pytest.approx(closed, rel=1e-10)
    assert report.per_target_std[0] == pytest.approx(math.sqrt(closed))


def test_geometric_factor() -> None:
    broadside = crlb.single_target_variance(5.0, 0.0, 40.0)
    oblique = crlb.single_target_variance(5.0, math.radians(30.0), 40.0)
    assert broadside < oblique
    assert crlb.single_target_variance(5.0, 0.3, 80.0) == pytest.approx(
        crlb.single_target_variance(5.0, 0.3, 40.0) / 4.0,
        rel=1e-14,
    )


def test_crlb_report_two_targets(
    params: AtomicParams,
    two_target_scene: RfScene,
    geometry: SensorGeometry,
) -> None:
    clean = sensing.predicted_measurements(two_target_scene, geometry, params)
    sigma = sensing.noise_sigma_for_snr(clean.values, 30.0)
    report = crlb.crlb_report(
        crlb.scene_fim_inputs(
            two_target_scene,
            geometry,
            params,
            noise_sigma=sigma,
        ),
        two_target_scene.angles,
        two_target_scene.wavenumber,
    )
    assert report.fim.shape == (6, 6)
    assert np.all(np.diag(report.crlb_theta) > 0.0)
    np.testing.assert_array_equal(report.crlb_theta, report.crlb_theta.T)
    assert np.all(report.per_target_std_deg < 1.0)
    rows = report.csv_rows()
    assert [row[0] for row in rows] == [1, 2]
    assert rows[0][1] == pytest.approx(-30.0)


@pytest.mark.parametrize("angle", [math.pi / 2, -math.pi / 2, 1.5707963265])
def test_end_fire_is_rejected(angle: float) -> None:
    with pytest.raises(EndFireSingularity):
        crlb.crlb_theta(np.eye(1), np.array([angle]), 40.0)
    with pytest.raises(EndFireSingularity):
        crlb.single_target_variance(1.0, angle, 40.0)


def test_crlb_report_rejects_end_fire_scene(
    params: AtomicParams,
    geometry: SensorGeometry,
) -> None:
    scene = presets.scene_from_degrees([-90.0])
    inputs = crlb.scene_fim_inputs(scene, geometry, params, noise_sigma=1.0)
    with pytest.raises(EndFireSingularity):
        crlb.crlb_report(inputs, scene.angles, scene.wavenumber)
