import math

import numpy as np
import pytest

from ise import physics
from ise.exc import InvalidModelInput
from ise.experiments import presets, studies
from ise.experiments.montecarlo import (
    MonteCarloRunner,
    derive_seed,
    match_errors,
    mc_rmse,
)
from ise.models.atomic import AtomicParams
from ise.models.experiments import (
    MonteCarloResult,
    SamplingDemoConfig,
    ScenarioConfig,
    SweepAxis,
    SweepResult,
)
from ise.models.measurement import MeasurementSource
from ise.models.scene import RfScene


@pytest.fixture
def scenario() -> ScenarioConfig:
    return presets.two_target_scenario(trials=6, base_seed=7)


def test_derive_seed_is_stable_and_distinct() -> None:
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    seeds = {
        derive_seed(1, cell, trial) for cell in range(4) for trial in (0, 1)
    }
    assert len(seeds) == 8
    assert derive_seed(1, 0, 0) != derive_seed(2, 0, 0)


def test_match_errors_uses_best_pairing() -> None:
    errors = match_errors(np.array([0.8, -0.5]), np.array([-0.52, 0.79]))
    np.testing.assert_allclose(errors, [0.02, 0.01], atol=1e-15)


def test_match_errors_with_extra_estimate() -> None:
    errors = match_errors(np.array([0.1, 0.5, -0.3]), np.array([0.45]))
    np.testing.assert_allclose(errors, [0.05], atol=1e-15)


def test_monte_carlo_result_rmse() -> None:
    result = MonteCarloResult(
        errors=np.array([[0.1, 0.2], [math.nan, math.nan], [0.3, 0.0]]),
        failures=1,
    )
    assert result.trials == 3
    assert result.rmse == pytest.approx(math.sqrt(0.14 / 4))
    empty = MonteCarloResult(errors=np.full((2, 1), math.nan), failures=2)
    assert math.isnan(empty.rmse)


def test_noiseless_trials_are_exact(scenario: ScenarioConfig) -> None:
    result = mc_rmse(scenario.model_copy(update={"snr_db": None}))
    assert result.failures == 0
    assert result.rmse < 1e-6


def test_trials_are_reproducible_across_threads(
    scenario: ScenarioConfig,
) -> None:
    serial = mc_rmse(scenario, cell_index=3)
    threaded = mc_rmse(
        scenario.model_copy(update={"threads": 4}),
        cell_index=3,
    )
    np.testing.assert_array_equal(serial.errors, threaded.errors)
    other_cell = mc_rmse(scenario, cell_index=4)
    assert not np.array_equal(serial.errors, other_cell.errors)


def test_runner_trial_shape(scenario: ScenarioConfig) -> None:
    runner = MonteCarloRunner(scenario)
    errors = runner.trial(0)
    assert errors.shape == (2,)
    assert np.all(np.isfinite(errors))
    assert np.degrees(np.max(errors)) < 1.0


def test_linearization_check(params: AtomicParams) -> None:
    scene = presets.scene_from_degrees(presets.TwoTargetAngles)
    grid = np.linspace(0.0, 4 * scene.wavelength, 1025)
    check = studies.run_linearization_check(
        params,
        scene.with_lo_ratio(1.0),
        scene.with_lo_ratio(10.0),
        grid,
    )
    assert len(check.to_csv().splitlines()) == len(grid) + 1
    assert check.weak.lo_ratio == pytest.approx(1.0)
    assert 4.0 <= check.residual_ratio <= 30.0
    assert check.strong.normalized_sup < check.weak.normalized_sup


def test_linearization_check_needs_matching_signals(
    params: AtomicParams,
) -> None:
    weak = presets.scene_from_degrees([10.0], lo_ratio=1.0)
    strong = presets.scene_from_degrees([20.0], lo_ratio=10.0)
    with pytest.raises(InvalidModelInput):
        studies.run_linearization_check(
            params,
            weak,
            strong,
            np.linspace(0.0, 0.5, 33),
        )


def test_lo_ratio_sweep_shape(scenario: ScenarioConfig) -> None:
    result = studies.run_lo_ratio_sweep(
        scenario.model_copy(update={"trials": 3}),
        ratios=(5.0, 20.0),
    )
    assert result.axis is SweepAxis.LoRatio
    np.testing.assert_array_equal(result.values, [5.0, 20.0])
    assert result.smoke_value == 20.0
    assert len(result.failures) == 2
    assert np.all(np.isfinite(result.rmse))
    header = result.to_csv().splitlines()[0]
    assert header == "lo_ratio,rmse_deg,crlb_deg,trials,failures"


def test_measurement_demo_panels(scenario: ScenarioConfig) -> None:
    result = studies.run_measurement_demo(scenario)
    assert [panel.lo_ratio for panel in result.panels] == [20.0, 1.0]
    strong, weak = result.panel(20.0), result.panel(1.0)
    k = scenario.geometry.channel_count
    assert strong.simulated.shape == (k,)
    assert strong.linear.shape == (k,)
    assert weak.normalized_residual > 3.0 * strong.normalized_residual
    np.testing.assert_allclose(
        np.degrees(strong.estimated_angles),
        sorted(presets.TwoTargetAngles),
        atol=1.0,
    )
    rows = result.to_csv().splitlines()
    assert rows[0] == "lo_ratio,j,x_j_m,y_tilde_simulated,y_tilde_linear"
    assert len(rows) == 1 + 2 * k
    doas = result.doas_to_csv().splitlines()
    assert doas[0] == "lo_ratio,i,true_deg,estimated_deg"
    assert len(doas) == 1 + 2 * 2

def test_snr_sweep_reports_bound_for_single_target(
    scenario: ScenarioConfig,
) -> None:
    results = studies.run_snr_sweep(
        scenario.model_copy(update={"trials": 4}),
        scenes={"single": (15.0,), "pair": (-15.0, 15.0)},
        snr_values=(25.0, 40.0),
    )
    assert set(results) == {"single", "pair"}
    single, pair = results["single"], results["pair"]
    assert single.crlb_std is not None
    assert np.all(np.isfinite(single.crlb_std))
    assert single.crlb_std[1] < single.crlb_std[0]
    assert pair.crlb_std is None
    assert pair.smoke_value == 25.0
    rows = pair.to_csv().splitlines()
    assert rows[1].split(",")[2] == ""


def test_geometry_sweep(scenario: ScenarioConfig) -> None:
    result = studies.run_geometry_sweep(
        scenario.model_copy(update={"trials": 3}),
        SweepAxis.SamplingInterval,
        (0.25, 0.2),
    )
    assert result.crlb_std is not None
    assert np.all(np.isfinite(result.crlb_std))
    assert np.all(np.isfinite(result.rmse))


def test_geometry_sweep_rejects_other_axes(scenario: ScenarioConfig) -> None:
    with pytest.raises(InvalidModelInput):
        studies.run_geometry_sweep(scenario, SweepAxis.SnrDb, (10.0,))
    with pytest.raises(InvalidModelInput):
        studies.run_geometry_sweep(scenario, SweepAxis.WindowWidth)


def test_sweep_result_lengths_are_checked() -> None:
    with pytest.raises(ValueError, match="one RMSE"):
        SweepResult(
            axis=SweepAxis.SnrDb,
            values=[10.0, 20.0],
            rmse=[0.1],
            trials=1,
            failures=(0, 0),
        )


def test_length_sweep_bound_shrinks_with_cell(
    scenario: ScenarioConfig,
) -> None:
    result = studies.run_length_sweep(scenario)
    np.testing.assert_array_equal(result.cell_lengths, presets.LengthGrid)
    assert list(result.channel_counts) == sorted(result.channel_counts)
    assert np.all(np.diff(result.crlb_std, axis=0) < 0.0)
    # cos θ penalty away from broadside
    assert np.all(result.crlb_std[:, 2] > result.crlb_std[:, 0])
    rows = result.to_csv().splitlines()
    assert len(rows) == 1 + len(presets.LengthGrid) * len(presets.LengthAngles)


def test_condition_number_grows_as_targets_merge(
    scenario: ScenarioConfig,
) -> None:
    conditions = studies.condition_number_sweep(
        scenario,
        [5.0, 4.0, 3.0, 2.0, 1.0],
    )
    assert np.all(np.diff(conditions) > 0.0)


def test_spectral_power_peaks_at_target(two_target_scene: RfScene) -> None:
    k = two_target_scene.wavenumber
    centers = np.arange(32) * two_target_scene.wavelength / 4.0
    dk = k * (1.0 - math.sin(math.radians(20.0)))
    values = np.cos(dk * centers)
    angles = np.radians(np.arange(-90.0, 90.25, 0.25))
    power = studies.spectral_power(values, centers, k, math.pi / 2, angles)
    assert math.degrees(angles[int(np.argmax(power))]) == pytest.approx(
        20.0,
        abs=0.5,
    )


def test_sampling_demo(scenario: ScenarioConfig) -> None:
    demo = studies.run_sampling_demo(SamplingDemoConfig(), scenario)
    assert len(demo.curves) == 4
    target, mirror = math.radians(60.0), math.radians(-60.0)
    window = math.radians(2.0)

    compliant = demo.curve("aliasing", "spacing_0.25")
    assert compliant.local_peak_near(target, window) == pytest.approx(
        target,
        abs=math.radians(0.5),
    )
    assert compliant.power_at(target) >= 0.8
    assert compliant.power_at(mirror) < 0.2

    aliased = demo.curve("aliasing", "spacing_0.5")
    assert aliased.local_peak_near(mirror, window) == pytest.approx(
        mirror,
        abs=math.radians(0.5),
    )
    assert aliased.power_at(mirror) >= 0.8

    narrow = demo.curve("null", "width_0.25")
    wide = demo.curve("null", "width_1")
    assert narrow.power_at(0.0) == pytest.approx(1.0, abs=0.05)
    assert wide.power_at(0.0) < 1e-6

    with pytest.raises(KeyError):
        demo.curve("null", "width_2")
    assert demo.to_csv().splitlines()[0] == (
        "panel,label,angle_deg,normalized_power"
    )


def test_integrated_scene_is_lo_dominated(params: AtomicParams) -> None:
    scene = presets.integrated_power_scene(30.0)
    assert scene.lo_dominance_ratio == pytest.approx(10.0)
    amp = physics.effective_amplitudes(params, scene)
    assert amp.shape == (1,)


def test_presets_angle_grid() -> None:
    grid = presets.angle_grid(0.5)
    assert len(grid) == 361
    assert grid[0] == pytest.approx(-math.pi / 2)
    assert grid[-1] == pytest.approx(math.pi / 2)


def test_two_target_scenario_defaults() -> None:
    scenario = presets.two_target_scenario()
    assert scenario.geometry.channel_count == 16
    assert scenario.prony.model_order == 4
    assert scenario.source is MeasurementSource.AnalyticModel
    assert scenario.scene.lo_dominance_ratio == pytest.approx(
        presets.DefaultLoRatio,
    )
