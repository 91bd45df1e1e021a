"""End-to-end Monte Carlo checks; run with ``pytest -m slow``."""

import math

import numpy as np
import pytest

from ise import crlb, sensing
from ise.experiments import presets, studies
from ise.experiments.montecarlo import mc_rmse
from ise.models.estimation import PronyConfig
from ise.models.experiments import ScenarioConfig

pytestmark = pytest.mark.slow


@pytest.fixture
def scenario() -> ScenarioConfig:
    return presets.two_target_scenario(trials=100, base_seed=11)


def test_lo_ratio_sweep_reaches_floor(scenario: ScenarioConfig) -> None:
    result = studies.run_lo_ratio_sweep(scenario, ratios=(1.0, 20.0, 50.0))
    weak, strong, strongest = result.rmse
    assert strong * 10.0 <= weak
    assert strongest == pytest.approx(strong, rel=0.5)
    assert max(result.failures[1:]) < 0.05 * result.trials


def test_single_target_tracks_bound(scenario: ScenarioConfig) -> None:
    scene = presets.scene_from_degrees([15.0])
    single = scenario.model_copy(
        update={
            "scene": scene,
            "prony": PronyConfig.for_targets(1),
            "snr_db": 40.0,
            "trials": 500,
        },
    )
    clean = sensing.predicted_measurements(
        scene,
        single.geometry,
        single.params,
    )
    result = mc_rmse(single, clean=clean)
    report = crlb.crlb_report(
        crlb.scene_fim_inputs(
            scene,
            single.geometry,
            single.params,
            noise_sigma=sensing.noise_sigma_for_snr(clean.values, 40.0),
        ),
        scene.angles,
        scene.wavenumber,
    )
    ratio = result.rmse / float(report.per_target_std[0])
    assert 0.9 <= ratio <= 3.0
    assert result.failures < 0.05 * result.trials


def test_close_pair_is_harder_than_wide_pair(
    scenario: ScenarioConfig,
) -> None:
    snr = (20.0, 30.0, 40.0, 50.0)
    results = studies.run_snr_sweep(
        scenario,
        scenes={
            "single": presets.SnrPresets["single"],
            "wide_pair": presets.SnrPresets["wide_pair"],
            "close_pair": presets.SnrPresets["close_pair"],
        },
        snr_values=snr,
    )
    wide, close = results["wide_pair"], results["close_pair"]
    assert np.all(close.rmse >= wide.rmse)

    single = results["single"]
    assert single.crlb_std is not None
    # estimator never beats the bound by more than Monte Carlo jitter
    assert np.all(single.rmse >= 0.7 * single.crlb_std)
    inversions = int(np.sum(np.diff(single.rmse) > 0.0))
    assert inversions <= 1


def test_snr_sweep_failures_stay_rare(scenario: ScenarioConfig) -> None:
    result = studies.run_snr_sweep(
        scenario,
        scenes={"wide_pair": presets.SnrPresets["wide_pair"]},
        snr_values=(30.0, 40.0),
    )["wide_pair"]
    assert max(result.failures) < 0.05 * result.trials
    assert math.degrees(float(np.max(result.rmse))) < 1.0
