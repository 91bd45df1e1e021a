"""Monte Carlo kernel shared by every sweep."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.optimize import linear_sum_assignment

from .. import estimation, sensing
from ..exc import DomainError
from ..models.experiments import MonteCarloResult, ScenarioConfig
from ..models.measurement import MeasurementVector
from ..typedefs import FloatArray


def derive_seed(base_seed: int, cell_index: int, trial_index: int) -> int:
    sequence = np.random.SeedSequence([base_seed, cell_index, trial_index])
    return int(sequence.generate_state(1)[0])


def match_errors(estimates: FloatArray, truth: FloatArray) -> FloatArray:
    """|θ̂ − θ| per true target under the minimum-total-error pairing."""
    cost = np.abs(
        np.asarray(estimates)[:, np.newaxis] - np.asarray(truth)[np.newaxis],
    )
    rows, cols = linear_sum_assignment(cost)
    errors = np.full(len(truth), math.nan)
    errors[cols] = cost[rows, cols]
    return errors


class MonteCarloRunner:
    """Noisy trials around one clean measurement vector."""

    def __init__(
        self,
        scenario: ScenarioConfig,
        *,
        cell_index: int = 0,
        clean: MeasurementVector | None = None,
    ) -> None:
        self.logger = logging.getLogger(
            f"{__name__}.{self.__class__.__name__}",
        )
        self.scenario = scenario
        self.cell_index = cell_index
        self.truth = np.sort(scenario.scene.angles)
        if clean is None:
            clean = sensing.synthesize_measurement(
                scenario.scene,
                scenario.geometry,
                scenario.params,
                scenario.source,
            )
        self.clean = clean

    def trial(self, trial_index: int) -> FloatArray:
        """Matched errors for one trial; all NaN when estimation fails."""
        scenario = self.scenario
        seed = derive_seed(scenario.base_seed, self.cell_index, trial_index)
        measurement = (
            self.clean
            if scenario.snr_db is None
            else sensing.add_noise(self.clean, scenario.snr_db, seed)
        )
        try:
            result = estimation.estimate_doa(
                measurement,
                scenario.scene.wavenumber,
                scenario.scene.lo.angle,
                scenario.prony,
            )
        except DomainError as err:
            self.logger.debug(
                "cell %d trial %d failed: %s",
                self.cell_index,
                trial_index,
                err,
            )
            return np.full(len(self.truth), math.nan)
        return match_errors(result.doas, self.truth)

    def run(self) -> MonteCarloResult:
        trials = range(self.scenario.trials)
        with ThreadPoolExecutor(max_workers=self.scenario.threads) as pool:
            rows = list(pool.map(self.trial, trials))
        errors = np.vstack(rows) if rows else np.empty((0, len(self.truth)))
        failures = int(np.isnan(errors).any(axis=1).sum())
        if failures:
            self.logger.info(
                "cell %d: %d of %d trials failed",
                self.cell_index,
                failures,
                self.scenario.trials,
            )
        return MonteCarloResult(errors=errors, failures=failures)


def mc_rmse(
    scenario: ScenarioConfig,
    *,
    cell_index: int = 0,
    clean: MeasurementVector | None = None,
) -> MonteCarloResult:
    return MonteCarloRunner(
        scenario,
        cell_index=cell_index,
        clean=clean,
    ).run()
