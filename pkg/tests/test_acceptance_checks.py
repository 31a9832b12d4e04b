import numpy as np
import pytest

import acceptance_checks
from acceptance_checks import FAIL, PASS, WARN, Judge
from hetmarket import ExperimentConfig


def test_judge_applies_tolerance_scale():
    judge = Judge(ExperimentConfig(tolerance_scale=2.0), 3)
    assert judge.within('wide', 1.5, 1.0, 0.3)
    assert not judge.within('narrow', 2.0, 1.0, 0.3)
    assert [result.status for result in judge.results] == [PASS, FAIL]
    assert judge.results[0].tolerance == pytest.approx(0.6)


def test_zero_scale_fails_everything():
    judge = Judge(ExperimentConfig(tolerance_scale=0.0), 1)
    assert not judge.within('exact', 1.0, 1.0, 0.5)
    assert not judge.holds('true', True, 1, 1)


def test_low_realizations_warn():
    judge = Judge(ExperimentConfig(realizations=50), 4)
    assert judge.results[0].status == WARN
    assert judge.results[0].passed
    assert Judge(ExperimentConfig(realizations=100), 4).results == []


def test_describe_line():
    result = acceptance_checks.CheckResult(2, 'idle at Z=26', PASS, 0, 0, None, 'simulated X_opt 0')
    assert result.describe() == 'PASS [2] idle at Z=26: measured=0 target=0 tolerance= (simulated X_opt 0)'


def test_merged_bins_reach_minimum_expectation():
    expected = np.array([0.5, 1.0, 4.0, 20.0, 30.0, 3.0, 1.0, 0.5])
    observed = np.array([1, 0, 5, 18, 31, 4, 0, 1])
    obs_bins, exp_bins = acceptance_checks._merged_bins(expected, observed)
    assert np.all(exp_bins >= 5.0)
    assert exp_bins.sum() == pytest.approx(expected.sum())
    assert obs_bins.sum() == observed.sum()


def test_bound_suite_passes():
    results = acceptance_checks.check_bound(ExperimentConfig())
    assert results
    assert all(result.status == PASS for result in results)


def test_idle_suite_passes():
    config = ExperimentConfig(realizations=400)
    assert all(result.status == PASS for result in acceptance_checks.check_idle(config))


@pytest.mark.slow
def test_determinism_suite_passes():
    results = acceptance_checks.check_determinism(ExperimentConfig(realizations=20))
    assert [result.status for result in results] == [WARN, PASS]


def test_every_experiment_with_a_suite_maps_to_a_known_suite():
    import experiments
    for name, suite in acceptance_checks.SUITE_FOR_EXPERIMENT.items():
        assert name in experiments.EXPERIMENTS
        assert suite in acceptance_checks.SUITES
