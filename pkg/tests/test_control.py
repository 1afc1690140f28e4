import numpy as np
import pytest
from pydantic import ValidationError

from control import (
    CONTROL_PROBLEMS,
    SimulationConfig,
    cost,
    dpp_residual,
    fit_slope,
    moment_bound_probe,
    path_costs,
    penalization_rate_probe,
    reflected_ou_control,
    representative_states,
    schedule,
    simulate_control,
    stability_probe,
    two_control,
    value,
    value_rate_probe,
    value_regularity_probe,
)
from dynamics import build_system
from mvsolver import PathEnsemble, TimeGrid
from utils.errors import ConfigurationError

# Детерминированная задача: sigma = 0, из x₀ = 0.5 управление -1 доводит x до 0 к t = 0.5
DETERMINISTIC = SimulationConfig(steps=64, particles=4, replications=1, seed=42)


def test_schedule_splits_the_horizon():
    assert schedule(["a", "b"], 4) == ["a", "a", "b", "b"]
    assert schedule(["a"], 3) == ["a", "a", "a"]
    assert schedule([1, 2, 3], 4) == [1, 1, 2, 3]


def test_penalized_config_needs_epsilon():
    with pytest.raises(ValidationError):
        SimulationConfig(scheme="penalized")
    sim = SimulationConfig().penalized(0.1)
    assert sim.scheme == "penalized" and sim.eps == 0.1
    assert sim.projected().eps is None


def test_path_cost_uses_trapezoid_rule():
    prob = two_control(terminal=1.0)
    path = PathEnsemble.constant([2.0], TimeGrid(0.0, 1.0, 10), 3)
    np.testing.assert_allclose(path_costs(path, prob.costs), 4.0)
    np.testing.assert_allclose(path_costs(path, prob.costs, terminal=False), 2.0)
    estimate, stderr = cost([path, path], prob.costs)
    assert estimate == pytest.approx(4.0)
    assert stderr == 0.0


def test_deterministic_value():
    prob = two_control()
    estimate = value(prob, DETERMINISTIC)
    # ∫₀^½ (½ - t) dt против ∫₀¹ (½ + t) dt
    assert estimate.value == pytest.approx(0.125, abs=1e-12)
    assert estimate.control == [-1.0]
    assert estimate.mc_stderr == 0.0
    assert sorted(c.cost for c in estimate.evaluated) == pytest.approx([0.125, 1.0], abs=1e-12)


def test_value_with_one_switch():
    estimate = value(two_control(), DETERMINISTIC.model_copy(update={"switches": 1}))
    assert len(estimate.evaluated) == 4
    assert estimate.value == pytest.approx(0.125, abs=1e-12)
    assert estimate.control == [-1.0, -1.0]


def test_simulated_paths_stay_on_the_half_line():
    prob = two_control(sigma=0.5)
    grid = prob.grid(32)
    path = simulate_control(prob, schedule([-1.0], 32), SimulationConfig(particles=16), grid)
    assert path.states.min() >= 0.0


def test_control_family_limit():
    with pytest.raises(ConfigurationError):
        two_control().control_family(switches=30)


def test_problem_library():
    assert set(CONTROL_PROBLEMS) == {"two_control", "reflected_ou"}
    with pytest.raises(ConfigurationError):
        two_control().restrict([])


def test_dpp_at_the_start_is_trivial():
    report = dpp_residual(two_control(), 0.0, DETERMINISTIC)
    assert report.residual == 0.0
    assert report.passed


def test_dpp_on_deterministic_problem():
    report = dpp_residual(two_control(), 0.5, DETERMINISTIC.model_copy(update={"inner_particles": 4}))
    assert report.tau == pytest.approx(0.5)
    assert report.lhs == pytest.approx(0.125, abs=1e-12)
    assert report.rhs == pytest.approx(0.125, abs=1e-12)
    assert report.passed


def test_dpp_with_penalized_scheme():
    sim = DETERMINISTIC.model_copy(update={"inner_particles": 4}).penalized(0.25)
    report = dpp_residual(two_control(), 0.5, sim)
    assert report.scheme == "penalized"
    assert report.residual <= 1e-12
    assert report.passed


def test_dpp_rejects_tau_outside_the_horizon():
    with pytest.raises(ConfigurationError):
        dpp_residual(two_control(), 1.5, DETERMINISTIC)
    with pytest.raises(ConfigurationError):
        dpp_residual(two_control(), 1.0, DETERMINISTIC)


@pytest.mark.slow
def test_dpp_with_noise():
    sim = SimulationConfig(steps=64, particles=128, replications=4, seed=11, inner_particles=64, clusters=8)
    report = dpp_residual(two_control(sigma=0.3), 0.5, sim)
    assert report.clusters == 8
    assert report.residual <= report.tolerance
    assert report.passed


def test_representative_states(rng):
    states = np.array([[0.0], [1.0], [0.0], [1.0]])
    centers, labels = representative_states(states, 4, seed=0)
    np.testing.assert_array_equal(centers, [[0.0], [1.0]])
    np.testing.assert_array_equal(centers[labels], states)

    cloud = rng.normal(size=(100, 1))
    centers, labels = representative_states(cloud, 4, seed=0)
    assert centers.shape == (4, 1)
    assert labels.shape == (100,)
    assert labels.min() >= 0 and labels.max() < 4


def test_fit_slope():
    x = np.array([1.0, 2.0, 4.0])
    slope, intercept, r2 = fit_slope(x, 3.0 * x ** 2)
    assert slope == pytest.approx(2.0)
    assert intercept == pytest.approx(np.log(3.0))
    assert r2 == pytest.approx(1.0)
    assert fit_slope([1.0, 2.0], [1.0, 2.0]) is None
    assert fit_slope([1.0, 2.0, 4.0], [0.0, 0.0, 1.0]) is None


def test_rate_probes_need_three_epsilons():
    with pytest.raises(ConfigurationError):
        penalization_rate_probe(two_control(sigma=0.3), [0.1, 0.05], DETERMINISTIC)
    with pytest.raises(ConfigurationError):
        value_rate_probe(two_control(sigma=0.3), [0.1, 0.1, 0.05], DETERMINISTIC)


def test_penalization_rate_probe_report():
    sim = SimulationConfig(steps=64, particles=32, seed=1)
    report = penalization_rate_probe(two_control(sigma=0.3), [0.25, 0.125, 0.0625, 0.03125], sim)
    assert [e.parameter for e in report.entries] == pytest.approx([0.375, 0.1875, 0.09375])
    assert all(e.distance >= 0.0 for e in report.entries)
    assert report.predicted_slope == 1.0


def test_penalization_rate_probe_checks_stability():
    with pytest.raises(ConfigurationError):
        penalization_rate_probe(two_control(sigma=0.3), [0.1, 0.01, 0.001], DETERMINISTIC)


@pytest.mark.slow
def test_penalization_rate_on_reflected_ou():
    sim = SimulationConfig(steps=2048, particles=256, replications=64, seed=42)
    ladder = [2.0 ** -k for k in range(3, 9)]
    report = penalization_rate_probe(reflected_ou_control(), ladder, sim)
    assert not report.degenerate
    assert 0.7 <= report.slope <= 1.3
    assert report.r_squared >= 0.9


def test_value_rate_probe_report():
    sim = SimulationConfig(steps=32, particles=16, seed=3)
    report = value_rate_probe(two_control(sigma=0.3), [0.25, 0.125, 0.0625], sim)
    assert len(report.entries) == 3
    assert report.floor is not None and report.floor >= 0.0
    assert report.predicted_slope == 0.5


@pytest.mark.slow
def test_value_rate_on_two_control_problem():
    sim = SimulationConfig(steps=512, particles=256, replications=4, seed=42)
    ladder = [2.0 ** -k for k in range(3, 9)]
    report = value_rate_probe(two_control(sigma=0.3), ladder, sim)
    assert not report.degenerate
    assert report.slope >= 0.35


def test_stability_of_deterministic_paths():
    report = stability_probe(two_control(), [(0.1, 0.0), (0.0, 0.25)], DETERMINISTIC, control=[1.0])
    # x = ½ + t: сдвиг x₀ на 0.1 и старт в s = ¼
    assert [e.distance for e in report.entries] == pytest.approx([1.0, 0.25], abs=1e-9)
    assert report.passed
    assert not report.notes


def test_stability_rejects_negative_time_shift():
    with pytest.raises(ConfigurationError):
        stability_probe(two_control(), [(0.0, -0.1)], DETERMINISTIC)


def test_value_regularity_of_deterministic_problem():
    report = value_regularity_probe(two_control(), [(0.1, 0.0), (0.01, 0.0)], DETERMINISTIC)
    assert report.value == pytest.approx(0.125, abs=1e-12)
    # V(0, x₀) = x₀²/2
    assert 0.45 <= report.max_ratio <= 0.6
    assert report.passed


def test_value_regularity_restarts_on_the_common_grid():
    # из (¼, ½) управление -1 доводит x до 0 в узле ¾ общей сетки: V = ⅛, как и из (0, ½)
    report = value_regularity_probe(two_control(), [(0.0, 0.25)], DETERMINISTIC)
    assert report.entries[0].ds == 0.25
    assert report.entries[0].delta_value <= 1e-12
    assert not report.notes


def test_value_regularity_snaps_time_shift_to_a_node():
    report = value_regularity_probe(two_control(), [(0.0, 0.3)], DETERMINISTIC)
    assert report.entries[0].ds == pytest.approx(19 / 64)
    assert len(report.notes) == 1


def test_value_regularity_rejects_bad_time_shifts():
    with pytest.raises(ConfigurationError):
        value_regularity_probe(two_control(), [(0.0, -0.1)], DETERMINISTIC)
    with pytest.raises(ConfigurationError):
        value_regularity_probe(two_control(), [(0.0, 1.0)], DETERMINISTIC)


def test_moment_probe_report():
    sim = SimulationConfig(steps=64, particles=32, seed=5)
    report = moment_bound_probe(build_system("reflected_bm"), [0.25, 0.125, 0.0625], sim, refine=True)
    assert len(report.entries) == 3
    assert np.isfinite(report.statistic)
    assert {"variation", "moment_h", "moment_h2", "refinement_change"} <= set(report.details)
