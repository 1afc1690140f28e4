import numpy as np
import pytest

from convexcore import Ball, Box, ConvexConstraint, HalfSpace, InteriorCertificate, Polytope, normal_cone_residuals
from convexcore import quadratic
from dynamics import CoefficientField, MVSystem, ObliqueField, build_system
from mvsolver import (
    NoiseSource,
    PathEnsemble,
    TimeGrid,
    check_stability,
    compare_schemes,
    default_probes,
    euler_iteration,
    interior_bound_check,
    load_trajectories,
    oblique_skorohod_step,
    residual_report,
    run_replications,
    save_trajectories,
    simulate_penalized,
    simulate_projected,
    skorohod_points,
    sup_distance_squared,
)
from utils.errors import ConfigurationError, ShapeError, SpectralError, UnsupportedGeometryError


def _random_spd(rng, dim, condition):
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    return q @ np.diag(np.logspace(0, np.log10(condition), dim)) @ q.T


def _zero_system(constraint, x0, H=None):
    dim = constraint.dim
    coefficients = CoefficientField(lambda x, mu, u, t: np.zeros_like(x),
                                    lambda x, mu, u, t: np.zeros((len(x), dim, dim)),
                                    dim=dim, noise_dim=dim, lipschitz=1e-12, name="zero")
    return MVSystem(constraint, coefficients, ObliqueField.constant(np.eye(dim) if H is None else H), x0)


def _constant_drift_system(drift, sigma, x0):
    coefficients = CoefficientField(lambda x, mu, u, t: np.full_like(x, drift),
                                    lambda x, mu, u, t: np.full((len(x), 1, 1), sigma),
                                    dim=1, noise_dim=1, lipschitz=1e-12, normalized=False)
    return MVSystem(ConvexConstraint.indicator(HalfSpace([-1.0], 0.0)), coefficients,
                    ObliqueField.constant([[1.0]]), [x0])


# Сетка и шум

def test_grid_nodes_and_snapping():
    grid = TimeGrid(0.0, 1.0, 10)
    assert grid.h == pytest.approx(0.1)
    assert len(grid.nodes) == 11
    assert grid.snap(0.7, 2) == pytest.approx(0.5)
    fine = TimeGrid(0.0, 1.0, 8, dyadic_level=2)
    # t_6 = 0.75 -> 0.75, t_5 = 0.625 -> 0.5
    assert fine.snap_index(6) == 6
    assert fine.snap_index(5) == 4
    assert fine.index_of(0.5) == 4


def test_grid_validation():
    with pytest.raises(ConfigurationError):
        TimeGrid(1.0, 0.0, 10)
    with pytest.raises(ConfigurationError):
        TimeGrid(0.0, 1.0, 0)
    with pytest.raises(ConfigurationError):
        TimeGrid(0.0, 1.0, 4).index_of(2.0)


def test_noise_is_reproducible():
    a = NoiseSource(7, 3).increments(16, 4, 2, 0.01)
    b = NoiseSource(7, 3).increments(16, 4, 2, 0.01)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, NoiseSource(7, 4).increments(16, 4, 2, 0.01))


def test_particle_streams_do_not_depend_on_ensemble_size():
    small = NoiseSource(11).increments(8, 3, 1, 0.1)
    large = NoiseSource(11).increments(8, 10, 1, 0.1)
    np.testing.assert_array_equal(small, large[:3])


def test_coarse_increments_sum_fine_ones():
    fine = NoiseSource(5).increments(64, 2, 1, 1 / 64)
    coarse = NoiseSource(5).increments(16, 2, 1, 1 / 16, resolution=64)
    np.testing.assert_allclose(coarse, fine.reshape(2, 16, 4, 1).sum(axis=2), atol=1e-15)
    with pytest.raises(ConfigurationError):
        NoiseSource(5).increments(24, 2, 1, 1 / 24, resolution=64)


def test_seed_must_fit_64_bits():
    with pytest.raises(ConfigurationError):
        NoiseSource(-1)
    with pytest.raises(ConfigurationError):
        NoiseSource(2 ** 64)


# Шаг Скорохода

def test_skorohod_step_on_half_plane(right_half_plane):
    x, dk = oblique_skorohod_step(right_half_plane, np.eye(2), [-2.0, 3.0])
    np.testing.assert_allclose(x, [0.0, 3.0])
    np.testing.assert_allclose(dk, [-2.0, 0.0])

    x, dk = oblique_skorohod_step(right_half_plane, np.diag([2.0, 1.0]), [-2.0, 3.0])
    np.testing.assert_allclose(x, [0.0, 3.0])
    np.testing.assert_allclose(dk, [-1.0, 0.0])


def test_skorohod_step_inside_is_identity(unit_ball):
    x, dk = oblique_skorohod_step(unit_ball, np.diag([3.0, 1.0]), [0.2, 0.3])
    np.testing.assert_array_equal(x, [0.2, 0.3])
    np.testing.assert_array_equal(dk, [0.0, 0.0])


def test_skorohod_step_rejects_non_spd(right_half_plane):
    with pytest.raises(SpectralError):
        oblique_skorohod_step(right_half_plane, np.array([[1.0, 0.0], [0.0, -1.0]]), [-1.0, 0.0])


def test_skorohod_step_requires_indicator():
    with pytest.raises(UnsupportedGeometryError):
        oblique_skorohod_step(ConvexConstraint.smooth_convex(quadratic([[1.0]])), [[1.0]], [2.0])


@pytest.mark.parametrize("geometry", [
    HalfSpace([1.0, -2.0, 0.5], 0.3),
    Box([-1.0, -0.5, 0.0], [1.0, 2.0, np.inf]),
], ids=["half-space", "box"])
def test_skorohod_step_contract(geometry, rng):
    constraint = ConvexConstraint.indicator(geometry)
    count = 500
    H = np.stack([_random_spd(rng, 3, 100.0) for _ in range(count)])
    y = rng.uniform(-3.0, 3.0, size=(count, 3))
    x, dk = skorohod_points(constraint, H, y)

    assert geometry.distance(x).max() <= 1e-10
    np.testing.assert_allclose(x + np.einsum("nij,nj->ni", H, dk), y, atol=1e-10)
    probes = np.vstack([geometry.sample(rng, 64), geometry.corners()[np.all(np.isfinite(geometry.corners()), axis=1)]])
    assert normal_cone_residuals(constraint, x, dk, probes).max() <= 1e-8


def test_skorohod_step_on_ball(rng):
    geometry = Ball([0.2, -0.1], 1.0)
    constraint = ConvexConstraint.indicator(geometry)
    H = np.stack([_random_spd(rng, 2, 50.0) for _ in range(200)])
    y = rng.uniform(-4.0, 4.0, size=(200, 2))
    x, dk = skorohod_points(constraint, H, y)

    assert geometry.distance(x).max() <= 1e-10
    np.testing.assert_allclose(x + np.einsum("nij,nj->ni", H, dk), y, atol=1e-10)
    outside = geometry.distance(y) > 0
    # Δk = ν(x - c), ν ≥ 0
    along = np.sum(dk[outside] * (x[outside] - geometry.center), axis=1)
    np.testing.assert_allclose(along, np.linalg.norm(dk[outside], axis=1), rtol=1e-8, atol=1e-12)


def test_skorohod_step_on_polytope_matches_box(rng):
    box = ConvexConstraint.indicator(Box([-1.0, -1.0], [1.0, 1.0]))
    polytope = ConvexConstraint.indicator(Polytope([[1, 0], [0, 1], [-1, 0], [0, -1]], [1, 1, 1, 1]))
    H = np.stack([_random_spd(rng, 2, 5.0) for _ in range(50)])
    y = rng.uniform(-3.0, 3.0, size=(50, 2))
    x_box, dk_box = skorohod_points(box, H, y)
    x_poly, dk_poly = skorohod_points(polytope, H, y)
    np.testing.assert_allclose(x_poly, x_box, atol=1e-6)
    np.testing.assert_allclose(dk_poly, dk_box, atol=1e-6)


def test_normal_cone_on_oblique_polytope():
    # {x ≤ 1, x + y ≤ 0.1}: точки зондирования должны лежать в множестве
    constraint = ConvexConstraint.indicator(Polytope([[1, 0], [1, 1]], [1, 0.1]))
    probes = default_probes(constraint, 64, seed=0)
    assert constraint.geometry.distance(probes).max() <= 1e-8
    # отражение по нормали второй грани
    assert normal_cone_residuals(constraint, [[0.55, -0.45]], [[1.0, 1.0]], probes).max() <= 1e-8
    assert normal_cone_residuals(constraint, [[0.55, -0.45]], [[1.0, -1.0]], probes).max() > 0.1


# Схемы

def test_penalized_scheme_keeps_interior_start(unit_ball, small_grid, noise):
    system = _zero_system(unit_ball, [0.3, 0.1])
    path = simulate_penalized(system, 0.1, small_grid, 8, noise)
    np.testing.assert_array_equal(path.states, np.broadcast_to([0.3, 0.1], path.states.shape))
    assert path.variation.max() == 0.0


def test_penalized_scheme_relaxes_towards_the_set(half_line, noise):
    eps = 0.1
    grid = TimeGrid(0.0, 1.0, 1000)
    path = simulate_penalized(_zero_system(half_line, [-1.0]), eps, grid, 2, noise)
    x = path.states[0, :, 0]
    np.testing.assert_allclose(x, -(1 - grid.h / eps) ** np.arange(grid.steps + 1), rtol=1e-10)
    assert np.all(np.diff(x) > 0)
    np.testing.assert_allclose(x, -np.exp(-grid.nodes / eps), atol=5e-3)


def test_penalized_scheme_enforces_stability_rule(half_line):
    system = _zero_system(half_line, [0.0])
    with pytest.raises(ConfigurationError):
        check_stability(system, 0.01, TimeGrid(0.0, 1.0, 10))
    check_stability(system, 0.5, TimeGrid(0.0, 1.0, 10))


def test_projected_scheme_keeps_constant_path(unit_ball, small_grid, noise):
    path = simulate_projected(_zero_system(unit_ball, [0.5, 0.0], np.diag([2.0, 1.0])), small_grid, 4, noise)
    np.testing.assert_array_equal(path.states, np.broadcast_to([0.5, 0.0], path.states.shape))
    assert np.all(path.k == 0.0)


def test_projected_scheme_with_inward_drift_never_reflects(small_grid, noise):
    path = simulate_projected(_constant_drift_system(5.0, 0.1, 1.0), small_grid, 64, noise)
    assert path.variation.max() == 0.0


def test_projected_scheme_stays_feasible(noise):
    system = build_system("ball_bm", radius=1.0, H=(3.0, 1.0), sigma=1.0)
    path = simulate_projected(system, TimeGrid(0.0, 1.0, 128), 32, noise)
    assert system.constraint.domain_distance(path.states.reshape(-1, 2)).max() <= 1e-10
    assert np.all(np.diff(path.variation, axis=1) >= 0.0)


def test_projected_scheme_rejects_bad_inputs(half_line, small_grid):
    with pytest.raises(ConfigurationError):
        simulate_projected(_zero_system(half_line, [-1.0]), small_grid, 2)
    smooth = ConvexConstraint.smooth_convex(quadratic([[1.0]]))
    with pytest.raises(UnsupportedGeometryError):
        simulate_projected(_zero_system(smooth, [0.0]), small_grid, 2)


def test_reflected_brownian_motion_mean():
    system = build_system("reflected_bm")
    path = simulate_projected(system, TimeGrid(0.0, 1.0, 1024), 256, NoiseSource(42))
    terminal = path.terminal()[:, 0]
    stderr = terminal.std(ddof=1) / np.sqrt(len(terminal))
    assert abs(terminal.mean() - np.sqrt(2.0 / np.pi)) <= 3.0 * stderr


def test_euler_iteration_with_constant_coefficients_stops_changing(noise):
    system = build_system("reflected_bm", x0=0.5)
    result = euler_iteration(system, 2, 3, TimeGrid(0.0, 1.0, 32), 16, noise)
    assert len(result.iterates) == 3
    assert result.distances[0] > 0.0
    assert result.distances[1] == 0.0
    assert result.distances[2] == 0.0
    assert result.is_cauchy()


def test_euler_iteration_needs_positive_count(noise):
    with pytest.raises(ConfigurationError):
        euler_iteration(build_system("reflected_bm"), 2, 0, TimeGrid(0.0, 1.0, 8), 2, noise)


# Диагностика

def test_constant_path_has_zero_residuals():
    system = build_system("reflected_bm", x0=0.5)
    grid = TimeGrid(0.0, 1.0, 16)
    path = PathEnsemble.constant(system.x0, grid, 4, noise=np.zeros((4, 16, 1)), constraint=system.constraint)
    report = residual_report(path, system)
    assert report.passed
    assert report.inequality_residual <= 0.0
    assert report.equation_residual == 0.0
    assert report.feasibility_residual == 0.0
    assert report.complementarity == 0.0


def test_projected_path_satisfies_the_equation(noise):
    system = build_system("ball_bm")
    path = simulate_projected(system, TimeGrid(0.0, 1.0, 64), 32, noise)
    report = residual_report(path, system)
    assert report.equation_residual <= 1e-9
    assert report.variation_consistent
    assert report.normal_cone_residual <= 1e-8
    assert report.passed


def test_interior_bound_on_reflected_paths(noise):
    half = simulate_projected(build_system("reflected_bm"), TimeGrid(0.0, 1.0, 256), 64, noise)
    assert interior_bound_check(half, InteriorCertificate([1.0], 1.0)) >= -1e-8

    ball = simulate_projected(build_system("ball_bm", H=(2.0, 1.0)), TimeGrid(0.0, 1.0, 256), 64, noise)
    assert interior_bound_check([ball], InteriorCertificate([0.0, 0.0], 0.9)) >= -1e-8


def test_interior_bound_margin_is_zero_without_reflection(small_grid):
    system = build_system("reflected_bm", x0=0.5)
    path = PathEnsemble.constant(system.x0, small_grid, 3, constraint=system.constraint)
    assert interior_bound_check(path, InteriorCertificate([1.0], 1.0)) == 0.0


# Сравнение схем, репликации, файлы

def test_compare_schemes_decreases_with_epsilon():
    system = build_system("ou")
    report = compare_schemes(system, [0.1, 0.05, 0.025], TimeGrid(0.0, 1.0, 512), 64, NoiseSource(42))
    assert [e.parameter for e in report.entries] == [0.1, 0.05, 0.025]
    assert report.monotone


def test_replications_keep_order_and_do_not_depend_on_threads():
    assert run_replications(lambda r: r * r, 5, threads=3) == [0, 1, 4, 9, 16]
    system = build_system("reflected_bm")
    grid = TimeGrid(0.0, 1.0, 32)

    def task(r):
        return simulate_projected(system, grid, 16, NoiseSource(42, r)).states

    serial = run_replications(task, 4, threads=1)
    parallel = run_replications(task, 4, threads=4)
    for a, b in zip(serial, parallel):
        np.testing.assert_array_equal(a, b)


def test_trajectories_round_trip(tmp_path, noise):
    system = build_system("ball_bm")
    ensembles = [simulate_projected(system, TimeGrid(0.0, 1.0, 16), 4, noise.for_replication(r)) for r in range(2)]
    path = save_trajectories(ensembles, tmp_path / "trajectories.csv")
    loaded = load_trajectories(path)
    assert len(loaded) == 2
    for original, restored in zip(ensembles, loaded):
        np.testing.assert_array_equal(restored.states, original.states)
        np.testing.assert_allclose(restored.k, original.k, atol=1e-12)
        assert restored.replication == original.replication


def test_sup_distance_requires_equal_shapes(small_grid):
    a = PathEnsemble.constant([0.0], small_grid, 2)
    b = PathEnsemble.constant([0.0], small_grid, 3)
    with pytest.raises(ShapeError):
        sup_distance_squared([a], [b])
    c = PathEnsemble.constant([1.0], small_grid, 2)
    np.testing.assert_array_equal(sup_distance_squared([a], [c]), [1.0, 1.0])
