import numpy as np
import pytest

from dynamics import (
    SYSTEMS,
    CoefficientField,
    CostField,
    ObliqueField,
    Sampler,
    build_system,
    derivative_bound,
    inverse_spd,
    jacobi_eigh,
    linear_growth_check,
    sqrt_spd,
    time_oblique_field,
    validate_cost,
    validate_lipschitz,
    validate_oblique,
)
from measures import dirac
from utils.errors import ConfigurationError, SpectralError


def _random_spd(rng, dim, condition):
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    return q @ np.diag(np.logspace(0, np.log10(condition), dim)) @ q.T


def test_sqrt_of_simple_matrices():
    np.testing.assert_allclose(sqrt_spd(np.eye(3)), np.eye(3), atol=1e-12)
    np.testing.assert_allclose(sqrt_spd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-12)


def test_inverse_of_simple_matrices():
    np.testing.assert_allclose(inverse_spd(np.eye(2)), np.eye(2), atol=1e-12)
    np.testing.assert_allclose(inverse_spd(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]), atol=1e-12)


@pytest.mark.parametrize("dim", [2, 5, 16])
def test_sqrt_multiplies_back(rng, dim):
    A = _random_spd(rng, dim, 1e6)
    S = sqrt_spd(A)
    np.testing.assert_allclose(S, S.T, atol=1e-9)
    np.testing.assert_allclose(S @ S, A, atol=1e-9 * np.abs(A).max())


@pytest.mark.parametrize("dim", [2, 5, 16])
def test_inverse_multiplies_back(rng, dim):
    A = _random_spd(rng, dim, 1e4)
    np.testing.assert_allclose(inverse_spd(A) @ A, np.eye(dim), atol=1e-9)


def test_batched_inverse(rng):
    batch = np.stack([_random_spd(rng, 3, 10.0) for _ in range(4)])
    inv = inverse_spd(batch)
    np.testing.assert_allclose(np.einsum("bij,bjk->bik", inv, batch), np.broadcast_to(np.eye(3), (4, 3, 3)),
                               atol=1e-10)


def test_jacobi_is_reproducible(rng):
    A = _random_spd(rng, 6, 100.0)
    w1, v1 = jacobi_eigh(A)
    w2, v2 = jacobi_eigh(A.copy())
    np.testing.assert_array_equal(w1, w2)
    np.testing.assert_array_equal(v1, v2)
    np.testing.assert_allclose(np.sort(w1), np.linalg.eigvalsh(A), rtol=1e-10)


def test_non_spd_input_is_rejected():
    with pytest.raises(SpectralError) as info:
        sqrt_spd(np.diag([1.0, -2.0]))
    assert info.value.eigenvalue == pytest.approx(-2.0)
    with pytest.raises(SpectralError):
        inverse_spd(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_coefficients_must_be_normalized():
    with pytest.raises(ConfigurationError):
        CoefficientField(lambda x, mu, u, t: np.ones_like(x), lambda x, mu, u, t: np.zeros((len(x), 1, 1)),
                         dim=1, noise_dim=1, lipschitz=1.0)
    with pytest.raises(ConfigurationError):
        CostField(lambda x, u: 1.0 + x[:, 0], lambda x: x[:, 0], lipschitz=1.0)


def test_identity_drift_passes_lipschitz_check():
    field = CoefficientField(lambda x, mu, u, t: x, lambda x, mu, u, t: np.zeros((len(x), 1, 1)),
                             dim=1, noise_dim=1, lipschitz=1.0, name="identity")
    report = validate_lipschitz(field, Sampler(1, seed=1), pairs=1000)
    assert report.passed
    assert report.estimate <= 1.0 + 1e-12


def test_quadratic_drift_violates_lipschitz_check():
    field = CoefficientField(lambda x, mu, u, t: x ** 2, lambda x, mu, u, t: np.zeros((len(x), 1, 1)),
                             dim=1, noise_dim=1, lipschitz=1.0, name="square")
    report = validate_lipschitz(field, Sampler(1, seed=1, scale=10.0), pairs=1000)
    assert not report.passed
    assert report.estimate > 5.0
    assert report.violations


def test_example31_satisfies_its_assumptions():
    system = build_system("example31")
    sampler = Sampler(2, seed=3)
    assert validate_lipschitz(system.coefficients, sampler, pairs=500).passed
    assert linear_growth_check(system.coefficients, sampler, samples=500).passed
    report = validate_oblique(system.oblique, sampler, samples=1000)
    assert report.passed, report.violations
    assert 3.0 <= report.details["eigen_min"] <= report.details["rayleigh_min"] + 1e-12
    assert report.details["rayleigh_max"] - 1e-12 <= report.details["eigen_max"] <= 5.0 + np.e


def test_example31_is_normalized_at_origin():
    system = build_system("example31")
    origin = np.zeros((1, 2))
    assert np.abs(system.coefficients.drift(origin, dirac([0.0, 0.0]))).max() <= 1e-12
    assert np.abs(system.coefficients.diffusion(origin, dirac([0.0, 0.0]))).max() <= 1e-12


def test_identity_oblique_field():
    report = validate_oblique(ObliqueField.constant(np.eye(2)), Sampler(2, seed=0), samples=50)
    assert report.passed
    assert report.details["eigen_min"] == pytest.approx(1.0)
    assert report.details["eigen_max"] == pytest.approx(1.0)


def test_asymmetric_oblique_field_is_flagged():
    field = ObliqueField(dim=2, a_H=0.5, b_H=2.0, matrix=lambda x, mu: np.array([[1.0, 0.5], [0.0, 1.0]]))
    report = validate_oblique(field, Sampler(2, seed=0), samples=200)
    assert not report.passed
    assert any("симметрия" in v for v in report.violations)


def test_oblique_bounds_are_checked_at_construction():
    with pytest.raises(ConfigurationError):
        ObliqueField(dim=1, a_H=2.0, b_H=1.0, time_matrix=lambda t: np.eye(1))
    with pytest.raises(ConfigurationError):
        ObliqueField(dim=1, a_H=1.0, b_H=1.0)


def test_derivative_bound_of_affine_family():
    bound = derivative_bound(time_oblique_field("affine", (0.0, 1.0), H0=1.0, H1=1.0), (0.0, 1.0))
    assert bound.M == pytest.approx(1.0)
    assert bound.inv_sqrt_bound == pytest.approx(0.5)
    assert not bound.fallback_used


def test_derivative_bound_falls_back_to_differences():
    field = time_oblique_field("exponential", (0.0, 1.0), H0=1.0, rate=0.5, analytic_derivative=False)
    bound = derivative_bound(field, (0.0, 1.0))
    assert bound.fallback_used
    assert bound.M == pytest.approx(0.5 * np.exp(0.5), rel=1e-6)


def test_cost_validator():
    costs = CostField(lambda x, u: np.abs(x[:, 0]), lambda x: 2.0 * np.abs(x[:, 0]), lipschitz=2.0)
    report = validate_cost(costs, Sampler(1, seed=0), controls=[-1.0, 1.0], pairs=500)
    assert report.passed
    assert not validate_cost(costs.scaled(3.0), Sampler(1, seed=0), controls=[0.0], pairs=500).violations
    with pytest.raises(ConfigurationError):
        validate_cost(costs, Sampler(1, seed=0), controls=[])


def test_library_lookup():
    assert {"example31", "example31_strong", "linear", "ou", "reflected_bm", "ball_bm"} <= set(SYSTEMS)
    assert "example31" in build_system("example31").describe()
    assert "Орнштейна" in build_system("ou").describe()
    with pytest.raises(ConfigurationError):
        build_system("missing")
    with pytest.raises(ConfigurationError):
        build_system("ou", unknown_parameter=1.0)


def test_rotation_family_needs_two_dimensions():
    with pytest.raises(ConfigurationError):
        time_oblique_field("rotation-scaled", (0.0, 1.0), dim=1)
    field = time_oblique_field("rotation-scaled", (0.0, 1.0), dim=2, diag=(2.0, 1.0), omega=1.0, beta=0.5)
    np.testing.assert_allclose(field.at_time(0.0), np.diag([2.0, 1.0]), atol=1e-12)
