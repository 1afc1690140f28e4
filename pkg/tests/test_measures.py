from itertools import permutations

import numpy as np
import pytest

from measures import (
    EmpiricalMeasure,
    assignment_cost,
    dirac,
    measure_from_csv,
    measure_to_csv,
    second_moment_sup,
    w2_to_origin,
    wasserstein2,
)
from utils.errors import DomainError, UnsupportedInputError


def test_dirac():
    assert dirac(0.0).atoms.tolist() == [[0.0]]
    mu = dirac([1.0, 2.0])
    assert mu.size == 1 and mu.dim == 2
    assert wasserstein2(mu, mu) == 0.0


def test_weights_are_validated():
    with pytest.raises(DomainError):
        EmpiricalMeasure([[0.0], [1.0]], [0.7, 0.7])
    with pytest.raises(DomainError):
        EmpiricalMeasure(np.empty((0, 2)))


def test_wasserstein_between_diracs():
    assert wasserstein2(dirac([0.0, 0.0]), dirac([3.0, 4.0])) == pytest.approx(5.0)


def test_wasserstein_1d_pairs_sorted_atoms():
    mu = EmpiricalMeasure([0.0, 2.0])
    nu = EmpiricalMeasure([1.0, 3.0])
    assert wasserstein2(mu, nu) == pytest.approx(1.0)
    assert wasserstein2(mu, mu) == 0.0


def test_wasserstein_1d_with_unequal_weights():
    mu = EmpiricalMeasure([0.0, 1.0], [0.25, 0.75])
    nu = dirac(1.0)
    assert wasserstein2(mu, nu) == pytest.approx(0.5)


def test_assignment_matches_brute_force(rng):
    for _ in range(100):
        n = int(rng.integers(2, 6))
        a = rng.normal(size=(n, 2))
        b = rng.normal(size=(n, 2))
        best = min(np.mean(np.sum((a - b[list(p)]) ** 2, axis=1)) for p in permutations(range(n)))
        assert assignment_cost(EmpiricalMeasure(a), EmpiricalMeasure(b)) == pytest.approx(best, abs=1e-12)


def test_sorting_matches_assignment_in_1d(rng):
    for _ in range(50):
        a = rng.normal(size=6)
        b = rng.normal(size=6)
        mu, nu = EmpiricalMeasure(a), EmpiricalMeasure(b)
        assert wasserstein2(mu, nu) ** 2 == pytest.approx(assignment_cost(mu, nu), abs=1e-12)


def test_unsupported_pairs_are_rejected():
    with pytest.raises(UnsupportedInputError):
        wasserstein2(EmpiricalMeasure(np.zeros((2, 2))), EmpiricalMeasure(np.zeros((3, 2))))
    with pytest.raises(UnsupportedInputError):
        wasserstein2(dirac([0.0]), dirac([0.0, 0.0]))


def test_distance_to_origin():
    assert w2_to_origin(dirac([3.0, 4.0])) == pytest.approx(5.0)
    assert w2_to_origin(EmpiricalMeasure([1.0, -1.0])) == pytest.approx(1.0)
    assert w2_to_origin(dirac([0.0])) == 0.0


def test_second_moment_sup_of_constant_paths():
    c = np.array([1.0, -2.0])
    path = np.tile(c, (10, 1))
    assert second_moment_sup(path) == pytest.approx(5.0)
    assert second_moment_sup(np.stack([path, -path])) == pytest.approx(5.0)


def test_moments_and_pushforward():
    mu = EmpiricalMeasure([[1.0, 0.0], [3.0, 2.0]])
    np.testing.assert_allclose(mu.mean(), [2.0, 1.0])
    np.testing.assert_allclose(mu.covariance(), [[1.0, 1.0], [1.0, 1.0]])
    image = mu.pushforward(np.diag([2.0, 0.5]))
    np.testing.assert_allclose(image.atoms, [[2.0, 0.0], [6.0, 1.0]])


def test_measure_csv_round_trip(tmp_path):
    mu = EmpiricalMeasure([[0.1, 0.2], [0.3, 0.4], [1.0 / 3.0, 2.0]], [0.2, 0.3, 0.5])
    restored = measure_from_csv(measure_to_csv(mu, tmp_path / "measure.csv"))
    np.testing.assert_array_equal(restored.atoms, mu.atoms)
    np.testing.assert_array_equal(restored.weights, mu.weights)
