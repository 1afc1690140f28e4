import numpy as np
import pytest

from convexcore import (
    Ball,
    Box,
    ConvexConstraint,
    HalfSpace,
    InteriorCertificate,
    Polytope,
    check_yosida_properties,
    interior_constants,
    make_geometry,
    normal_cone_residual,
    project,
    quadratic,
    resolvent,
    yosida_gradient,
    yosida_value,
    yosida_value_grid,
)
from utils.errors import CertificateError, ConfigurationError, DomainError, UnsupportedGeometryError


def test_projection_onto_half_plane(right_half_plane):
    np.testing.assert_allclose(project(right_half_plane, [-2.0, 3.0]), [0.0, 3.0])


def test_projection_onto_ball(unit_ball):
    np.testing.assert_allclose(project(unit_ball, [3.0, 4.0]), [0.6, 0.8])


def test_projection_keeps_points_of_the_set(unit_ball, right_half_plane):
    x = np.array([0.3, -0.4])
    np.testing.assert_array_equal(project(unit_ball, x), x)
    np.testing.assert_array_equal(project(right_half_plane, [1.0, -5.0]), [1.0, -5.0])


def test_projection_is_idempotent(rng):
    box = ConvexConstraint.indicator(Box([-1.0, 0.0], [2.0, np.inf]))
    pts = rng.uniform(-4, 4, size=(50, 2))
    once = project(box, pts)
    np.testing.assert_array_equal(project(box, once), once)


def test_polytope_projection_matches_box(rng):
    # {x ≤ 1, y ≤ 1, -x ≤ 1, -y ≤ 1} - тот же брус [-1, 1]²
    polytope = Polytope([[1, 0], [0, 1], [-1, 0], [0, -1]], [1, 1, 1, 1])
    box = Box([-1, -1], [1, 1])
    pts = rng.uniform(-3, 3, size=(40, 2))
    np.testing.assert_allclose(polytope.project(pts), box.project(pts), atol=1e-9)


def test_polytope_corners_lie_in_the_set(rng):
    # точка 1·(1, 0) первой грани нарушает x + y ≤ 0.1
    polytope = Polytope([[1, 0], [1, 1]], [1, 0.1])
    corners = polytope.corners()
    assert len(corners) == 2
    assert np.all(polytope.contains(corners))
    np.testing.assert_allclose(corners, [[0.55, -0.45], [0.05, 0.05]], atol=1e-9)
    assert polytope.distance(polytope.sample(rng, 32)).max() <= 1e-8


def test_geometry_must_contain_origin():
    with pytest.raises(ConfigurationError):
        HalfSpace([1.0], -1.0)
    with pytest.raises(ConfigurationError):
        Box([0.5], [1.0])
    with pytest.raises(ConfigurationError):
        Ball([2.0, 0.0], 1.0)


def test_make_geometry_rejects_unknown_kind():
    with pytest.raises(UnsupportedGeometryError):
        make_geometry("ellipsoid", center=[0.0])
    assert isinstance(make_geometry("ball", center=[0.0], radius=1.0), Ball)


def test_yosida_on_half_line(half_line):
    assert yosida_value(half_line, 0.5, [-1.0]) == pytest.approx(1.0)
    assert yosida_gradient(half_line, 0.5, [-1.0])[0] == pytest.approx(-2.0)
    assert resolvent(half_line, 0.5, [-1.0])[0] == pytest.approx(0.0)


def test_yosida_inside_the_set(half_line):
    assert yosida_value(half_line, 0.1, [2.0]) == 0.0
    assert yosida_gradient(half_line, 0.1, [2.0])[0] == 0.0
    assert resolvent(half_line, 0.1, [2.0])[0] == 2.0


def test_yosida_value_agrees_with_grid_search(half_line):
    assert yosida_value_grid(half_line, 0.5, -1.0) == pytest.approx(1.0, abs=1e-5)


def test_yosida_of_quadratic():
    smooth = ConvexConstraint.smooth_convex(quadratic([[1.0]]))
    # x²/(2(1+ε)), x/(1+ε), x/(1+ε)
    assert yosida_value(smooth, 1.0, [2.0]) == pytest.approx(1.0)
    assert yosida_gradient(smooth, 1.0, [2.0])[0] == pytest.approx(1.0)
    assert resolvent(smooth, 1.0, [2.0])[0] == pytest.approx(1.0)


def test_epsilon_must_be_positive(half_line):
    with pytest.raises(DomainError):
        yosida_value(half_line, 0.0, [1.0])


@pytest.mark.parametrize("constraint", [
    ConvexConstraint.indicator(HalfSpace([-1.0, 0.0], 0.0)),
    ConvexConstraint.indicator(Box([-1.0, -0.5], [1.0, 2.0])),
    ConvexConstraint.indicator(Ball([0.0, 0.0], 1.0)),
    ConvexConstraint.smooth_convex(quadratic([[2.0, 0.5], [0.5, 1.0]])),
], ids=["half-space", "box", "ball", "quadratic"])
def test_yosida_properties_hold(constraint, rng):
    points = rng.uniform(-2.0, 2.0, size=(200, 2))
    report = check_yosida_properties(constraint, [0.1, 0.01, 0.001], points)
    assert report.passed, report.rows()
    assert set(report.properties) == set("abcdefg")


def test_yosida_properties_for_sum_use_grid_tolerance(rng):
    constraint = ConvexConstraint.sum_of(Box([-1.0, -1.0], [1.0, 1.0]), quadratic(np.eye(2)))
    points = rng.uniform(-2.0, 2.0, size=(30, 2))
    report = check_yosida_properties(constraint, [0.1, 0.01], points)
    assert not report.closed_form
    assert report.properties["a"].tolerance == pytest.approx(1e-5)
    assert report.passed, report.rows()


def test_properties_at_origin_hold_exactly(right_half_plane):
    report = check_yosida_properties(right_half_plane, [0.1], np.zeros((1, 2)))
    assert report.properties["d"].max_violation == 0.0
    assert report.properties["g"].max_violation == 0.0


def test_normal_cone_residual(right_half_plane):
    probes = np.array([[0.0, 0.0], [1.0, 1.0], [5.0, -2.0]])
    assert normal_cone_residual(right_half_plane, [0.0, 1.0], [-3.0, 0.0], probes) == 0.0
    assert normal_cone_residual(right_half_plane, [1.0, 1.0], [0.0, 0.0], probes) == 0.0
    assert normal_cone_residual(right_half_plane, [1.0, 1.0], [1.0, 0.0], probes) > 0.0


def test_normal_cone_residual_is_infinite_outside(right_half_plane):
    assert normal_cone_residual(right_half_plane, [-1.0, 0.0], [-1.0, 0.0], np.zeros((1, 2))) == np.inf


def test_interior_constants(unit_ball, right_half_plane):
    assert tuple(interior_constants(unit_ball, InteriorCertificate([0.0, 0.0], 0.9))) == (0.9, 0.0, 0.0)
    assert tuple(interior_constants(right_half_plane, InteriorCertificate([1.0, 0.0], 1.0))) == (1.0, 0.0, 0.0)
    assert interior_constants(unit_ball, InteriorCertificate([0.0, 0.0], 1e-9)).lambda1 == pytest.approx(0.0)


def test_certificate_outside_the_set_is_rejected(unit_ball):
    with pytest.raises(CertificateError):
        interior_constants(unit_ball, InteriorCertificate([0.5, 0.0], 0.9))
    with pytest.raises(CertificateError):
        InteriorCertificate([0.0, 0.0], 0.0)
