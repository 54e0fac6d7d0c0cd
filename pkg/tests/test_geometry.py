import numpy as np
import pytest

from bnlab import geometry as geo


def test_distance_closed_forms():
    assert geo.distance_to_boundary(geo.interval01(), 0.1) == pytest.approx(0.1)
    assert geo.distance_to_boundary(geo.unit_ball(2), np.array([0.6, 0.0])) == pytest.approx(0.4)
    assert geo.distance_to_boundary(geo.half_space(3), np.array([0.25, 7.0, -2.0])) == pytest.approx(0.25)
    assert geo.distance_to_boundary(geo.half_line(), 3.2) == pytest.approx(3.2)


def test_membership_errors():
    with pytest.raises(geo.DomainMembershipError):
        geo.distance_to_boundary(geo.interval01(), 1.5)
    with pytest.raises(geo.DomainMembershipError):
        geo.distance_to_boundary(geo.unit_ball(2), np.array([1.2, 0.0]))


@pytest.mark.parametrize("domain,builder", [
    (geo.interval01(), lambda rng: rng.uniform(0, 1, size=(200, 1))),
    (geo.unit_ball(2), lambda rng: rng.normal(size=(200, 2)) * 0.4),
    (geo.half_space(2), lambda rng: np.column_stack([rng.uniform(0, 3, 200), rng.normal(size=200)])),
])
def test_distance_lipschitz(domain, builder):
    rng = np.random.default_rng(0)
    pts = builder(rng)
    pts2 = builder(rng)
    r1 = np.atleast_1d(geo.distance_to_boundary(domain, pts, check=False))
    r2 = np.atleast_1d(geo.distance_to_boundary(domain, pts2, check=False))
    dist = np.linalg.norm(pts - pts2, axis=-1)
    assert np.all(np.abs(r1 - r2) <= dist + 1e-12)


def test_weight_examples():
    I = geo.interval01()
    H = geo.half_line()
    assert geo.weight(I, 0.1, geo.WeightedSpaceParams(2, 2, 0)) == pytest.approx(0.01)
    assert geo.weight(H, 3.0, geo.WeightedSpaceParams(2, 0, 1)) == pytest.approx(0.1)
    # both branches evaluated directly: min(0.5^1, (1+0.25)^-1) = min(0.5, 0.8)
    assert geo.weight(H, 0.5, geo.WeightedSpaceParams(2, 1, 1)) == pytest.approx(0.5)


def test_weight_range_and_min_consistency():
    B = geo.unit_ball(2)
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(300, 2)) * 0.4
    pts = pts[np.linalg.norm(pts, axis=1) < 0.99]
    prm = geo.WeightedSpaceParams(2, 1.3, 0.7)
    w = geo.weight(B, pts, prm)
    assert np.all(w > 0) and np.all(w <= 1)
    rho = geo.distance_to_boundary(B, pts)
    w1 = rho ** prm.theta
    w2 = (1 + (pts ** 2).sum(axis=1)) ** (-prm.delta)
    assert np.allclose(w, np.minimum(w1, w2))


def test_params_extension_flag():
    assert geo.WeightedSpaceParams(2, 2, 0).extension_ok
    assert not geo.WeightedSpaceParams(2, 3.5, 0).extension_ok
    with pytest.raises(ValueError):
        geo.WeightedSpaceParams(1.0, 2, 0)
    with pytest.raises(ValueError):
        geo.WeightedSpaceParams(2, -1, 0)


def test_boundary_quadrature_interval_atoms():
    grid = geo.boundary_quadrature(geo.interval01(), level=3)
    assert np.allclose(sorted(grid.x), [0.0, 1.0])
    assert np.allclose(grid.weights, [1.0, 1.0])


def test_boundary_quadrature_circle_and_sphere():
    g2 = geo.boundary_quadrature(geo.unit_ball(2), level=6)
    assert g2.n == 64
    assert g2.weights.sum() == pytest.approx(2 * np.pi, abs=1e-12)
    g3 = geo.boundary_quadrature(geo.unit_ball(3), level=5)
    assert g3.weights.sum() == pytest.approx(4 * np.pi, rel=1e-12)


def test_boundary_quadrature_halfspace_truncation():
    g = geo.boundary_quadrature(geo.half_space(2), level=4, c=1.0, t_max=1.0)
    R = geo.gaussian_truncation_radius(1.0, 1.0)
    assert g.weights.sum() == pytest.approx(2 * R, rel=1e-12)
    assert g.tolerance < 1e-11


def test_generic_domain_needs_patches():
    dom = geo.generic_signed(lambda pts: np.ones(len(np.atleast_2d(pts))))
    with pytest.raises(geo.UnsupportedDomainError):
        geo.boundary_quadrature(dom)


def test_polygon_domain_distance_and_boundary():
    square = geo.polygon_domain([[0, 0], [2, 0], [2, 2], [0, 2]])
    assert geo.distance_to_boundary(square, np.array([1.0, 1.0])) == pytest.approx(1.0)
    assert geo.distance_to_boundary(square, np.array([0.3, 1.0])) == pytest.approx(0.3)
    bq = geo.boundary_quadrature(square, level=4)
    assert bq.weights.sum() == pytest.approx(8.0, rel=1e-12)


def test_interior_grid_uniform_midpoint():
    g = geo.interval_grid(n=4)
    assert np.allclose(g.x, [1 / 8, 3 / 8, 5 / 8, 7 / 8])
    assert np.allclose(g.weights, 0.25)


def test_interior_grid_graded_mass_and_spacing():
    g = geo.interval_grid(graded=True, level=8)
    assert g.weights.sum() == pytest.approx(1.0, abs=1e-13)
    # node spacing shrinks proportionally to the distance to the nearest endpoint
    x = np.sort(g.x)
    gaps = np.diff(x)
    assert gaps[0] < gaps.max() / 32
    left = x[x < 0.25]
    ratio = np.diff(left) / left[:-1]
    assert ratio.max() <= 2.0 + 1e-12


def test_halfline_grid_weighted_integral():
    g = geo.halfline_grid(level=10, cutoff=20.0, per_panel=32)
    val = (g.weights / (1 + g.x ** 2)).sum()
    assert val == pytest.approx(np.arctan(20.0), rel=2e-4)


def test_refinement_monotonicity():
    g1 = geo.interval_grid(graded=True, level=6)
    g2 = geo.interval_grid(graded=True, level=9)
    assert g2.n > g1.n
    assert g2.tolerance <= g1.tolerance * 10  # recorded tolerance stays tiny
    b1 = geo.boundary_quadrature(geo.unit_ball(2), level=4)
    b2 = geo.boundary_quadrature(geo.unit_ball(2), level=6)
    assert b2.n > b1.n


def test_ball_grid_volume():
    g = geo.ball_grid(2, level=6, n_ang=32)
    assert g.weights.sum() == pytest.approx(np.pi, rel=1e-12)
    g3 = geo.ball_grid(3, level=5, n_ang=24)
    assert g3.weights.sum() == pytest.approx(4 * np.pi / 3, rel=1e-10)


def test_grid_text_roundtrip():
    g = geo.interval_grid(graded=True, level=4)
    txt = g.to_text()
    g2 = geo.grid_from_text(txt)
    assert np.allclose(g2.nodes, g.nodes)
    assert np.allclose(g2.weights, g.weights)
    assert g2.refinement_level == g.refinement_level


def test_grids_immutable():
    g = geo.interval_grid(n=8)
    with pytest.raises(ValueError):
        g.nodes[0, 0] = 5.0
