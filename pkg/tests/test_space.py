import numpy as np
import pytest

from pbiharmonic.analysis import eoc, lp_norm
from pbiharmonic.manufactured import exact_u
from pbiharmonic.mesh import build_structured
from pbiharmonic.space import (DgFunction, build_space, l2_project, laplacian_moments)

from conftest import random_function


def test_dof_counts():
    assert build_space(build_structured(1), 2).total_dofs == 12
    assert build_space(build_structured(2), 3).total_dofs == 80
    for n, k in [(3, 2), (2, 4)]:
        assert build_space(build_structured(n), k).total_dofs == 2 * n * n * (k + 1) * (k + 2) // 2


def test_rejects_low_degree():
    with pytest.raises(ValueError):
        build_space(build_structured(1), 1)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_mass_matrix_identity(k):
    space = build_space(build_structured(3), k)
    _, w, val, _, _ = space.volume_tables(2 * k)
    M = np.einsum("eqi,eq,eqj->eij", val, w, val)
    assert np.abs(M - np.eye(space.dofs_per_element)).max() < 1e-12


def test_zero_evaluation(space_n2k2):
    v, g, H = space_n2k2.zero.evaluate(3, (0.2, 0.3))
    assert v == 0 and not np.any(g) and not np.any(H)


def test_evaluate_out_of_range(space_n2k2):
    with pytest.raises(IndexError):
        space_n2k2.zero.evaluate(space_n2k2.mesh.num_elements, (0.1, 0.1))


def test_reproduces_quadratics(space_n2k2):
    sq = l2_project(lambda x, y: x**2, space_n2k2)
    xy = l2_project(lambda x, y: x * y, space_n2k2)
    for K in range(space_n2k2.mesh.num_elements):
        for ref in [(0.1, 0.2), (0.6, 0.3), (1 / 3, 1 / 3)]:
            _, _, H = sq.evaluate(K, ref)
            assert np.allclose(H, [[2, 0], [0, 0]], atol=1e-10)
            x, y = space_n2k2.to_physical(K, np.array(ref))
            _, g, _ = xy.evaluate(K, ref)
            assert np.allclose(g, [y, x], atol=1e-12)


@pytest.mark.parametrize("k", [2, 3])
def test_projection_reproduces_polynomials(k, rng):
    space = build_space(build_structured(3), k)
    c = rng.standard_normal(4)
    g = lambda x, y: c[0] + c[1] * x * y + c[2] * y**2 + c[3] * x**k
    v = l2_project(g, space)
    pts, _, _ = space.volume_quadrature()
    assert np.abs(v.at_volume_points() - g(pts[..., 0], pts[..., 1])).max() < 1e-10
    one = l2_project(lambda x, y: np.ones_like(x), space)
    assert np.abs(one.at_volume_points() - 1).max() < 1e-12


def test_projection_idempotent(space_n2k2):
    v = l2_project(lambda x, y: np.sin(3 * x) * np.exp(y), space_n2k2)
    w = l2_project(lambda x, y: _eval_anywhere(v, x, y), space_n2k2)
    assert np.abs(w.coeffs - v.coeffs).max() < 1e-12


def _eval_anywhere(v, x, y):
    # evaluation at volume points of the same rule, element by element
    pts, _, _ = v.space.volume_quadrature()
    assert pts.shape[:2] == x.shape
    return v.at_volume_points()


def test_best_approximation(space_n2k2, rng):
    g = lambda x, y: np.cos(4 * x + y) + x * y**3
    pg = l2_project(g, space_n2k2)
    err = lp_norm(pg.at_volume_points(space_n2k2.quad_degree + 4)
                  - _g_at(space_n2k2, g), 2, space_n2k2)
    for _ in range(20):
        v = pg + random_function(space_n2k2, rng, 1e-2)
        other = lp_norm(v.at_volume_points(space_n2k2.quad_degree + 4) - _g_at(space_n2k2, g),
                        2, space_n2k2)
        assert err <= other


def _g_at(space, g):
    pts, _, _ = space.volume_quadrature(space.quad_degree + 4)
    return g(pts[..., 0], pts[..., 1])


def test_derivatives_match_finite_differences(rng):
    space = build_space(build_structured(2), 3)
    v = random_function(space, rng)
    K, ref, h = 5, np.array([0.25, 0.35]), 1e-5
    x0 = space.to_physical(K, ref)
    J = space.jac[K]

    def at(x):
        return v.evaluate(K, space.to_reference(K, x))

    val, g, H = at(x0)
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        vp, gp, _ = at(x0 + e)
        vm, gm, _ = at(x0 - e)
        assert (vp - vm) / (2 * h) == pytest.approx(g[i], rel=1e-6, abs=1e-6)
        assert np.allclose((gp - gm) / (2 * h), H[:, i], rtol=1e-6, atol=1e-5)
    assert J.shape == (2, 2)


def test_integration_examples(space_n2k2):
    assert space_n2k2.integrate_volume(lambda x, y: np.ones_like(x)) == pytest.approx(1, abs=1e-12)
    assert space_n2k2.integrate_volume(lambda x, y: x * y) == pytest.approx(0.25, abs=1e-12)
    bnd = space_n2k2.mesh.boundary_mask
    assert space_n2k2.integrate_facets(lambda x, y: np.ones_like(x), facets=bnd) == \
        pytest.approx(4, abs=1e-12)


def test_projection_rate_of_benchmark():
    errs = []
    for n in (8, 16, 32):
        space = build_space(build_structured(n), 2)
        errs.append(lp_norm(l2_project(exact_u, space, 10).at_volume_points(10)
                            - _g_at_deg(space, exact_u, 10), 2, space, 10))
    rates = [eoc(errs[i], errs[i + 1], 1, 0.5) for i in range(2)]
    assert abs(rates[-1] - 3) < 0.2, rates


def _g_at_deg(space, g, deg):
    pts, _, _ = space.volume_quadrature(deg)
    return g(pts[..., 0], pts[..., 1])


@pytest.mark.parametrize("k", [2, 3])
def test_laplacian_moments_by_parts(k):
    # smooth G: moments by parts equal direct quadrature of Lap G
    space = build_space(build_structured(3), k)
    G = lambda x, y: np.sin(2 * x) * np.cos(3 * y)
    dG = lambda x, y: np.stack([2 * np.cos(2 * x) * np.cos(3 * y),
                                -3 * np.sin(2 * x) * np.sin(3 * y)], axis=-1)
    lapG = lambda x, y: -13 * G(x, y)
    a = laplacian_moments(G, dG, space, 16)
    b = l2_project(lapG, space, 16).coeffs
    assert np.abs(a - b).max() < 1e-11 * np.abs(b).max()


def test_dgfunction_arithmetic(space_n2k2, rng):
    u, v = random_function(space_n2k2, rng), random_function(space_n2k2, rng)
    w = 2.0 * u - v
    assert isinstance(w, DgFunction)
    assert np.allclose(w.coeffs, 2 * u.coeffs - v.coeffs)
