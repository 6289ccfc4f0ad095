import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pbiharmonic.mesh import build_structured
from pbiharmonic.skeleton import (FacetTracePair, avg_scalar, avg_vector,
                                  check_elementwise_integration, jump_scalar, jump_vector,
                                  tensor_jump, traces, vector_traces)
from pbiharmonic.space import build_space, l2_project

from conftest import random_function


def _pair(v1, v2, n, interior=True):
    return FacetTracePair(np.array([n], float), np.array([interior]),
                          np.array([[v1]], float), np.array([[v2]], float))


def test_scalar_definitions():
    assert avg_scalar(_pair(2, 4, (1, 0)))[0, 0] == 3
    assert avg_scalar(_pair(7, 0, (0, -1), interior=False))[0, 0] == 7
    assert np.allclose(jump_scalar(_pair(1, 0, (1, 0)))[0, 0], [1, 0])
    assert np.allclose(jump_scalar(_pair(3, 0, (0, -1), interior=False))[0, 0], [0, -3])
    assert np.allclose(jump_scalar(_pair(5, 5, (0.6, 0.8)))[0, 0], 0)


def _vector_pair(rng, nf=6, nq=3, interior=None):
    n = rng.standard_normal((nf, 2))
    n /= np.linalg.norm(n, axis=1)[:, None]
    inner = np.ones(nf, bool) if interior is None else interior
    return FacetTracePair(n, inner, rng.standard_normal((nf, nq, 2)),
                          rng.standard_normal((nf, nq, 2)))


def test_vector_operators(rng):
    tr = _vector_pair(rng, interior=np.array([True, True, True, False, False, True]))
    assert np.allclose(np.trace(tensor_jump(tr), axis1=-2, axis2=-1), jump_vector(tr), atol=1e-14)
    cont = FacetTracePair(tr.normals, tr.interior, tr.side1, tr.side1)
    inner = tr.interior
    assert np.abs(jump_vector(cont)[inner]).max() == 0
    assert np.abs(tensor_jump(cont)[inner]).max() == 0
    assert np.allclose(avg_vector(cont), tr.side1)


def test_linearity_and_sign_covariance(rng):
    a, b = _vector_pair(rng), _vector_pair(rng)
    b = FacetTracePair(a.normals, a.interior, b.side1, b.side2)
    combo = FacetTracePair(a.normals, a.interior, 2 * a.side1 - 3 * b.side1, 2 * a.side2 - 3 * b.side2)
    for op in (avg_vector, jump_vector, tensor_jump):
        assert np.allclose(op(combo), 2 * op(a) - 3 * op(b), atol=1e-12)
    s = FacetTracePair(a.normals, a.interior, a.side1[..., 0], a.side2[..., 0])
    assert np.allclose(jump_scalar(s.swapped()), jump_scalar(s), atol=1e-15)
    # roles swapped with the normal kept: the jump flips sign
    flipped = FacetTracePair(a.normals, a.interior, a.side2[..., 0], a.side1[..., 0])
    assert np.allclose(jump_scalar(flipped), -jump_scalar(s))
    assert np.allclose(avg_scalar(flipped), avg_scalar(s))


def test_traces_evaluated_at_matching_points(space_n2k2):
    g = lambda x, y: np.sin(x + 2 * y)
    v = l2_project(g, space_n2k2, 8)
    tr = traces(v, "value")
    pts = tr.points
    assert pts is not None
    # a continuous (exactly reproduced) field has no jump
    lin = l2_project(lambda x, y: 1 + x - 2 * y, space_n2k2)
    tl = traces(lin, "value")
    assert np.abs(jump_scalar(tl)[tl.interior]).max() < 1e-12
    tg = traces(lin, "gradient")
    assert np.abs(jump_vector(tg)[tg.interior]).max() < 1e-12


def test_identity_zero_input(space_n2k2):
    z = space_n2k2.zero
    assert check_elementwise_integration(z, (z, z)) == 0.0


def test_identity_seed_one():
    rng = np.random.default_rng(1)
    space = build_space(build_structured(2), 2)
    phi = random_function(space, rng)
    q = (random_function(space, rng), random_function(space, rng))
    assert check_elementwise_integration(phi, q) < 1e-10
    assert check_elementwise_integration(phi, q, tensor=True) < 1e-10


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 4), st.sampled_from([2, 3]), st.integers(0, 2**32 - 1))
def test_identity_random(n, k, seed):
    rng = np.random.default_rng(seed)
    space = build_space(build_structured(n), k)
    phi = random_function(space, rng)
    q = (random_function(space, rng), random_function(space, rng))
    assert check_elementwise_integration(phi, q) < 1e-10
    assert check_elementwise_integration(phi, q, tensor=True) < 1e-10


def test_vector_traces_shape(space_n2k2, rng):
    q = (random_function(space_n2k2, rng), random_function(space_n2k2, rng))
    tr = vector_traces(q)
    nf = space_n2k2.mesh.num_facets
    assert tr.side1.shape[0] == nf and tr.side1.shape[-1] == 2
