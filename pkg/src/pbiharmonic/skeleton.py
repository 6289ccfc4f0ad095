"""Jump, average and tensor-jump operators on the mesh skeleton.

Facet normals point from the owner K1 to the neighbour K2, so n_{K1} = n and
n_{K2} = -n.  On boundary facets only the K1 trace exists and the one-sided
conventions apply: avg(v) = v, jump(v) = v n, tjump(q) = q (x) n.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import segment_rule
from .space import DgFunction, DgSpace


@dataclass
class FacetTracePair:
    """Two-sided traces at facet quadrature points.

    ``side1``/``side2`` have shape (nf, nq) for scalars or (nf, nq, 2) for
    vectors; ``side2`` is ignored where ``interior`` is False.
    """

    normals: np.ndarray
    interior: np.ndarray
    side1: np.ndarray
    side2: np.ndarray
    points: np.ndarray | None = None
    weights: np.ndarray | None = None

    def swapped(self) -> "FacetTracePair":
        """Same traces with owner and neighbour roles exchanged (interior only)."""
        if not np.all(self.interior):
            raise ValueError("cannot swap sides of boundary facets")
        return FacetTracePair(-self.normals, self.interior, self.side2, self.side1,
                              self.points, self.weights)

    def _mask(self, ndim):
        return self.interior.reshape((-1,) + (1,) * (ndim - 1))

    def _n(self):
        return self.normals[:, None, :]


def avg_scalar(tr: FacetTracePair) -> np.ndarray:
    m = tr._mask(tr.side1.ndim)
    return np.where(m, 0.5 * (tr.side1 + tr.side2), tr.side1)


avg_vector = avg_scalar


def _difference(tr):
    m = tr._mask(tr.side1.ndim)
    return np.where(m, tr.side1 - tr.side2, tr.side1)


def jump_scalar(tr: FacetTracePair) -> np.ndarray:
    """Vector jump v1 n_{K1} + v2 n_{K2}, shape (nf, nq, 2)."""
    return _difference(tr)[..., None] * tr._n()


def jump_vector(tr: FacetTracePair) -> np.ndarray:
    """Scalar normal jump q1 . n_{K1} + q2 . n_{K2}, shape (nf, nq)."""
    return np.einsum("fqi,fqi->fq", _difference(tr), np.broadcast_to(tr._n(), tr.side1.shape))


def tensor_jump(tr: FacetTracePair) -> np.ndarray:
    """q1 (x) n_{K1} + q2 (x) n_{K2}, shape (nf, nq, 2, 2)."""
    return _difference(tr)[..., :, None] * tr._n()[..., None, :]


def traces(f: DgFunction, kind: str = "value", degree: int | None = None) -> FacetTracePair:
    """Two-sided traces of ``f`` (``kind`` is 'value' or 'gradient')."""
    space = f.space
    pts, w = space.facet_quadrature(degree)
    c = f.element_coeffs
    fe = space.mesh.facet_elements
    sides = []
    for s in (0, 1):
        val, grad = space.facet_tables(degree, side=s)
        cs = c[np.where(fe[:, s] < 0, fe[:, 0], fe[:, s])]
        if kind == "value":
            t = np.einsum("fqb,fb->fq", val, cs)
        elif kind == "gradient":
            t = np.einsum("fqbi,fb->fqi", grad, cs)
        else:
            raise ValueError(f"unknown trace kind {kind!r}")
        sides.append(t)
    return FacetTracePair(space.mesh.normals, fe[:, 1] >= 0, sides[0], sides[1], pts, w)


def vector_traces(q: tuple[DgFunction, DgFunction], degree: int | None = None) -> FacetTracePair:
    """Traces of a vector field given componentwise."""
    a, b = (traces(c, "value", degree) for c in q)
    return FacetTracePair(a.normals, a.interior, np.stack([a.side1, b.side1], -1),
                          np.stack([a.side2, b.side2], -1), a.points, a.weights)


# --------------------------------------------------------------------------
# elementwise integration identities


def _element_boundary_integrals(phi: DgFunction, q, degree):
    """Sum over K of the integral over dK of phi q (x) n_K, evaluated element by
    element on each element's own edge parametrisation."""
    space: DgSpace = phi.space
    mesh = space.mesh
    rule = segment_rule(space.quad_degree if degree is None else degree)
    nel = mesh.num_elements
    verts = mesh.vertices[mesh.elements]
    total = np.zeros((2, 2))
    magnitude = 0.0
    # local edge i runs from vertex i+1 to i+2 (counterclockwise)
    for i in range(3):
        p0 = verts[:, (i + 1) % 3]
        p1 = verts[:, (i + 2) % 3]
        t = p1 - p0
        length = np.hypot(t[:, 0], t[:, 1])
        n_out = np.stack([t[:, 1], -t[:, 0]], 1) / length[:, None]
        x = p0[:, None] + rule.points[None, :, None] * t[:, None]
        xi = space.to_reference(np.arange(nel)[:, None], x)
        val, _, _ = space.tabulate(np.arange(nel), xi, derivatives=0)
        phi_v = np.einsum("eqb,eb->eq", val, phi.element_coeffs)
        qv = np.stack([np.einsum("eqb,eb->eq", val, c.element_coeffs) for c in q], -1)
        w = length[:, None] * rule.weights[None, :]
        contrib = np.einsum("eq,eq,eqi,ej->eij", w, phi_v, qv, n_out)
        total += contrib.sum(axis=0)
        magnitude += float(np.abs(contrib).sum())
    return total, magnitude


def _relative(lhs, rhs, scale):
    diff = float(np.max(np.abs(np.asarray(lhs) - np.asarray(rhs))))
    return diff / scale if scale > 0 else diff


def check_elementwise_integration(phi: DgFunction, q: tuple[DgFunction, DgFunction],
                                  degree: int | None = None, tensor: bool = False) -> float:
    """Relative residual of the elementwise integration identity.

    Scalar form: sum_K int_{dK} phi q.n_K against
    int_E jump(q) avg(phi) + int_{E u dOmega} jump(phi) . avg(q).
    Tensor form (``tensor=True``): sum_K int_{dK} phi q (x) n_K against
    int_E tjump(q) avg(phi) + int_{E u dOmega} avg(q) (x) jump(phi).
    The residual is divided by the summed magnitude of the elementwise
    contributions so that it is invariant under scaling of the inputs; zero
    inputs give 0.
    """
    lhs_t, magnitude = _element_boundary_integrals(phi, q, degree)
    tp = traces(phi, "value", degree)
    tq = vector_traces(q, degree)
    w = tp.weights
    inner = tp.interior[:, None]
    avg_phi = avg_scalar(tp)
    jphi = jump_scalar(tp)
    avg_q = avg_vector(tq)
    if tensor:
        t1 = np.einsum("fq,fqij,fq->ij", w * inner, tensor_jump(tq), avg_phi)
        t2 = np.einsum("fq,fqi,fqj->ij", w, avg_q, jphi)
        lhs, rhs = lhs_t, t1 + t2
    else:
        t1 = np.einsum("fq,fq,fq->", w * inner, jump_vector(tq), avg_phi)
        t2 = np.einsum("fq,fqi,fqi->", w, jphi, avg_q)
        lhs, rhs = np.trace(lhs_t), t1 + t2
    return _relative(lhs, rhs, magnitude)
