"""Discontinuous piecewise polynomial spaces with L2-orthonormal element bases."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .mesh import Mesh
from .quadrature import segment_rule, triangle_rule


def _monomial_exponents(k: int) -> list[tuple[int, int]]:
    return [(d - j, j) for d in range(k + 1) for j in range(d + 1)]


def _monomial_tables(points: np.ndarray, exps):
    """Values, gradients and Hessians of x^a y^b at ``points`` (..., 2)."""
    x = points[..., 0][..., None]
    y = points[..., 1][..., None]
    a = np.array([e[0] for e in exps], dtype=float)
    b = np.array([e[1] for e in exps], dtype=float)

    def pw(base, e):
        # 0**negative never contributes: the prefactor is zero there
        return np.where(e >= 0, base ** np.maximum(e, 0), 0.0)

    val = pw(x, a) * pw(y, b)
    gx = a * pw(x, a - 1) * pw(y, b)
    gy = b * pw(x, a) * pw(y, b - 1)
    hxx = a * (a - 1) * pw(x, a - 2) * pw(y, b)
    hxy = a * b * pw(x, a - 1) * pw(y, b - 1)
    hyy = b * (b - 1) * pw(x, a) * pw(y, b - 2)
    grad = np.stack([gx, gy], axis=-1)
    hess = np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)
    return val, grad, hess


class DgSpace:
    """P_k(T): broken polynomials of total degree ``k`` on an affine mesh.

    On element K with affine map F_K(xi) = a_K + J_K xi the basis is
    ``phi_i(x) = phi_ref_i(F_K^{-1} x) / sqrt(|det J_K|)`` where ``phi_ref`` is
    orthonormal on the reference triangle, so every element mass matrix is the
    identity.  Degrees of freedom are numbered element by element.
    """

    def __init__(self, mesh: Mesh, k: int, quad_degree: int | None = None):
        if int(k) != k or k < 2:
            raise ValueError(f"polynomial degree must be an integer >= 2, got {k!r}")
        self.mesh = mesh
        self.degree = int(k)
        self.exponents = _monomial_exponents(self.degree)
        self.dofs_per_element = (self.degree + 1) * (self.degree + 2) // 2
        self.total_dofs = mesh.num_elements * self.dofs_per_element
        self.quad_degree = 2 * self.degree + 2 if quad_degree is None else int(quad_degree)

        rule = triangle_rule(2 * self.degree)
        V, _, _ = _monomial_tables(rule.points, self.exponents)
        _, R = np.linalg.qr(np.sqrt(rule.weights)[:, None] * V)
        R *= np.sign(np.diag(R))[:, None]
        self._coeffs = np.linalg.inv(R)

        verts = mesh.vertices[mesh.elements]
        self.origin = verts[:, 0, :]
        self.jac = np.stack([verts[:, 1] - verts[:, 0], verts[:, 2] - verts[:, 0]], axis=2)
        self.detj = np.abs(np.linalg.det(self.jac))
        self.jinv = np.linalg.inv(self.jac)

    def __repr__(self):
        return f"DgSpace(k={self.degree}, elements={self.mesh.num_elements}, dofs={self.total_dofs})"

    def element_dofs(self, K) -> np.ndarray:
        K = np.asarray(K)
        return K[..., None] * self.dofs_per_element + np.arange(self.dofs_per_element)

    # -- reference / physical tabulation ---------------------------------
    def reference_tables(self, ref_points):
        """Orthonormal reference basis: values (..., nloc), gradients
        (..., nloc, 2), Hessians (..., nloc, 2, 2)."""
        ref_points = np.asarray(ref_points, dtype=float)
        v, g, h = _monomial_tables(ref_points, self.exponents)
        C = self._coeffs
        return (v @ C,
                np.einsum("...mi,mb->...bi", g, C),
                np.einsum("...mij,mb->...bij", h, C))

    def to_reference(self, K, x) -> np.ndarray:
        """Inverse affine map of physical points ``x`` (..., 2) on elements K."""
        K = np.asarray(K)
        return np.einsum("...ij,...j->...i", self.jinv[K], x - self.origin[K])

    def to_physical(self, K, xi) -> np.ndarray:
        K = np.asarray(K)
        return self.origin[K] + np.einsum("...ij,...j->...i", self.jac[K], xi)

    def tabulate(self, K, ref_points, derivatives: int = 2):
        """Physical basis values/gradients/Hessians on elements ``K`` (m,) at
        per-element reference points (m, nq, 2)."""
        K = np.asarray(K)
        v, g, h = self.reference_tables(ref_points)
        scale = 1.0 / np.sqrt(self.detj[K])[:, None, None]
        Jinv = self.jinv[K]
        val = v * scale
        grad = np.einsum("mqbj,mji->mqbi", g, Jinv) * scale[..., None]
        if derivatives < 2:
            return val, grad, None
        hess = np.einsum("mqbkl,mki,mlj->mqbij", h, Jinv, Jinv) * scale[..., None, None]
        return val, grad, hess

    # -- quadrature ------------------------------------------------------
    def volume_quadrature(self, degree: int | None = None):
        """Physical points (nel, nq, 2) and weights (nel, nq)."""
        rule = triangle_rule(self.quad_degree if degree is None else degree)
        pts = self.origin[:, None, :] + np.einsum("eij,qj->eqi", self.jac, rule.points)
        w = self.detj[:, None] * rule.weights[None, :]
        return pts, w, rule

    def volume_tables(self, degree: int | None = None):
        """Basis values, gradients and Hessians at volume quadrature points,
        shaped (nel, nq, nloc[, 2[, 2]])."""
        pts, w, rule = self.volume_quadrature(degree)
        # affine elements share one reference tabulation
        v, g, h = self.reference_tables(rule.points)
        scale = 1.0 / np.sqrt(self.detj)
        Jinv = self.jinv
        val = v[None] * scale[:, None, None]
        grad = np.einsum("qbj,eji,e->eqbi", g, Jinv, scale, optimize=True)
        hess = np.einsum("qbkl,eki,elj,e->eqbij", h, Jinv, Jinv, scale, optimize=True)
        return pts, w, val, grad, hess

    def facet_quadrature(self, degree: int | None = None):
        """Physical facet points (nf, nq, 2) and weights (nf, nq).

        Points run from the first to the second facet vertex; each side's
        traces are obtained by inverse-mapping these same physical points.
        """
        rule = segment_rule(self.quad_degree if degree is None else degree)
        mesh = self.mesh
        p0 = mesh.vertices[mesh.facet_vertices[:, 0]]
        p1 = mesh.vertices[mesh.facet_vertices[:, 1]]
        pts = p0[:, None, :] + rule.points[None, :, None] * (p1 - p0)[:, None, :]
        w = mesh.facet_lengths[:, None] * rule.weights[None, :]
        return pts, w

    def facet_tables(self, degree: int | None = None, side: int = 0):
        """Basis traces from side ``side`` (0 = owner K1, 1 = neighbour K2).

        Boundary facets have no neighbour; their side-1 tables are zero.
        """
        pts, _ = self.facet_quadrature(degree)
        K = self.mesh.facet_elements[:, side]
        Ks = np.where(K < 0, self.mesh.facet_elements[:, 0], K)
        val, grad, _ = self.tabulate(Ks, self.to_reference(Ks[:, None], pts), derivatives=1)
        if side == 1:
            missing = K < 0
            val[missing] = 0.0
            grad[missing] = 0.0
        return val, grad

    # -- integration -----------------------------------------------------
    def integrate_volume(self, integrand, degree: int | None = None) -> float:
        """Integral over the domain of a callable ``integrand(x, y)`` or of an
        array of values at the volume quadrature points."""
        pts, w, _ = self.volume_quadrature(degree)
        vals = integrand(pts[..., 0], pts[..., 1]) if callable(integrand) else integrand
        return float(np.sum((np.broadcast_to(vals, w.shape) * w).ravel()))

    def integrate_facets(self, integrand, degree: int | None = None, facets=None) -> float:
        """Integral over the facets selected by ``facets`` (index array or
        boolean mask; default all)."""
        pts, w = self.facet_quadrature(degree)
        vals = integrand(pts[..., 0], pts[..., 1]) if callable(integrand) else integrand
        vals = np.broadcast_to(vals, w.shape) * w
        if facets is not None:
            vals = vals[facets]
        return float(np.sum(vals.ravel()))

    @cached_property
    def zero(self) -> "DgFunction":
        return DgFunction(self, np.zeros(self.total_dofs))


def build_space(mesh: Mesh, k: int, quad_degree: int | None = None) -> DgSpace:
    return DgSpace(mesh, k, quad_degree)


@dataclass(eq=False)
class DgFunction:
    space: DgSpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space.total_dofs,):
            raise ValueError(
                f"expected {self.space.total_dofs} coefficients, got {self.coeffs.shape}")

    @property
    def element_coeffs(self) -> np.ndarray:
        return self.coeffs.reshape(-1, self.space.dofs_per_element)

    def evaluate(self, element: int, ref_point):
        """Value, gradient and Hessian at a reference point of ``element``."""
        nel = self.space.mesh.num_elements
        if not 0 <= element < nel:
            raise IndexError(f"element {element} out of range [0, {nel})")
        xi = np.asarray(ref_point, dtype=float).reshape(1, 1, 2)
        val, grad, hess = self.space.tabulate(np.array([element]), xi)
        c = self.element_coeffs[element]
        return (float(val[0, 0] @ c),
                np.einsum("bi,b->i", grad[0, 0], c),
                np.einsum("bij,b->ij", hess[0, 0], c))

    def at_volume_points(self, degree: int | None = None, derivatives: int = 0):
        """Values (and optionally gradients, Hessians) at volume quadrature points."""
        _, _, val, grad, hess = self.space.volume_tables(degree)
        c = self.element_coeffs
        out = [np.einsum("eqb,eb->eq", val, c)]
        if derivatives >= 1:
            out.append(np.einsum("eqbi,eb->eqi", grad, c))
        if derivatives >= 2:
            out.append(np.einsum("eqbij,eb->eqij", hess, c))
        return out[0] if derivatives == 0 else tuple(out)

    def laplacian_at_volume_points(self, degree: int | None = None) -> np.ndarray:
        _, _, hess = self.at_volume_points(degree, derivatives=2)
        return hess[..., 0, 0] + hess[..., 1, 1]

    def __add__(self, other):
        return DgFunction(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return DgFunction(self.space, self.coeffs - other.coeffs)

    def __mul__(self, alpha):
        return DgFunction(self.space, alpha * self.coeffs)

    __rmul__ = __mul__


def l2_project(g, space: DgSpace, degree: int | None = None) -> DgFunction:
    """Elementwise L2 projection of a vectorised callable ``g(x, y)``."""
    pts, w, val, _, _ = space.volume_tables(degree)
    gv = np.broadcast_to(g(pts[..., 0], pts[..., 1]), w.shape)
    coeffs = np.einsum("eq,eqb->eb", gv * w, val)
    return DgFunction(space, coeffs.ravel())


def laplacian_moments(G, grad_G, space: DgSpace, degree: int | None = None) -> np.ndarray:
    """Moments int (Lap G) Phi_i for a C^1 field G, without evaluating Lap G.

    Each element integral is integrated by parts twice,

        int_K Lap(G) Phi = int_K G Lap(Phi)
                           + int_dK (grad G . n_K) Phi - G (grad Phi . n_K),

    so only G and grad G are sampled.  This is exact for any G in W^{2,1}
    and keeps quadrature accurate when Lap G has jumps inside elements.
    ``G(x, y)`` and ``grad_G(x, y) -> (..., 2)`` are vectorised callables.
    """
    pts, w, _, _, hess = space.volume_tables(degree)
    lap = hess[..., 0, 0] + hess[..., 1, 1]
    gv = np.broadcast_to(G(pts[..., 0], pts[..., 1]), w.shape)
    out = np.einsum("eq,eqb->eb", gv * w, lap).ravel()

    mesh = space.mesh
    fpts, fw = space.facet_quadrature(degree)
    gf = np.broadcast_to(G(fpts[..., 0], fpts[..., 1]), fw.shape)
    dg = np.asarray(grad_G(fpts[..., 0], fpts[..., 1]))
    for side, sign in ((0, 1.0), (1, -1.0)):
        K = mesh.facet_elements[:, side]
        has = K >= 0
        n = sign * mesh.normals[has][:, None, :]
        val, grad = space.facet_tables(degree, side)
        dgn = np.einsum("fqi,fqi->fq", dg[has], n)
        gradn = np.einsum("fqbi,fqi->fqb", grad[has], n)
        loc = (np.einsum("fq,fqb->fb", fw[has] * dgn, val[has])
               - np.einsum("fq,fqb->fb", fw[has] * gf[has], gradn))
        np.add.at(out, space.element_dofs(K[has]), loc)
    return out
