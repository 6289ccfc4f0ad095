"""Interior-penalty finite element Hessian and its lifting operators.

With the interior-penalty fluxes (v_hat = avg v on interior facets and 0 on
the boundary, p_hat = avg grad v) the dG Hessian H[v] in P_k(T)^{2x2} solves

    int H[v] Phi = - int grad_h v (x) grad_h Phi
                   + int_{E u dOmega} jump(v) (x) avg(grad_h Phi)
                   + int_{E u dOmega} avg(grad_h v) (x) jump(Phi)

for all Phi in P_k(T).  The element mass matrices are the identity, so the
coefficients of each component are the right-hand side moments themselves.
D[v] = trace H[v] is the only part the energy needs.

The gradient flux on boundary facets is selectable:

* ``"clamped"`` (default): p_hat = 0 on the boundary, the clamped datum
  grad u = 0.  The last integral then runs over interior facets only, which
  keeps int D[u_h] D[Phi] consistent with the clamped problem.  The operator
  is no longer symmetric on boundary facets.
* ``"average"``: p_hat = avg grad v = grad v on the boundary as well, giving
  the symmetric operator written above.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .assembly import FacetBasis, blocks_to_csr, facet_form
from .space import DgFunction, DgSpace

BOUNDARY_FLUXES = ("clamped", "average")


def _check_flux(boundary_flux):
    if boundary_flux not in BOUNDARY_FLUXES:
        raise ValueError(f"boundary_flux must be one of {BOUNDARY_FLUXES}, got {boundary_flux!r}")


def _adjoint_mask(fb, boundary_flux):
    """Facet mask of the jump(Phi) avg(p_hat) term."""
    _check_flux(boundary_flux)
    return fb.interior.astype(float) if boundary_flux == "clamped" else None


@dataclass(eq=False)
class TensorDgFunction:
    """2x2 matrix field with each component in the same DgSpace."""

    space: DgSpace
    coeffs: np.ndarray  # (2, 2, total_dofs)

    def component(self, a: int, b: int) -> DgFunction:
        return DgFunction(self.space, self.coeffs[a, b])

    def trace(self) -> DgFunction:
        return DgFunction(self.space, self.coeffs[0, 0] + self.coeffs[1, 1])


class HessianOperator:
    """Sparse operator v -> D[v] (and optionally the full H[v]).

    Rows of ``matrix`` index test functions, columns trial dofs.
    ``element_blocks`` / ``facet_blocks`` keep the local contributions so the
    solver can build element patches without slicing the global matrix.
    """

    def __init__(self, space: DgSpace, element_blocks, facet_blocks, facet_dofs,
                 boundary_flux: str = "clamped", components=None):
        self.space = space
        self.boundary_flux = boundary_flux
        self.element_blocks = element_blocks
        self.facet_blocks = facet_blocks
        self.facet_dofs = facet_dofs
        n = space.total_dofs
        eb = space.element_dofs(np.arange(space.mesh.num_elements))
        self.matrix = (blocks_to_csr(element_blocks, eb, shape=(n, n))
                       + blocks_to_csr(facet_blocks, facet_dofs, shape=(n, n))).tocsr()
        self.components = components

    def apply(self, v: DgFunction) -> DgFunction:
        return DgFunction(self.space, self.matrix @ v.coeffs)

    __call__ = apply

    def hessian(self, v: DgFunction) -> TensorDgFunction:
        if self.components is None:
            self.components = assemble_hessian_components(self.space, self.boundary_flux)
        c = np.array([[self.components[a][b] @ v.coeffs for b in range(2)] for a in range(2)])
        return TensorDgFunction(self.space, c)

    def patches(self):
        """Element patch blocks of D.

        Returns ``blocks`` (nel, nloc, 4 nloc) and ``dofs`` (nel, 4 nloc) such
        that the coefficients of D[v] on element K are ``blocks[K] @
        v[dofs[K]]``; the patch is K followed by its three facet neighbours
        (K itself, with a zero block, across boundary facets).
        """
        space = self.space
        mesh = space.mesh
        nel, nloc = mesh.num_elements, space.dofs_per_element
        K = np.arange(nel)
        B = self.facet_blocks.reshape(-1, 2, nloc, 2, nloc)
        self_block = self.element_blocks.copy()
        nb_blocks = []
        nb_dofs = []
        for i in range(3):
            f = mesh.element_facets[:, i]
            side = (mesh.facet_elements[f, 0] != K).astype(int)
            self_block += B[f, side, :, side, :]
            nb_blocks.append(B[f, side, :, 1 - side, :])
            nb_dofs.append(self.facet_dofs[f].reshape(nel, 2, nloc)[K, 1 - side])
        blocks = np.concatenate([self_block] + nb_blocks, axis=2)
        dofs = np.concatenate([space.element_dofs(K)] + nb_dofs, axis=1)
        return blocks, dofs


def _volume_grad_blocks(space: DgSpace, a: int | None = None, b: int | None = None):
    _, w, _, grad, _ = space.volume_tables(2 * space.degree)
    if a is None:
        return -np.einsum("eqia,eq,eqja->eij", grad, w, grad)
    return -np.einsum("eqi,eq,eqj->eij", grad[..., b], w, grad[..., a])


def assemble_D(space: DgSpace, boundary_flux: str = "clamped") -> HessianOperator:
    """Assemble the trace D = tr H of the IP Hessian."""
    fb = FacetBasis.build(space, 2 * space.degree)
    adj = _adjoint_mask(fb, boundary_flux)
    vol = _volume_grad_blocks(space)
    jn = fb.jump
    an = fb.normal_avg
    # jump(v).avg(grad Phi) + jump(Phi).avg(grad v); rows = test
    fac = facet_form(fb, an, jn) + facet_form(fb, jn, an, adj)
    return HessianOperator(space, vol, fac, fb.dofs, boundary_flux)


def _facet_component_csr(space, fb, test, trial, mask=None):
    n = space.total_dofs
    return blocks_to_csr(facet_form(fb, test, trial, mask), fb.dofs, shape=(n, n))


def assemble_hessian_components(space: DgSpace, boundary_flux: str = "clamped"):
    """Component matrices ``H[a][b]`` of the full IP Hessian (first form)."""
    fb = FacetBasis.build(space, 2 * space.degree)
    adj = _adjoint_mask(fb, boundary_flux)
    n = space.total_dofs
    eb = space.element_dofs(np.arange(space.mesh.num_elements))
    out = [[None, None], [None, None]]
    for a in range(2):
        jn_a = fb.jump * fb.normals[:, None, None, a]
        for b in range(2):
            vol = blocks_to_csr(_volume_grad_blocks(space, a, b), eb, shape=(n, n))
            jn_b = fb.jump * fb.normals[:, None, None, b]
            # (jump v)_a avg(d_b Phi) + avg(d_a v) (jump Phi)_b
            fac = (_facet_component_csr(space, fb, fb.grad_avg[..., b], jn_a)
                   + _facet_component_csr(space, fb, jn_b, fb.grad_avg[..., a], adj))
            out[a][b] = (vol + fac).tocsr()
    return out


def _facet_mask(fb: FacetBasis, facets: str):
    if facets == "all":
        return None
    if facets == "interior":
        return fb.interior.astype(float)
    if facets == "boundary":
        return (~fb.interior).astype(float)
    raise ValueError(f"facets must be 'all', 'interior' or 'boundary', got {facets!r}")


def lifting_matrices(space: DgSpace, facets: str = "all", boundary_flux: str = "clamped"):
    """Component matrices of the liftings l1 and l2 and of a flux correction.

    * ``l1``: int l1[v] Phi = int jump(v) (x) avg(grad Phi)
    * ``l2``: int l2[v] Phi = - int tjump(grad v) avg(Phi)
    * ``adj``: int adj[v] Phi = int_F avg(grad v) (x) jump(Phi)
      - int avg(grad v) (x) jump(Phi) - int_dOmega l2-part, where F is the
      set of facets on which p_hat = avg grad v

    With ``facets='all'``, H = Hess_h + l1 + l2 + adj.  For the clamped flux
    ``adj`` vanishes, so H = Hess_h + l1 + l2 exactly; for the average flux
    it cancels the boundary part of l2.
    """
    fb = FacetBasis.build(space, 2 * space.degree)
    mask = _facet_mask(fb, facets)
    sel = np.ones(len(fb.interior)) if mask is None else mask
    flux = _adjoint_mask(fb, boundary_flux)
    flux = sel if flux is None else flux * sel
    bnd = sel * ~fb.interior
    l1 = [[None, None], [None, None]]
    l2 = [[None, None], [None, None]]
    adj = [[None, None], [None, None]]
    for a in range(2):
        jn_a = fb.jump * fb.normals[:, None, None, a]
        for b in range(2):
            jn_b = fb.jump * fb.normals[:, None, None, b]
            tj = fb.grad_jump[..., a] * fb.normals[:, None, None, b]
            l1[a][b] = _facet_component_csr(space, fb, fb.grad_avg[..., b], jn_a, sel)
            l2[a][b] = -_facet_component_csr(space, fb, fb.avg, tj, sel)
            adj[a][b] = (_facet_component_csr(space, fb, jn_b, fb.grad_avg[..., a], flux)
                         - _facet_component_csr(space, fb, jn_b, fb.grad_avg[..., a], sel)
                         + _facet_component_csr(space, fb, fb.avg, tj, bnd))
    return l1, l2, adj


def broken_hessian_matrices(space: DgSpace):
    """Component matrices of the elementwise Hessian projected onto P_k."""
    _, w, val, _, hess = space.volume_tables(2 * space.degree)
    n = space.total_dofs
    eb = space.element_dofs(np.arange(space.mesh.num_elements))
    return [[blocks_to_csr(np.einsum("eqi,eq,eqj->eij", val, w, hess[..., a, b]), eb,
                           shape=(n, n)) for b in range(2)] for a in range(2)]


def assemble_D_lifted(space: DgSpace, boundary_flux: str = "clamped") -> sp.csr_matrix:
    """D assembled from the second (lifting) representation, for cross-checks."""
    hh = broken_hessian_matrices(space)
    l1, l2, adj = lifting_matrices(space, boundary_flux=boundary_flux)
    return sum(hh[a][a] + l1[a][a] + l2[a][a] + adj[a][a] for a in range(2)).tocsr()


def _apply_tensor(mats, v: DgFunction) -> TensorDgFunction:
    c = np.array([[mats[a][b] @ v.coeffs for b in range(2)] for a in range(2)])
    return TensorDgFunction(v.space, c)


def lifting_l1(v: DgFunction, facets: str = "all") -> TensorDgFunction:
    return _apply_tensor(lifting_matrices(v.space, facets)[0], v)


def lifting_l2(v: DgFunction, facets: str = "all") -> TensorDgFunction:
    return _apply_tensor(lifting_matrices(v.space, facets)[1], v)


def stability_ratio(v: DgFunction, p: float, operator: HessianOperator | None = None) -> float:
    """||D[v]||_{L^p} / |||v|||_p, with boundary facets included in the dG norm."""
    from .analysis import dg_norm, lp_norm

    denom = dg_norm(v, p, boundary=True)
    if denom == 0.0:
        raise ValueError("stability ratio undefined for a field with zero dG norm")
    D = (operator or assemble_D(v.space)).apply(v)
    return lp_norm(D, p) / denom
