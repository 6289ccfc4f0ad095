"""Per-facet and per-element basis tables and block-to-sparse assembly."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .space import DgSpace


@dataclass
class FacetBasis:
    """Two-sided basis traces on every facet, laid out over the 2*nloc local
    dofs [K1 dofs, K2 dofs].  Boundary facets carry zeros in the K2 half and
    reuse K1's dof numbers there, so scatters add nothing.
    """

    weights: np.ndarray      # (nf, nq) quadrature weight times facet length
    normals: np.ndarray      # (nf, 2)
    interior: np.ndarray     # (nf,)
    dofs: np.ndarray         # (nf, 2 nloc)
    jump: np.ndarray         # (nf, nq, 2 nloc)    v1 - v2 (boundary: v1)
    avg: np.ndarray          # (nf, nq, 2 nloc)    avg v
    grad_jump: np.ndarray    # (nf, nq, 2 nloc, 2) grad v1 - grad v2
    grad_avg: np.ndarray     # (nf, nq, 2 nloc, 2) avg grad v

    @property
    def normal_jump(self) -> np.ndarray:
        """Scalar jump of the normal derivative, (nf, nq, 2 nloc)."""
        return np.einsum("fqbi,fi->fqb", self.grad_jump, self.normals)

    @property
    def normal_avg(self) -> np.ndarray:
        return np.einsum("fqbi,fi->fqb", self.grad_avg, self.normals)

    @classmethod
    def build(cls, space: DgSpace, degree: int | None = None) -> "FacetBasis":
        mesh = space.mesh
        _, w = space.facet_quadrature(degree)
        V1, G1 = space.facet_tables(degree, side=0)
        V2, G2 = space.facet_tables(degree, side=1)
        interior = mesh.facet_elements[:, 1] >= 0
        half = np.where(interior, 0.5, 1.0)[:, None, None]
        K1 = mesh.facet_elements[:, 0]
        K2 = np.where(interior, mesh.facet_elements[:, 1], K1)
        dofs = np.concatenate([space.element_dofs(K1), space.element_dofs(K2)], axis=1)
        return cls(
            weights=w,
            normals=mesh.normals,
            interior=interior,
            dofs=dofs,
            jump=np.concatenate([V1, -V2], axis=2),
            avg=np.concatenate([half * V1, half * V2], axis=2),
            grad_jump=np.concatenate([G1, -G2], axis=2),
            grad_avg=np.concatenate([half[..., None] * G1, half[..., None] * G2], axis=2),
        )


def blocks_to_csr(blocks: np.ndarray, rows: np.ndarray, cols: np.ndarray | None = None,
                  shape=None) -> sp.csr_matrix:
    """Sum local blocks (nb, m, m') into a global sparse matrix.

    COO duplicates are summed by scipy in a deterministic order.
    """
    cols = rows if cols is None else cols
    nb, m, mc = blocks.shape
    R = np.broadcast_to(rows[:, :, None], (nb, m, mc)).ravel()
    C = np.broadcast_to(cols[:, None, :], (nb, m, mc)).ravel()
    A = sp.coo_matrix((blocks.ravel(), (R, C)), shape=shape).tocsr()
    A.sum_duplicates()
    return A


def facet_form(fb: FacetBasis, test: np.ndarray, trial: np.ndarray, mask=None) -> np.ndarray:
    """Local blocks of int_e test_i trial_j over facets, (nf, 2 nloc, 2 nloc)."""
    w = fb.weights if mask is None else fb.weights * mask[:, None]
    return np.einsum("fqi,fq,fqj->fij", test, w, trial)
