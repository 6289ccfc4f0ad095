"""L^p and dG norms, error records and estimated orders of convergence."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .skeleton import jump_vector, traces
from .space import DgFunction, DgSpace

#: extra quadrature degree used when measuring errors against exact fields
ERROR_QUAD_BUMP = 4


def _values(g, space: DgSpace, degree: int):
    pts, w, _ = space.volume_quadrature(degree)
    if isinstance(g, DgFunction):
        return g.at_volume_points(degree), w
    if callable(g):
        return np.broadcast_to(g(pts[..., 0], pts[..., 1]), w.shape), w
    return np.asarray(g), w


def lp_norm(g, p: float, space: DgSpace | None = None, degree: int | None = None) -> float:
    """(int |g|^p)^{1/p} by quadrature.

    ``g`` is a DgFunction, a callable ``g(x, y)`` or an array of values at
    the volume quadrature points of ``degree``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if space is None:
        if not isinstance(g, DgFunction):
            raise ValueError("a space is needed to integrate a non-DgFunction field")
        space = g.space
    degree = space.quad_degree + ERROR_QUAD_BUMP if degree is None else degree
    vals, w = _values(g, space, degree)
    return float(np.sum((w * np.abs(vals) ** p).ravel())) ** (1.0 / p)


def dg_norm_parts(v: DgFunction, p: float, boundary: bool = False, degree: int | None = None):
    """p-th powers of the three dG norm contributions.

    Returns (||Lap_h v||^p, sum_e h_e^{1-p} ||jump grad v||^p,
    sum_e h_e^{1-2p} ||jump v||^p).  Jumps are taken over interior facets,
    plus boundary facets when ``boundary`` is True.
    """
    space = v.space
    degree = space.quad_degree if degree is None else degree
    _, w, _ = space.volume_quadrature(degree)
    _, _, hess = v.at_volume_points(degree, derivatives=2)
    lap = hess[..., 0, 0] + hess[..., 1, 1]
    vol = float(np.sum((w * np.abs(lap) ** p).ravel()))

    tv = traces(v, "value", degree)
    tg = traces(v, "gradient", degree)
    fw = tv.weights if boundary else tv.weights * tv.interior[:, None]
    h = space.mesh.facet_lengths[:, None]
    # |jump v| = |v1 - v2| since the jump is that difference times a unit normal
    jv = np.where(tv.interior[:, None], tv.side1 - tv.side2, tv.side1)
    jg = jump_vector(tg)
    grad_part = float(np.sum((fw * h ** (1 - p) * np.abs(jg) ** p).ravel()))
    val_part = float(np.sum((fw * h ** (1 - 2 * p) * np.abs(jv) ** p).ravel()))
    return vol, grad_part, val_part


def dg_norm(v: DgFunction, p: float, boundary: bool = False, degree: int | None = None) -> float:
    if p < 1:
        raise ValueError("p must be >= 1")
    return sum(dg_norm_parts(v, p, boundary, degree)) ** (1.0 / p)


def eoc(e1: float, e2: float, h1: float, h2: float) -> float:
    """Estimated order of convergence log(e1/e2) / log(h1/h2)."""
    if e1 <= 0 or e2 <= 0:
        raise ValueError("errors must be positive")
    if h1 == h2:
        raise ValueError("meshsizes must differ")
    return math.log(e1 / e2) / math.log(h1 / h2)


@dataclass
class ErrorRecord:
    n: int
    h: float
    err_u: float
    err_D: float
    dg_parts: tuple[float, float, float]
    p: float
    iterations: int = 0
    eoc_u: float | None = None
    eoc_D: float | None = None
    eoc_dg: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def err_dg(self) -> float:
        return sum(self.dg_parts) ** (1.0 / self.p)


def error_record(n: int, u_h: DgFunction, d_h: DgFunction, exact, p: float,
                 iterations: int = 0, previous: ErrorRecord | None = None) -> ErrorRecord:
    """Errors of (u_h, d_h) against an :class:`ExactSolution`-like object.

    The dG-norm error uses the broken Laplacian of u - u_h and the jumps of
    u_h (the exact solution has none).
    """
    space = u_h.space
    degree = space.quad_degree + ERROR_QUAD_BUMP
    pts, w, _ = space.volume_quadrature(degree)
    x, y = pts[..., 0], pts[..., 1]
    err_u = lp_norm(u_h.at_volume_points(degree) - exact.u(x, y), p, space, degree)
    err_D = lp_norm(d_h.at_volume_points(degree) - exact.laplacian(x, y), p, space, degree)
    lap_err = u_h.laplacian_at_volume_points(degree) - exact.laplacian(x, y)
    _, gpart, vpart = dg_norm_parts(u_h, p, degree=degree)
    parts = (float(np.sum((w * np.abs(lap_err) ** p).ravel())), gpart, vpart)
    rec = ErrorRecord(n=n, h=space.mesh.meshsize, err_u=err_u, err_D=err_D,
                      dg_parts=parts, p=p, iterations=iterations)
    if previous is not None:
        rec.eoc_u = eoc(previous.err_u, rec.err_u, previous.h, rec.h)
        rec.eoc_D = eoc(previous.err_D, rec.err_D, previous.h, rec.h)
        rec.eoc_dg = eoc(previous.err_dg, rec.err_dg, previous.h, rec.h)
    return rec
