"""Discrete energy, Euler-Lagrange residual and Jacobian, and a damped Newton
solver with continuation in p.

The discrete energy is

    J_h[v] = 1/p int |D[v]|^p - int f v
             + sigma/p sum_e ( h_e^{1-p} int_e |jump grad v|^p
                               + h_e^{1-2p} int_e |jump v|^p )

over all facets (interior and boundary).  Each of the three terms is a sum of
``F(t)`` over quadrature points, where ``t`` is a linear function of the
coefficients.  Jump arguments are rescaled to ``jump grad v / h_e`` and
``jump v / h_e^2`` so that

    h_e^{1-p} |jump grad v|^p = h_e |jump grad v / h_e|^p,
    h_e^{1-2p} |jump v|^p     = h_e |jump v / h_e^2|^p,

which makes every term p-independent apart from the scalar nonlinearity and
puts the regularisation on a common scale.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .assembly import FacetBasis
from .hessian import HessianOperator, assemble_D
from .space import DgFunction, DgSpace, l2_project

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Raised when the linear solve breaks down."""


@dataclass
class SolveConfig:
    p: float = 2.0
    sigma: float = 10.0
    epsilon: float | None = None
    newton_tol: float = 1e-8
    max_iters: int = 50
    continuation_steps: list[float] | None = None
    linear_solver_tol: float = 1e-12
    stage_tol: float = 1e-6
    quad_degree: int | None = None
    boundary_flux: str = "clamped"
    min_stage_step: float = 0.0625

    def __post_init__(self):
        if not self.p >= 2:
            raise ValueError(f"p must be >= 2, got {self.p}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.continuation_steps is not None:
            steps = list(self.continuation_steps)
            if (not steps or steps[0] != 2 or steps[-1] != self.p
                    or any(b <= a for a, b in zip(steps, steps[1:]))):
                raise ValueError("continuation steps must increase from 2 to p")

    def stages(self) -> list[float]:
        if self.continuation_steps is not None:
            return list(self.continuation_steps)
        if self.p == 2:
            return [2.0]
        steps = list(np.arange(2.0, self.p, 0.5))
        return [float(s) for s in steps] + [float(self.p)]


@dataclass
class SolveReport:
    stages: list[float] = field(default_factory=list)
    iterations: list[int] = field(default_factory=list)
    residual_history: list[list[float]] = field(default_factory=list)
    energy_history: list[list[float]] = field(default_factory=list)
    final_residual: float = math.inf
    converged: bool = False
    energy: float = math.nan
    epsilon: float = 0.0
    message: str = ""

    @property
    def total_iterations(self) -> int:
        return sum(self.iterations)


@dataclass
class _Term:
    M: np.ndarray        # (nb, nq, m) values of the term's argument per local dof
    dofs: np.ndarray     # (nb, m)
    weights: np.ndarray  # (nb, nq)


class PBiharmonicProblem:
    """Assembled operators for the discrete p-biharmonic problem on a space.

    ``forcing`` is a vectorised callable ``f(x, y)``, a precomputed vector of
    moments ``int f Phi_i`` or None for f = 0.
    """

    def __init__(self, space: DgSpace, forcing, cfg: SolveConfig,
                 hessian: HessianOperator | None = None):
        self.space = space
        self.cfg = cfg
        self.n = space.total_dofs
        qd = cfg.quad_degree if cfg.quad_degree is not None else space.quad_degree
        self.quad_degree = qd
        self.hessian = hessian or assemble_D(space, cfg.boundary_flux)

        blocks, pdofs = self.hessian.patches()
        _, w, val, _, _ = space.volume_tables(qd)
        vol = _Term(np.ascontiguousarray(np.einsum("eqb,ebm->eqm", val, blocks)),
                    np.ascontiguousarray(pdofs), w)

        fb = FacetBasis.build(space, qd)
        h = space.mesh.facet_lengths[:, None, None]
        fw = cfg.sigma * fb.weights * h[:, :, 0]
        grad_jump = _Term(np.ascontiguousarray(fb.normal_jump / h), fb.dofs, fw)
        value_jump = _Term(np.ascontiguousarray(fb.jump / h**2), fb.dofs, fw)
        self.terms = (vol, grad_jump, value_jump)

        if forcing is None:
            self.load = np.zeros(self.n)
        elif not callable(forcing):
            self.load = np.array(forcing, dtype=float)
            if self.load.shape != (self.n,):
                raise ValueError(f"load vector must have shape ({self.n},)")
        else:
            self.load = l2_project(forcing, space, qd).coeffs
        self._pattern = None

    # -- regularisation scale ------------------------------------------------
    def default_epsilon(self, p: float) -> float:
        """1e-7 times the natural size of D[u], ||P f||_{L2}^{1/(p-1)}."""
        if p == 2:
            return 0.0
        # orthonormal basis: the coefficient norm is the L2 norm of P f
        fnorm = float(np.linalg.norm(self.load))
        return 1e-7 * fnorm ** (1.0 / (p - 1.0))

    # -- evaluation ----------------------------------------------------------
    def _args(self, x):
        return [kernels.gather(t.M, t.dofs, x) for t in self.terms]

    def energy(self, x, p: float, eps: float = 0.0) -> float:
        total = 0.0
        for t, a in zip(self.terms, self._args(x)):
            F, _, _ = kernels.nonlinearity(a, p, eps)
            total += float(np.sum((t.weights * F).ravel()))
        return total - float(self.load @ x)

    def energy_parts(self, x, p: float, eps: float = 0.0):
        """(D term, gradient-jump penalty, value-jump penalty, -int f v)."""
        out = []
        for t, a in zip(self.terms, self._args(x)):
            F, _, _ = kernels.nonlinearity(a, p, eps)
            out.append(float(np.sum((t.weights * F).ravel())))
        return tuple(out) + (-float(self.load @ x),)

    def form(self, x, p: float, eps: float = 0.0) -> np.ndarray:
        """Vector of B_h(u, Phi_i; p) (without the load)."""
        r = np.zeros(self.n)
        for t, a in zip(self.terms, self._args(x)):
            _, f, _ = kernels.nonlinearity(a, p, eps)
            r += kernels.scatter(t.M, t.dofs, np.ascontiguousarray(t.weights * f), self.n)
        return r

    def residual(self, x, p: float, eps: float = 0.0) -> np.ndarray:
        return self.form(x, p, eps) - self.load

    def jacobian(self, x, p: float, eps: float = 0.0) -> sp.csr_matrix:
        if self._pattern is None:
            rows, cols = [], []
            for t in self.terms:
                nb, _, m = t.M.shape
                rows.append(np.broadcast_to(t.dofs[:, :, None], (nb, m, m)).ravel())
                cols.append(np.broadcast_to(t.dofs[:, None, :], (nb, m, m)).ravel())
            self._pattern = (np.concatenate(rows), np.concatenate(cols))
        data = []
        for t, a in zip(self.terms, self._args(x)):
            _, _, df = kernels.nonlinearity(a, p, eps)
            data.append(kernels.gram(t.M, np.ascontiguousarray(t.weights * df)).ravel())
        J = sp.csr_matrix((np.concatenate(data), self._pattern), shape=(self.n, self.n))
        J.sum_duplicates()
        return J

    def bilinear(self, u, v, p: float) -> float:
        """B_h(u, v; p) for coefficient vectors."""
        return float(self.form(u, p) @ v)

    # -- solve ---------------------------------------------------------------
    def _linear_solve(self, J, rhs):
        """Sparse direct solve.  J is symmetric positive (semi)definite, so a
        symmetric minimum-degree ordering without pivoting is tried first."""
        A = J.tocsc()
        tol = self.cfg.linear_solver_tol
        attempts = (dict(permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                         options=dict(SymmetricMode=True)),
                    dict(permc_spec="COLAMD"))
        norm_rhs = max(float(np.linalg.norm(rhs)), 1e-300)
        rel = math.inf
        for opts in attempts:
            try:
                lu = spla.splu(A, **opts)
            except RuntimeError as exc:
                log.debug("splu %s failed: %s", opts["permc_spec"], exc)
                continue
            dx = lu.solve(rhs)
            if not np.all(np.isfinite(dx)):
                continue
            rel = float(np.linalg.norm(A @ dx - rhs)) / norm_rhs
            if rel > tol:
                dx += lu.solve(rhs - A @ dx)
                rel = float(np.linalg.norm(A @ dx - rhs)) / norm_rhs
            if rel <= max(tol, 1e-8):
                return dx
        raise SolverError(f"linear solve failed (relative residual {rel:.2e})")

    def _newton(self, x, p, eps, tol, report):
        cfg = self.cfg
        res_hist, en_hist = [], []
        R = self.residual(x, p, eps)
        E = self.energy(x, p, eps)
        rnorm = float(np.linalg.norm(R))
        res_hist.append(rnorm)
        en_hist.append(E)
        ok = rnorm <= tol
        it = 1
        while not ok and it <= cfg.max_iters:
            J = self.jacobian(x, p, eps)
            dx = self._linear_solve(J, -R)
            slope = float(R @ dx)
            alpha = 1.0
            for _ in range(31):
                xn = x + alpha * dx
                Rn = self.residual(xn, p, eps)
                En = self.energy(xn, p, eps)
                rn = float(np.linalg.norm(Rn))
                decrease = En <= E + 1e-4 * alpha * min(slope, 0.0) + 1e-13 * max(1.0, abs(E))
                if rn < rnorm and decrease:
                    break
                alpha *= 0.5
            else:
                report.message = f"line search failed at p={p} after {it} iterations"
                break
            x, R, E, rnorm = xn, Rn, En, rn
            res_hist.append(rnorm)
            en_hist.append(E)
            it += 1
            ok = rnorm <= tol
            log.debug("p=%g it=%d |R|=%.3e alpha=%g", p, it, rnorm, alpha)
        report.stages.append(p)
        report.iterations.append(it)
        report.residual_history.append(res_hist)
        report.energy_history.append(en_hist)
        return x, ok, rnorm

    def solve(self, x0=None) -> tuple[DgFunction, DgFunction, SolveReport]:
        """Minimise J_h.  Returns (u_h, D[u_h], report).

        ``report.iterations`` counts residual evaluations of the Newton loop
        per continuation stage, so an exact initial guess costs one.
        """
        cfg = self.cfg
        report = SolveReport()
        eps = cfg.epsilon if cfg.epsilon is not None else self.default_epsilon(cfg.p)
        report.epsilon = eps
        x = np.zeros(self.n) if x0 is None else np.array(x0, dtype=float)
        scale = max(1.0, float(np.linalg.norm(self.load)))
        tol = cfg.newton_tol * scale

        stages = cfg.stages()
        if not np.any(self.load) and not np.any(x):
            stages = [cfg.p]
        ok, rnorm = False, math.inf
        pending = list(stages)
        x_prev, p_prev = x, None
        while pending:
            p = pending.pop(0)
            last = not pending
            if p == cfg.p:
                stage_eps = eps
            elif p == 2:
                stage_eps = 0.0
            else:
                stage_eps = cfg.epsilon if cfg.epsilon is not None else self.default_epsilon(p)
            stol = tol if last else max(tol, cfg.stage_tol * scale)
            x_new, ok, rnorm = self._newton(x_prev, p, stage_eps, stol, report)
            if not ok and p_prev is not None and p - p_prev > cfg.min_stage_step:
                # refine the continuation: retry p after a half step from p_prev
                mid = 0.5 * (p_prev + p)
                log.info("stage p=%g failed; inserting p=%g", p, mid)
                pending[:0] = [mid, p]
                continue
            if not ok and not last:
                log.warning("continuation stage p=%g did not converge; continuing", p)
            x_prev, p_prev = x_new, p
        x = x_prev
        report.converged = bool(ok)
        report.final_residual = rnorm
        report.energy = self.energy(x, cfg.p, eps)
        if not ok and not report.message:
            report.message = f"Newton did not reach tolerance {tol:.3e} (|R|={rnorm:.3e})"
        u = DgFunction(self.space, x)
        return u, self.hessian.apply(u), report


def energy(v: DgFunction, f, cfg: SolveConfig) -> float:
    prob = PBiharmonicProblem(v.space, f, cfg)
    return prob.energy(v.coeffs, cfg.p, cfg.epsilon or 0.0)


def residual(u: DgFunction, f, cfg: SolveConfig) -> np.ndarray:
    prob = PBiharmonicProblem(u.space, f, cfg)
    return prob.residual(u.coeffs, cfg.p, cfg.epsilon or 0.0)


def jacobian(u: DgFunction, cfg: SolveConfig) -> sp.csr_matrix:
    prob = PBiharmonicProblem(u.space, None, cfg)
    return prob.jacobian(u.coeffs, cfg.p, cfg.epsilon or 0.0)


def solve(f, space: DgSpace, cfg: SolveConfig, x0=None):
    return PBiharmonicProblem(space, f, cfg).solve(x0)


def apriori_check(u_h: DgFunction, f, cfg: SolveConfig) -> tuple[float, float]:
    """(|||u_h|||_p, ||f||_{L^q}^{q/p}) with q the conjugate exponent of p."""
    from .analysis import dg_norm, lp_norm

    p = cfg.p
    q = p / (p - 1.0)
    lhs = dg_norm(u_h, p)
    if f is None:
        return lhs, 0.0
    return lhs, lp_norm(f, q, u_h.space) ** (q / p)
