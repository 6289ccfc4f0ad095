"""Benchmark solution u = sin(2 pi x)^2 sin(2 pi y)^2 and its forcing."""
from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


def _s(t):
    """s(t) = sin^2(2 pi t) and its first four derivatives."""
    a = 2.0 * TWO_PI * t
    sin4, cos4 = np.sin(a), np.cos(a)
    return (np.sin(TWO_PI * t) ** 2,
            TWO_PI * sin4,
            2.0 * TWO_PI**2 * cos4,
            -4.0 * TWO_PI**3 * sin4,
            -8.0 * TWO_PI**4 * cos4)


class ExactSolution:
    """Closed-form u and derivatives; all evaluators take arrays x, y."""

    def u(self, x, y):
        return _s(x)[0] * _s(y)[0]

    def grad(self, x, y):
        sx, sy = _s(x), _s(y)
        return np.stack([sx[1] * sy[0], sx[0] * sy[1]], axis=-1)

    def hessian(self, x, y):
        sx, sy = _s(x), _s(y)
        hxx = sx[2] * sy[0]
        hxy = sx[1] * sy[1]
        hyy = sx[0] * sy[2]
        return np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)

    def laplacian(self, x, y):
        sx, sy = _s(x), _s(y)
        return sx[2] * sy[0] + sx[0] * sy[2]

    def grad_laplacian(self, x, y):
        sx, sy = _s(x), _s(y)
        return np.stack([sx[3] * sy[0] + sx[1] * sy[2],
                         sx[2] * sy[1] + sx[0] * sy[3]], axis=-1)

    def bilaplacian(self, x, y):
        sx, sy = _s(x), _s(y)
        return sx[4] * sy[0] + 2.0 * sx[2] * sy[2] + sx[0] * sy[4]

    def forcing(self, x, y, p: float):
        """f = Laplacian(|w|^{p-2} w) with w = Laplacian(u).

        Chain rule: f = (p-1)|w|^{p-2} Lap w + (p-1)(p-2)|w|^{p-3} sign(w) |grad w|^2.
        """
        if p < 2:
            raise ValueError("p must be >= 2")
        w = self.laplacian(x, y)
        lap_w = self.bilaplacian(x, y)
        f = (p - 1.0) * np.abs(w) ** (p - 2.0) * lap_w
        if p != 2:
            gw = self.grad_laplacian(x, y)
            # w == 0 exactly only on a null set; nudge so sign() is defined
            w = np.where(w == 0.0, 1e-12, w)
            f = f + (p - 1.0) * (p - 2.0) * np.abs(w) ** (p - 3.0) * np.sign(w) * np.sum(gw**2, axis=-1)
        return f

    def flux(self, x, y, p: float):
        """g = |w|^{p-2} w with w = Laplacian(u), so that f = Laplacian(g)."""
        w = self.laplacian(x, y)
        return np.abs(w) ** (p - 2.0) * w

    def flux_gradient(self, x, y, p: float):
        w = self.laplacian(x, y)
        return ((p - 1.0) * np.abs(w) ** (p - 2.0))[..., None] * self.grad_laplacian(x, y)

    def load(self, space, p: float, degree: int | None = None) -> np.ndarray:
        """Moments int f Phi_i, computed from the flux by parts.

        f jumps where Lap u changes sign (for 2 < p < 4), which element
        quadrature resolves only to O(h); the flux g is C^1 and integrates
        to the full order of the rule.
        """
        from .space import laplacian_moments

        if p < 2:
            raise ValueError("p must be >= 2")
        return laplacian_moments(lambda x, y: self.flux(x, y, p),
                                 lambda x, y: self.flux_gradient(x, y, p), space, degree)


def exact_u(x, y):
    return ExactSolution().u(x, y)


def forcing(x, y, p: float):
    return ExactSolution().forcing(x, y, p)
