"""Quadrature on the reference triangle (0,0),(1,0),(0,1) and on [0, 1]."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def segment_rule(degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0, 1] exact for polynomials of ``degree``."""
    npts = max(1, (degree + 2) // 2)
    x, w = np.polynomial.legendre.leggauss(npts)
    pts = 0.5 * (x + 1.0)
    pts.setflags(write=False)
    w = 0.5 * w
    w.setflags(write=False)
    return QuadratureRule(pts, w, degree)


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadratureRule:
    """Collapsed (Duffy) tensor Gauss rule on the reference triangle.

    The collapse x = s, y = t (1 - s) adds one to the polynomial degree in s.
    """
    a = segment_rule(degree + 1)
    b = segment_rule(degree)
    S, T = np.meshgrid(a.points, b.points, indexing="ij")
    WS, WT = np.meshgrid(a.weights, b.weights, indexing="ij")
    x = S.ravel()
    y = (T * (1.0 - S)).ravel()
    w = (WS * WT * (1.0 - S)).ravel()
    pts = np.stack([x, y], axis=1)
    pts.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(pts, w, degree)
