"""Pure numpy implementations of the block kernels.

Every residual/Jacobian evaluation goes through these four functions; the
compiled module ``_kernels`` provides the same signatures.
"""
import numpy as np

BACKEND = "python"


def gather(M, dofs, x):
    """vals[b, q] = sum_j M[b, q, j] x[dofs[b, j]]"""
    return np.einsum("bqj,bj->bq", M, x[dofs])


def scatter(M, dofs, y, n):
    """r[dofs[b, j]] += sum_q M[b, q, j] y[b, q]"""
    local = np.einsum("bqj,bq->bj", M, y)
    return np.bincount(dofs.ravel(), weights=local.ravel(), minlength=n)


def gram(M, c):
    """G[b] = M[b]^T diag(c[b]) M[b]"""
    return np.einsum("bqi,bq,bqj->bij", M, c, M, optimize=True)


def nonlinearity(t, p, eps):
    """Regularised |t|^p / p, its derivative and second derivative.

    With s = t^2 + eps^2: F = (s^{p/2} - eps^p) / p, f = s^{(p-2)/2} t,
    df = s^{(p-4)/2} ((p-1) t^2 + eps^2).  At s = 0 the limits are used.
    """
    t = np.asarray(t, dtype=float)
    s = t * t + eps * eps
    pos = s > 0
    ss = np.where(pos, s, 1.0)
    F = np.where(pos, (ss ** (0.5 * p) - eps**p) / p, 0.0)
    f = np.where(pos, ss ** (0.5 * (p - 2.0)) * t, 0.0)
    df = np.where(pos, ss ** (0.5 * (p - 4.0)) * ((p - 1.0) * t * t + eps * eps),
                  1.0 if p == 2 else 0.0)
    return F, f, df
