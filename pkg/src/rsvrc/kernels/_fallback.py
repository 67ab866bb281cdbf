"""Pure numpy implementations of the hot kernels.

Signatures mirror the compiled module exactly. ``idx`` selects rows of ``A``
(duplicates allowed, so minibatches drawn with replacement work unchanged).
"""

import numpy as np


def _rows(A, idx):
    return A if idx is None else A[idx]


def quad_forms(A, idx, M):
    R = _rows(A, idx)
    return np.einsum("ip,pq,iq->i", R, M, R, optimize=True)


def quad_forms_multi(A, idx, Ms):
    R = _rows(A, idx)
    # (k, b, p) * (b, p) summed over p -> (k, b)
    return np.sum((R @ Ms) * R, axis=2).T


def weighted_gram(A, idx, w):
    R = _rows(A, idx)
    return (R.T * w) @ R


def weighted_gram_multi(A, idx, W):
    R = _rows(A, idx)
    b, p = R.shape
    outer = (R[:, :, None] * R[:, None, :]).reshape(b, p * p)
    return (W.T @ outer).reshape(W.shape[1], p, p)


def margins(A, idx, x, labels):
    R = _rows(A, idx)
    lab = labels if idx is None else labels[idx]
    return (R @ x) * lab


def weighted_rowsum(A, idx, w):
    return w @ _rows(A, idx)


def logistic_terms(z):
    """Loss ``(1 - s(z))^2`` with ``s`` the logistic sigmoid, and its two derivatives."""
    e = np.exp(-np.abs(z))
    # evaluate in the branch that cannot overflow
    pos = z >= 0
    s = np.where(pos, 1.0 / (1.0 + e), e / (1.0 + e))
    q = np.where(pos, e / (1.0 + e), 1.0 / (1.0 + e))
    loss = q * q
    d1 = -2.0 * s * q * q
    d2 = 2.0 * s * q * q * (2.0 * s - q)
    return loss, d1, d2


def cubic_gd(g, H, sigma, step, tol_grad, delta, max_iter, h0):
    """Gradient descent on the coordinate cubic model.

    Stops at the first iterate with ``m(h) <= -sigma/12 |h|^3 + delta`` and
    ``|grad m(h)| <= tol_grad``. Returns ``(h, iterations, converged)``.
    """
    h = np.array(h0, dtype=float)
    for it in range(max_iter + 1):
        Hh = H @ h
        nh = float(np.sqrt(h @ h))
        grad = g + Hh + 0.5 * sigma * nh * h
        m = float(g @ h) + 0.5 * float(h @ Hh) + sigma / 6.0 * nh**3
        if m <= -sigma / 12.0 * nh**3 + delta and float(np.sqrt(grad @ grad)) <= tol_grad:
            return h, it, True
        if it == max_iter:
            break
        h = h - step * grad
    return h, max_iter, False
