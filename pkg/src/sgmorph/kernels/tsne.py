"""Exact t-SNE gradient of KL(P || Q) with a Student-t kernel in 2-D."""
import numpy as np

from .._jit import USE_NUMBA, njit


def kl_gradient_py(P, Y):
    """Return ``(grad, kl)`` for joint probabilities ``P`` and embedding ``Y``."""
    n, d = Y.shape
    num = np.zeros((n, n))
    z = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.0
            for k in range(d):
                diff = Y[i, k] - Y[j, k]
                s += diff * diff
            v = 1.0 / (1.0 + s)
            num[i, j] = v
            num[j, i] = v
            z += 2.0 * v
    grad = np.zeros((n, d))
    kl = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            q = max(num[i, j] / z, 1e-12)
            p = P[i, j]
            if p > 0.0:
                kl += p * np.log(max(p, 1e-12) / q)
            c = 4.0 * (p - q) * num[i, j]
            for k in range(d):
                grad[i, k] += c * (Y[i, k] - Y[j, k])
    return grad, kl


def kl_gradient_np(P, Y):
    diff = Y[:, None, :] - Y[None, :, :]
    num = 1.0 / (1.0 + np.sum(diff * diff, axis=2))
    np.fill_diagonal(num, 0.0)
    Q = np.maximum(num / num.sum(), 1e-12)
    mask = P > 0
    kl = float(np.sum(P[mask] * np.log(np.maximum(P[mask], 1e-12) / Q[mask])))
    W = (P - Q) * num
    np.fill_diagonal(W, 0.0)
    grad = 4.0 * np.einsum("ij,ijk->ik", W, diff)
    return grad, kl


if USE_NUMBA:
    kl_gradient_nb = njit(kl_gradient_py)
    kl_gradient = kl_gradient_nb
else:
    kl_gradient = kl_gradient_np
