"""Central finite differences with one Richardson step, used as independent oracles."""

from __future__ import annotations

import numpy as np


def _richardson(d_h, d_h2):
    # central differences have an even error expansion: D(h) = D + c h^2 + O(h^4)
    return (4.0 * d_h2 - d_h) / 3.0


def fd_derivative(f, x: float, h: float = 1e-4) -> float:
    def central(s):
        return (f(x + s) - f(x - s)) / (2.0 * s)

    return _richardson(central(h), central(h / 2))


def fd_gradient(f, x, h: float = 1e-4) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    g = np.zeros(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        g[i] = fd_derivative(lambda t: f(x + t * e), 0.0, h)
    return g


def fd_hessian(f, x, h: float = 1e-4) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    eye = np.eye(n)

    def second(i, j, s):
        ei, ej = s * eye[i], s * eye[j]
        if i == j:
            return (f(x + ei) - 2.0 * f(x) + f(x - ei)) / (s * s)
        return (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4.0 * s * s)

    H = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            H[i, j] = H[j, i] = _richardson(second(i, j, h), second(i, j, h / 2))
    return H


def rel_err(a, b) -> float:
    """max |a - b| / max(1, max |b|)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))
