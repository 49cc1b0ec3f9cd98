from __future__ import annotations

import math

import numpy as np


def sphere_product_grid(dim: int, per_axis: int) -> np.ndarray:
    """Points on the unit sphere S^(dim-1) in R^dim from a product of hyperspherical angles."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        phi = np.linspace(0.0, 2.0 * math.pi, 2 * per_axis, endpoint=False)
        return np.column_stack([np.cos(phi), np.sin(phi)])
    theta = np.linspace(0.0, math.pi, per_axis)
    rest = sphere_product_grid(dim - 1, per_axis)
    out = []
    for t in theta:
        if t in (0.0, math.pi):
            out.append(np.concatenate([[math.cos(t)], np.zeros(dim - 1)])[None, :])
        else:
            out.append(np.column_stack([np.full(len(rest), math.cos(t)), math.sin(t) * rest]))
    return np.vstack(out)


def hemisphere_directions(n: int, count: int, seed: int = 0) -> np.ndarray:
    """About ``count`` unit vectors with last coordinate >= 0.

    For n <= 4 a deterministic product grid in (polar angle from e_n) x
    S^(n-2) is used; it always contains the pole e_n and the equator
    (directions inside the boundary hyperplane).  Above n = 4 the directions
    are random (seeded), with a block of equator and pole directions added.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if n <= 4:
        per_axis = max(3, int(round(count ** (1.0 / (n - 1)))))
        polar = np.linspace(0.0, math.pi / 2, per_axis)
        ring = sphere_product_grid(n - 1, per_axis)
        blocks = [np.concatenate([np.zeros(n - 1), [1.0]])[None, :]]
        for t in polar[1:]:
            blocks.append(np.column_stack([math.sin(t) * ring, np.full(len(ring), math.cos(t))]))
        dirs = np.vstack(blocks)
    else:
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((count, n))
        g[:, -1] = np.abs(g[:, -1])
        eq = rng.standard_normal((max(1, count // 8), n))
        eq[:, -1] = 0.0
        pole = np.zeros((1, n))
        pole[0, -1] = 1.0
        dirs = np.vstack([pole, g, eq])
    dirs = dirs / np.linalg.norm(dirs, axis=1)[:, None]
    return _unique_rows(dirs)


def _unique_rows(a: np.ndarray) -> np.ndarray:
    keys = np.round(a, 12)
    _, idx = np.unique(keys, axis=0, return_index=True)
    return a[np.sort(idx)]


def interior_points(rng, count: int, n: int, box: float = 2.0, height=(0.05, 2.0)) -> np.ndarray:
    """Uniform samples in [-box, box]^(n-1) x [height]."""
    pts = rng.uniform(-box, box, size=(count, n))
    pts[:, -1] = rng.uniform(height[0], height[1], size=count)
    return pts


def boundary_points(rng, count: int, n: int, box: float = 2.0) -> np.ndarray:
    pts = rng.uniform(-box, box, size=(count, n))
    pts[:, -1] = 0.0
    return pts


def ball_points(rng, count: int, center, radius: float, fraction: float = 0.95) -> np.ndarray:
    """Uniform samples in the ball of radius ``fraction * radius``."""
    center = np.asarray(center, dtype=float)
    n = center.shape[0]
    g = rng.standard_normal((count, n))
    g /= np.linalg.norm(g, axis=1)[:, None]
    r = fraction * radius * rng.uniform(0.0, 1.0, size=count) ** (1.0 / n)
    return center + r[:, None] * g


def sphere_points(rng, count: int, center, radius: float) -> np.ndarray:
    center = np.asarray(center, dtype=float)
    g = rng.standard_normal((count, center.shape[0]))
    g /= np.linalg.norm(g, axis=1)[:, None]
    return center + radius * g
