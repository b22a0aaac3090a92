"""Independent oracles used by the tests.

Everything here recomputes quantities by a route different from the library
code it checks: brute-force meshes, bisection on optimality conditions,
central finite differences, plain re-accumulation loops.
"""

from __future__ import annotations

import numpy as np


def finite_diff_gradient(fun, x, h=1e-6):
    """Central finite differences of a scalar function of a vector."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2.0 * h)
    return g


def secular_ball_minimizer(weights, target, center, radius, tol=1e-13):
    """Minimize sum_i w_i (x_i - a_i)^2 over a ball by its optimality system.

    Stationarity with multiplier nu >= 0 gives x_i(nu) = (w_i a_i + nu c_i)
    / (w_i + nu); the multiplier solves ||x(nu) - c|| = r and is found by
    bisection, entirely independent of any descent code.
    """
    w = np.asarray(weights, dtype=float)
    a = np.asarray(target, dtype=float)
    c = np.asarray(center, dtype=float)

    def x_of(nu):
        return (w * a + nu * c) / (w + nu)

    if np.linalg.norm(x_of(0.0) - c) <= radius:
        return x_of(0.0)
    lo, hi = 0.0, 1.0
    while np.linalg.norm(x_of(hi) - c) > radius:
        hi *= 2.0
        if hi > 1e18:
            raise RuntimeError("bisection bracket failed")
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if np.linalg.norm(x_of(mid) - c) > radius:
            lo = mid
        else:
            hi = mid
    return x_of(0.5 * (lo + hi))


def simplex_mesh(dim, step):
    """All mesh points of the unit simplex at the given resolution.

    dim 2 enumerates a segment, dim 3 a triangle; yielded in chunks so a
    fine triangle mesh never materializes at once.
    """
    if dim == 2:
        a = np.arange(0.0, 1.0 + step / 2, step)
        yield np.column_stack([a, 1.0 - a])
        return
    if dim != 3:
        raise ValueError("mesh oracle supports dimension 2 or 3")
    a_vals = np.arange(0.0, 1.0 + step / 2, step)
    chunk = max(1, int(2e6 // len(a_vals)))
    for start in range(0, len(a_vals), chunk):
        a = a_vals[start : start + chunk]
        aa, bb = np.meshgrid(a, a_vals, indexing="ij")
        cc = 1.0 - aa - bb
        keep = cc >= -1e-12
        pts = np.column_stack([aa[keep], bb[keep], np.maximum(cc[keep], 0.0)])
        if len(pts):
            yield pts


def simplex_mesh_argmin(objective, dim, step):
    """Brute-force minimizer of a vectorized objective over the simplex mesh."""
    best_val = np.inf
    best_pt = None
    for pts in simplex_mesh(dim, step):
        vals = objective(pts)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val = float(vals[i])
            best_pt = pts[i]
    return best_pt


def simplex_mesh_projection(v, step):
    """Mesh minimizer of ||x - v|| over the simplex."""
    v = np.asarray(v, dtype=float)

    def dist2(pts):
        d = pts - v
        return np.einsum("ij,ij->i", d, d)

    return simplex_mesh_argmin(dist2, v.size, step)
