"""Parametric objective families f(x, theta) and their regularity constants.

Every family exposes the same surface: ``value``, ``gradient_x``, a
per-parameter ``curvature`` (strong convexity and smoothness of f(., theta)),
an ``unconstrained_minimizer`` fast path, and ``derive_constants``, which
turns a constraint set plus a parameter bounding box into the constants
(G, L, lambda, C_theta, D) that the regret bounds consume.  Derived constants
are allowed to be conservative: a larger G or D only loosens a bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from poco.domains import ConstraintSet

_SYMMETRY_TOL = 1e-9


@dataclass(frozen=True)
class ObjectiveConstants:
    """Regularity constants of a family over a domain X and parameter box.

    G bounds the x-gradient norm, L the smoothness, lam the strong convexity,
    C_theta the Lipschitz constant of x-gradients in theta, and D the range
    sup f - inf f.
    """

    G: float
    L: float
    lam: float
    C_theta: float
    D: float

    def __post_init__(self):
        for name in ("G", "L", "lam", "C_theta", "D"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ValueError(f"constant {name} must be finite and positive, got {val}")
        if self.lam > self.L * (1 + 1e-12):
            raise ValueError(f"lam={self.lam} exceeds L={self.L}")


def contraction_factor(constants: ObjectiveConstants, eta: float) -> float:
    """Per-step shrinkage sqrt(1 - 2*lam*eta / (1 + eta*lam)) of projected
    gradient descent, valid for step sizes eta <= 1/L."""
    if not (np.isfinite(eta) and eta > 0):
        raise ValueError(f"eta must be positive, got {eta}")
    if eta > 1.0 / constants.L * (1 + 1e-12):
        raise ValueError(
            f"eta={eta} violates the contraction step-size condition "
            f"eta <= 1/L = {1.0 / constants.L}"
        )
    lam = constants.lam
    inner = 1.0 - 2.0 * lam * eta / (1.0 + eta * lam)
    return math.sqrt(max(inner, 0.0))


def _box_arrays(theta_box, m: int) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = theta_box
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.shape != (m,) or hi.shape != (m,):
        raise ValueError(f"parameter box must be two length-{m} vectors")
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("parameter box must be bounded (finite on both sides)")
    if np.any(hi < lo):
        raise ValueError("parameter box has hi < lo")
    return lo, hi


def _interval_gap(x_lo, x_hi, a_lo, a_hi) -> np.ndarray:
    # sup |x - a| over x in [x_lo, x_hi], a in [a_lo, a_hi], per coordinate
    return np.maximum(x_hi - a_lo, a_hi - x_lo)


class QuadraticTracking:
    """Weighted quadratic tracker: f(x, theta) = sum_i w_i (x_i - theta_i)^2 + theta_n.

    theta stacks the moving target (first n entries) and an additive offset
    (last entry).  The offset shifts values but not gradients, so it cancels
    out of any regret difference.
    """

    kind = "quadratic_tracking"

    def __init__(self, weights=(100.0, 1.0)):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.size < 1 or not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("weights must be a vector of positive reals")
        self.weights = w
        self.n = w.size
        self.m = w.size + 1

    def _split(self, theta) -> tuple[np.ndarray, float]:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.m,):
            raise ValueError(f"theta must have length {self.m}, got shape {theta.shape}")
        return theta[: self.n], float(theta[self.n])

    def value(self, x, theta) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"x must have length {self.n}, got shape {x.shape}")
        target, offset = self._split(theta)
        d = x - target
        return float(self.weights @ (d * d) + offset)

    def gradient_x(self, x, theta) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"x must have length {self.n}, got shape {x.shape}")
        target, _ = self._split(theta)
        return 2.0 * self.weights * (x - target)

    def value_rows(self, xs: np.ndarray, thetas: np.ndarray) -> np.ndarray:
        d = xs - thetas[:, : self.n]
        return (d * d) @ self.weights + thetas[:, self.n]

    def gradient_x_rows(self, xs: np.ndarray, thetas: np.ndarray) -> np.ndarray:
        return 2.0 * self.weights * (xs - thetas[:, : self.n])

    def unconstrained_minimizer(self, theta) -> np.ndarray:
        target, _ = self._split(theta)
        return target.copy()

    def unconstrained_minimizer_rows(self, thetas: np.ndarray) -> np.ndarray:
        return np.array(thetas[:, : self.n], dtype=float)

    def curvature(self, theta=None) -> tuple[float, float]:
        """(lam, L) of f(., theta); independent of theta for this family."""
        return 2.0 * float(self.weights.min()), 2.0 * float(self.weights.max())

    def curvature_rows(self, thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        lam, L = self.curvature()
        n = len(thetas)
        return np.full(n, lam), np.full(n, L)

    def derive_constants(self, cset: ConstraintSet, theta_box) -> ObjectiveConstants:
        lo, hi = _box_arrays(theta_box, self.m)
        x_lo, x_hi = cset.coordinate_bounds()
        gap = _interval_gap(x_lo, x_hi, lo[: self.n], hi[: self.n])
        gap = np.maximum(gap, 0.0)
        G = float(np.linalg.norm(2.0 * self.weights * gap))
        lam, L = self.curvature()
        # gradient depends on the target block through -2w, not on the offset
        C_theta = L
        D = float(self.weights @ (gap * gap) + (hi[self.n] - lo[self.n]))
        return ObjectiveConstants(G=G, L=L, lam=lam, C_theta=C_theta, D=max(D, 1e-300))


class FunctionalTimeSeries:
    """Simplex-weighted mix of diagonal quadratics: f(x, theta) = sum_i theta_i q_i(x)
    with q_i(x) = (x - v_i)' diag(a_i) (x - v_i) and theta on the unit simplex."""

    kind = "functional_time_series"

    def __init__(self, coeffs, centers):
        a = np.asarray(coeffs, dtype=float)
        v = np.asarray(centers, dtype=float)
        if a.ndim != 2 or v.shape != a.shape:
            raise ValueError("coeffs and centers must be (m, n) arrays of equal shape")
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise ValueError("diagonal coefficients must be positive")
        self.a = a
        self.v = v
        self.m, self.n = a.shape

    def _check(self, x, theta) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"x must have length {self.n}, got shape {x.shape}")
        if theta.shape != (self.m,):
            raise ValueError(f"theta must have length {self.m}, got shape {theta.shape}")
        return x, theta

    def value(self, x, theta) -> float:
        x, theta = self._check(x, theta)
        r = x - self.v
        q = np.sum(self.a * r * r, axis=1)
        return float(theta @ q)

    def gradient_x(self, x, theta) -> np.ndarray:
        x, theta = self._check(x, theta)
        r = x - self.v
        return 2.0 * (theta @ (self.a * r))

    def value_rows(self, xs: np.ndarray, thetas: np.ndarray) -> np.ndarray:
        r = xs[:, None, :] - self.v[None, :, :]
        q = np.sum(self.a[None] * r * r, axis=2)
        return np.sum(thetas * q, axis=1)

    def gradient_x_rows(self, xs: np.ndarray, thetas: np.ndarray) -> np.ndarray:
        r = xs[:, None, :] - self.v[None, :, :]
        return 2.0 * np.einsum("ti,tin->tn", thetas, self.a[None] * r)

    def unconstrained_minimizer(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        den = theta @ self.a
        num = theta @ (self.a * self.v)
        return num / den

    def unconstrained_minimizer_rows(self, thetas: np.ndarray) -> np.ndarray:
        den = thetas @ self.a
        num = thetas @ (self.a * self.v)
        return num / den

    def curvature(self, theta=None) -> tuple[float, float]:
        if theta is None:
            return 2.0 * float(self.a.min(axis=0).min()), 2.0 * float(self.a.max())
        theta = np.asarray(theta, dtype=float)
        diag = theta @ self.a
        return 2.0 * float(diag.min()), 2.0 * float(diag.max())

    def curvature_rows(self, thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        diag = thetas @ self.a
        return 2.0 * diag.min(axis=1), 2.0 * diag.max(axis=1)

    def derive_constants(self, cset: ConstraintSet, theta_box=None) -> ObjectiveConstants:
        # theta lives on the simplex; a box argument is accepted but unused.
        x_lo, x_hi = cset.coordinate_bounds()
        gap = np.maximum(
            _interval_gap(x_lo, x_hi, self.v.min(axis=0), self.v.max(axis=0)), 0.0
        )
        per_basis = np.linalg.norm(2.0 * self.a * gap[None, :], axis=1)
        G = float(per_basis.max())
        C_theta = float(np.linalg.norm(per_basis))
        lam, L = self.curvature()
        D = float(np.max(np.sum(self.a * gap[None, :] ** 2, axis=1)))
        return ObjectiveConstants(G=G, L=L, lam=lam, C_theta=C_theta, D=max(D, 1e-300))


class Markowitz:
    """Mean-variance portfolio objective f(x, theta) = x' Sigma x - lam_risk x' mu.

    theta column-stacks [mu, vec(Sigma), lam_risk], so the parameter has
    n + n^2 + 1 entries for n assets.  Sigma must be symmetric (to 1e-9) and
    positive semidefinite for convexity.
    """

    kind = "markowitz"

    def __init__(self, n_assets: int):
        if int(n_assets) < 1:
            raise ValueError(f"n_assets must be >= 1, got {n_assets}")
        self.n = int(n_assets)
        self.m = self.n + self.n * self.n + 1

    def pack(self, mu, sigma, lam_risk: float) -> np.ndarray:
        mu = np.asarray(mu, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        if mu.shape != (self.n,) or sigma.shape != (self.n, self.n):
            raise ValueError("mu/sigma shapes do not match the asset count")
        return np.concatenate([mu, sigma.ravel(), [float(lam_risk)]])

    def unpack(self, theta) -> tuple[np.ndarray, np.ndarray, float]:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.m,):
            raise ValueError(f"theta must have length {self.m}, got shape {theta.shape}")
        mu = theta[: self.n]
        sigma = theta[self.n : self.n + self.n * self.n].reshape(self.n, self.n)
        lam_risk = float(theta[-1])
        if np.max(np.abs(sigma - sigma.T)) > _SYMMETRY_TOL:
            raise ValueError("covariance block is not symmetric (beyond 1e-9)")
        return mu, sigma, lam_risk

    def _check_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"x must have length {self.n}, got shape {x.shape}")
        return x

    def value(self, x, theta) -> float:
        x = self._check_x(x)
        mu, sigma, lam_risk = self.unpack(theta)
        return float(x @ sigma @ x - lam_risk * (x @ mu))

    def gradient_x(self, x, theta) -> np.ndarray:
        x = self._check_x(x)
        mu, sigma, lam_risk = self.unpack(theta)
        return 2.0 * (sigma @ x) - lam_risk * mu

    def unconstrained_minimizer(self, theta) -> Optional[np.ndarray]:
        mu, sigma, lam_risk = self.unpack(theta)
        try:
            return np.linalg.solve(2.0 * sigma, lam_risk * mu)
        except np.linalg.LinAlgError:
            return None

    def curvature(self, theta) -> tuple[float, float]:
        _, sigma, _ = self.unpack(theta)
        eigs = np.linalg.eigvalsh((sigma + sigma.T) / 2.0)
        return 2.0 * float(eigs[0]), 2.0 * float(eigs[-1])

    def derive_constants(
        self, cset: ConstraintSet, theta_box, sigma_min: float = 1e-6
    ) -> ObjectiveConstants:
        """Constants over X x box.  The minimum eigenvalue of the covariance
        block cannot be read off a box, so the caller declares a floor
        ``sigma_min`` (the ridge added by the moment estimator by default)."""
        if not (np.isfinite(sigma_min) and sigma_min > 0):
            raise ValueError("sigma_min must be a positive eigenvalue floor")
        lo, hi = _box_arrays(theta_box, self.m)
        mu_abs = np.maximum(np.abs(lo[: self.n]), np.abs(hi[: self.n]))
        mu_norm = float(np.linalg.norm(mu_abs))
        sig_lo = lo[self.n : self.n + self.n * self.n]
        sig_hi = hi[self.n : self.n + self.n * self.n]
        sig_abs = np.maximum(np.abs(sig_lo), np.abs(sig_hi))
        # operator norm <= Frobenius norm of the entrywise envelope
        sigma_max = float(np.linalg.norm(sig_abs))
        lam_lo, lam_hi = float(lo[-1]), float(hi[-1])
        if lam_lo < 0:
            raise ValueError("risk tradeoff lam_risk must be nonnegative over the box")
        xnorm = cset.norm_bound()
        G = 2.0 * sigma_max * xnorm + lam_hi * mu_norm
        L = 2.0 * sigma_max
        lam = 2.0 * float(sigma_min)
        if lam > L:
            raise ValueError(
                f"declared sigma_min={sigma_min} exceeds the box's largest "
                f"possible eigenvalue {sigma_max}"
            )
        C_theta = math.sqrt((2.0 * xnorm) ** 2 + lam_hi**2 + mu_norm**2)
        D = sigma_max * xnorm**2 + 2.0 * lam_hi * mu_norm * xnorm
        return ObjectiveConstants(
            G=max(G, 1e-300), L=L, lam=lam, C_theta=max(C_theta, 1e-300), D=max(D, 1e-300)
        )


ObjectiveFamily = Union[QuadraticTracking, FunctionalTimeSeries, Markowitz]
