"""Constraint sets with membership tests and projections.

Two set kinds cover every experiment: a Euclidean ball (tracking problems)
and the unit simplex (portfolio weights).  The simplex supports two
projection modes:

* ``"exact"``: true Euclidean projection via sort-and-threshold, which is
  nonexpansive and therefore admissible in the regret-bound checks;
* ``"renormalize"``: clip negative entries to zero and rescale the rest to
  sum to one.  Cheap and common in portfolio practice, but not a metric
  projection, so bound checks refuse to run on it.

All projections are pure functions of their inputs and can be called from
any number of workers.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

DEFAULT_MEMBERSHIP_TOL = 1e-9

SIMPLEX_EXACT = "exact"
SIMPLEX_RENORMALIZE = "renormalize"


class DegenerateProjectionWarning(UserWarning):
    """Renormalizing projection received a vector with no positive mass."""


def _check_vector(v, dim: int, name: str = "v") -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != dim:
        raise ValueError(
            f"{name} must be a length-{dim} vector, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class EuclideanBall:
    """Closed ball ``{x : ||x - center|| <= radius}``."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        if center.ndim != 1 or not np.all(np.isfinite(center)):
            raise ValueError("center must be a finite vector")
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def nonexpansive(self) -> bool:
        return True

    def project(self, v) -> np.ndarray:
        v = _check_vector(v, self.dim)
        d = v - self.center
        norm = float(np.linalg.norm(d))
        if norm <= self.radius:
            return v.copy()
        return self.center + d * (self.radius / norm)

    def project_rows(self, vs: np.ndarray) -> np.ndarray:
        """Project each row of ``vs``; used by vectorized solvers."""
        vs = np.asarray(vs, dtype=float)
        d = vs - self.center
        norms = np.linalg.norm(d, axis=1)
        scale = np.ones_like(norms)
        outside = norms > self.radius
        scale[outside] = self.radius / norms[outside]
        return self.center + d * scale[:, None]

    def contains(self, v, tol: float = DEFAULT_MEMBERSHIP_TOL) -> bool:
        v = _check_vector(v, self.dim)
        return float(np.linalg.norm(v - self.center)) <= self.radius + tol

    def coordinate_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-coordinate interval hull (bounding box of the ball)."""
        return self.center - self.radius, self.center + self.radius

    def norm_bound(self) -> float:
        """sup ||x|| over the set."""
        return float(np.linalg.norm(self.center)) + self.radius

    def interior_point(self) -> np.ndarray:
        return self.center.copy()


def project_simplex_sorted(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the unit simplex by sort and threshold.

    Sorts the coordinates descending, finds the largest support size rho for
    which the shifted entries stay positive, and clips.  O(n log n).
    """
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, v.size + 1)
    cond = u + (1.0 - css) / ks > 0
    rho = int(np.nonzero(cond)[0][-1])
    tau = (1.0 - css[rho]) / (rho + 1)
    return np.maximum(v + tau, 0.0)


def project_simplex_sorted_rows(vs: np.ndarray) -> np.ndarray:
    """Row-wise sort-and-threshold simplex projection."""
    vs = np.asarray(vs, dtype=float)
    n = vs.shape[1]
    u = -np.sort(-vs, axis=1)
    css = np.cumsum(u, axis=1)
    ks = np.arange(1, n + 1)
    cond = u + (1.0 - css) / ks > 0
    # index of the last True per row; cond[:, 0] is always True
    rho = n - 1 - np.argmax(cond[:, ::-1], axis=1)
    tau = (1.0 - css[np.arange(len(vs)), rho]) / (rho + 1)
    return np.maximum(vs + tau[:, None], 0.0)


@dataclass(frozen=True)
class UnitSimplex:
    """Probability simplex ``{x : x >= 0, sum(x) = 1}`` in R^dim."""

    dim: int
    mode: str = SIMPLEX_EXACT

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        if self.mode not in (SIMPLEX_EXACT, SIMPLEX_RENORMALIZE):
            raise ValueError(
                f"projection mode must be '{SIMPLEX_EXACT}' or "
                f"'{SIMPLEX_RENORMALIZE}', got {self.mode!r}"
            )

    @property
    def nonexpansive(self) -> bool:
        # The renormalizing rule can move nearby points apart; only the
        # metric projection carries the contraction argument.
        return self.mode == SIMPLEX_EXACT

    def project(self, v) -> np.ndarray:
        v = _check_vector(v, self.dim)
        if self.mode == SIMPLEX_EXACT:
            return project_simplex_sorted(v)
        clipped = np.maximum(v, 0.0)
        total = clipped.sum()
        if total <= 0.0:
            warnings.warn(
                "renormalizing projection got a vector with no positive "
                "component; falling back to the uniform point",
                DegenerateProjectionWarning,
                stacklevel=2,
            )
            return np.full(self.dim, 1.0 / self.dim)
        return clipped / total

    def project_rows(self, vs: np.ndarray) -> np.ndarray:
        vs = np.asarray(vs, dtype=float)
        if self.mode == SIMPLEX_EXACT:
            return project_simplex_sorted_rows(vs)
        return np.stack([self.project(row) for row in vs])

    def contains(self, v, tol: float = DEFAULT_MEMBERSHIP_TOL) -> bool:
        v = _check_vector(v, self.dim)
        return bool(np.all(v >= -tol) and abs(v.sum() - 1.0) <= tol)

    def coordinate_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.zeros(self.dim), np.ones(self.dim)

    def norm_bound(self) -> float:
        return 1.0

    def interior_point(self) -> np.ndarray:
        return np.full(self.dim, 1.0 / self.dim)


ConstraintSet = Union[EuclideanBall, UnitSimplex]
