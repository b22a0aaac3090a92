"""Projected online gradient descent, standard and predictive.

One update is x_{t+1} = P_X(x_t - eta * grad_x f(x_t, theta_ref)) where
theta_ref is the last observed parameter (standard mode) or a one-step-ahead
prediction (predictive mode).  ``inner_steps`` > 1 repeats the update map
within a single round.  Losses are always charged against the realized
parameter: the step ordering per round is observe, charge, predict, step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from poco.domains import ConstraintSet

MODE_STANDARD = "standard"
MODE_PREDICTIVE = "predictive"


@dataclass(frozen=True)
class DescentConfig:
    eta: float
    inner_steps: int = 1
    mode: str = MODE_PREDICTIVE

    def __post_init__(self):
        if not (np.isfinite(self.eta) and self.eta > 0):
            raise ValueError(f"eta must be positive, got {self.eta}")
        if int(self.inner_steps) < 1:
            raise ValueError(f"inner_steps must be >= 1, got {self.inner_steps}")
        object.__setattr__(self, "inner_steps", int(self.inner_steps))
        if self.mode not in (MODE_STANDARD, MODE_PREDICTIVE):
            raise ValueError(f"mode must be standard or predictive, got {self.mode!r}")


def ogd_step(family, cset: ConstraintSet, x, theta_ref, eta: float, inner_steps: int = 1):
    """Apply ``inner_steps`` projected gradient updates toward theta_ref."""
    z = np.asarray(x, dtype=float)
    for _ in range(inner_steps):
        g = family.gradient_x(z, theta_ref)
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(
                f"non-finite gradient at x={z!r}; the iterate left the "
                "region where the objective is well behaved"
            )
        z = cset.project(z - eta * g)
    return z


@dataclass
class Trajectory:
    """One run of (predictive) online gradient descent.

    Row t-1 holds the round-t quantities: the play ``xs[t-1]``, the observed
    parameter ``thetas[t-1]`` and the realized loss.  ``theta_hats[t-1]`` is
    the parameter the step that produced x_t descended toward (a prediction,
    or the previous observation while warming up / in standard mode); entry 0
    is a copy of thetas[0] and is never scored by the prediction regularity.
    ``predictor_active_from`` is the first 1-based round whose play came out
    of a live predictor, or None if the predictor never produced a step.
    """

    xs: np.ndarray
    thetas: np.ndarray
    theta_hats: np.ndarray
    losses: np.ndarray
    mode: str
    eta: float
    inner_steps: int
    predictor_active_from: Optional[int] = None

    @property
    def horizon(self) -> int:
        return self.xs.shape[0]

    def cumulative_losses(self) -> np.ndarray:
        return np.cumsum(self.losses)


def run_predictive_ogd(
    family,
    cset: ConstraintSet,
    thetas,
    config: DescentConfig,
    x1,
    predictor=None,
) -> Trajectory:
    """Run the online loop over a realized parameter sequence.

    ``thetas`` is the full (T, m) scenario; the loop still only ever feeds
    the predictor the prefix observed so far.  In predictive mode the step
    falls back to the freshly observed parameter until ``predictor.ready``;
    that keeps the early rounds identical to standard mode, which is also
    what makes paired difference curves start at exactly zero.
    """
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim != 2 or thetas.shape[0] < 1:
        raise ValueError("thetas must be a nonempty (T, m) array")
    if config.mode == MODE_PREDICTIVE and predictor is None:
        raise ValueError("predictive mode requires a predictor")
    horizon = thetas.shape[0]
    x = np.asarray(x1, dtype=float)
    if not cset.contains(x, tol=1e-9):
        raise ValueError("initial point x1 must lie in the constraint set")

    n = x.shape[0]
    xs = np.empty((horizon, n))
    losses = np.empty(horizon)
    theta_hats = np.empty_like(thetas)
    theta_hats[0] = thetas[0]
    active_from: Optional[int] = None

    for t in range(1, horizon + 1):
        i = t - 1
        xs[i] = x
        losses[i] = family.value(x, thetas[i])
        if t == horizon:
            break
        aim = None
        if config.mode == MODE_PREDICTIVE and predictor.ready(t):
            aim = np.asarray(predictor.predict(thetas[:t]), dtype=float)
            if active_from is None:
                active_from = t + 1
        if aim is None:
            aim = thetas[i]
        theta_hats[t] = aim
        x = ogd_step(family, cset, x, aim, config.eta, config.inner_steps)

    return Trajectory(
        xs=xs,
        thetas=thetas,
        theta_hats=theta_hats,
        losses=losses,
        mode=config.mode,
        eta=config.eta,
        inner_steps=config.inner_steps,
        predictor_active_from=active_from,
    )
