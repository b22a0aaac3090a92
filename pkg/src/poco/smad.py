"""SMAD: simultaneous modeling and descent.

A pool of experts, each wrapping its own parameter predictor and running its
own predictive descent iterate, is aggregated by an exponentially weighted
average.  After every round each expert is scored with l_i =
exp(-gamma * f(v_i, theta_t)) and the mixture is reweighted by the Gibbs
rule w_i = p_i * l_i (applied once per round).  Experts joining mid-run are
mixed in with mass beta: existing weights are scaled by (1 - beta) and the
entrant starts at beta, with its iterate seeded at the previous aggregated
output and its predictor fit on the full history observed so far.

Weights are kept in log space; every exposed distribution is normalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from poco.descent import ogd_step
from poco.domains import ConstraintSet


def suggested_gamma(d_range: float, horizon: int) -> float:
    """Learning rate sqrt(8 / (T * D^2)) that optimizes the aggregation
    penalty for a loss range D over T rounds."""
    if not (np.isfinite(d_range) and d_range > 0):
        raise ValueError(f"loss range D must be positive, got {d_range}")
    if int(horizon) < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    return math.sqrt(8.0 / (horizon * d_range * d_range))


def hedge_gap_bound(gamma: float, d_range: float, horizon: int, n_experts: int) -> float:
    """Upper bound T*gamma*D^2/8 + ln(N)/gamma on the aggregated loss minus
    the best expert's loss, valid for pools held fixed over the run."""
    if gamma <= 0 or d_range < 0 or horizon < 1 or n_experts < 1:
        raise ValueError("need gamma > 0, D >= 0, T >= 1, N >= 1")
    return horizon * gamma * d_range * d_range / 8.0 + math.log(n_experts) / gamma


@dataclass
class Expert:
    predictor: object
    x: np.ndarray
    activated_at: int
    first_play: Optional[np.ndarray] = None
    p_theta: float = 0.0  # running sum of ||theta_t - aim_t|| for t >= 2
    cum_loss: float = 0.0


class ExpertPool:
    """Roster of experts with a normalized log-space weight vector."""

    def __init__(
        self,
        capacity: int,
        beta: float,
        gamma: float,
        eta: float,
        inner_steps: int = 1,
    ):
        if int(capacity) < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        if not (0.0 < beta < 1.0):
            raise ValueError(f"beta must lie in (0, 1), got {beta}")
        if not (np.isfinite(gamma) and gamma > 0):
            raise ValueError(f"gamma must be positive, got {gamma}")
        if not (np.isfinite(eta) and eta > 0):
            raise ValueError(f"eta must be positive, got {eta}")
        self.capacity = int(capacity)
        self.beta = float(beta)
        self.gamma = float(gamma)
        self.eta = float(eta)
        self.inner_steps = int(inner_steps)
        self.experts: list[Expert] = []
        self.log_p = np.zeros(0)
        # componentwise range of every parameter an expert descended toward;
        # bound checks need constants valid at the predictions, not just the
        # observations
        self.aim_lo: Optional[np.ndarray] = None
        self.aim_hi: Optional[np.ndarray] = None

    @property
    def n_active(self) -> int:
        return len(self.experts)

    def distribution(self) -> np.ndarray:
        return np.exp(self.log_p)

    def initialize(self, predictors: Sequence[object], x_init, t: int = 1) -> None:
        """Seed the starting roster with uniform weights.

        This is the day-one pool; use :meth:`activate` for models that join
        once the run is underway.  Starting uniform (rather than chaining the
        beta mixing rule) is what the aggregation guarantee assumes.
        """
        if self.n_active > 0:
            raise RuntimeError("initialize requires an empty pool")
        predictors = list(predictors)
        if not predictors:
            raise ValueError("need at least one predictor")
        if len(predictors) > self.capacity:
            raise RuntimeError(
                f"expert pool full: capacity {self.capacity} reached"
            )
        x_init = np.asarray(x_init, dtype=float)
        for predictor in predictors:
            self.experts.append(
                Expert(predictor=predictor, x=x_init.copy(), activated_at=t)
            )
        self.log_p = np.full(len(predictors), -math.log(len(predictors)))

    def activate(self, predictor, x_init, t: int) -> None:
        """Admit a new expert mid-run, scaling incumbents by (1 - beta)
        and giving the entrant mass beta."""
        if self.n_active >= self.capacity:
            raise RuntimeError(
                f"expert pool full: capacity {self.capacity} reached"
            )
        x_init = np.asarray(x_init, dtype=float).copy()
        self.experts.append(Expert(predictor=predictor, x=x_init, activated_at=t))
        if self.n_active == 1:
            self.log_p = np.zeros(1)
        else:
            self.log_p = np.append(
                self.log_p + math.log1p(-self.beta), math.log(self.beta)
            )
            self.log_p -= _logsumexp(self.log_p)

    def step(self, family, cset: ConstraintSet, theta_t, history) -> np.ndarray:
        """One round: expert descent steps, aggregation, Gibbs reweighting.

        ``history`` holds theta_1..theta_{t-1}; ``theta_t`` is the parameter
        revealed this round.  Each expert aims at its own prediction of
        theta_t (falling back to the last observation while its predictor
        warms up, or holding still when there is no history at all), the
        aggregate plays the projected weighted mean of the expert moves, and
        the realized losses tilt the weights once.
        """
        if self.n_active == 0:
            raise RuntimeError("cannot step an empty expert pool")
        theta_t = np.asarray(theta_t, dtype=float)
        hist = np.asarray(history, dtype=float)
        n_obs = 0 if hist.size == 0 else hist.shape[0]

        p_prev = self.distribution()
        moves = np.empty((self.n_active, self.experts[0].x.shape[0]))
        losses = np.empty(self.n_active)
        for idx, expert in enumerate(self.experts):
            aim = None
            if expert.predictor is not None and expert.predictor.ready(n_obs):
                aim = np.asarray(expert.predictor.predict(hist), dtype=float)
            elif n_obs >= 1:
                aim = hist[-1]
            if aim is None:
                v = expert.x.copy()
            else:
                v = ogd_step(family, cset, expert.x, aim, self.eta, self.inner_steps)
                # scored from the expert's second active round on; the first
                # round's error is absorbed by the starting-gap term
                if expert.first_play is not None:
                    expert.p_theta += float(np.linalg.norm(theta_t - aim))
                if self.aim_lo is None:
                    self.aim_lo = np.array(aim, dtype=float)
                    self.aim_hi = np.array(aim, dtype=float)
                else:
                    np.minimum(self.aim_lo, aim, out=self.aim_lo)
                    np.maximum(self.aim_hi, aim, out=self.aim_hi)
            moves[idx] = v

        x_t = cset.project(p_prev @ moves)

        for idx, expert in enumerate(self.experts):
            losses[idx] = family.value(moves[idx], theta_t)
            expert.x = moves[idx]
            if expert.first_play is None:
                expert.first_play = moves[idx].copy()
            expert.cum_loss += losses[idx]

        log_w = self.log_p - self.gamma * losses
        norm = _logsumexp(log_w)
        if not np.isfinite(norm):
            raise ArithmeticError(
                "all expert weights vanished during the Gibbs update; "
                f"gamma={self.gamma} is too large for these loss magnitudes"
            )
        self.log_p = log_w - norm
        self._last_moves = moves
        self._last_losses = losses
        return x_t


def _logsumexp(v: np.ndarray) -> float:
    hi = np.max(v)
    if not np.isfinite(hi):
        return float(hi)
    return float(hi + np.log(np.sum(np.exp(v - hi))))


@dataclass
class SmadTrajectory:
    """One SMAD run: aggregated plays plus per-expert bookkeeping.

    Expert arrays are padded with NaN before activation.  ``p`` holds the
    post-update distribution of each round, aligned to the full roster.
    """

    xs: np.ndarray  # (T, n) aggregated plays
    thetas: np.ndarray  # (T, m)
    losses: np.ndarray  # (T,)
    expert_xs: np.ndarray  # (T, N, n)
    expert_losses: np.ndarray  # (T, N)
    p: np.ndarray  # (T, N)
    activation_times: tuple
    p_theta_by_expert: np.ndarray  # (N,) effective prediction regularity
    first_plays: np.ndarray  # (N, n)
    pool_empty_until: int  # rounds 1..pool_empty_until ran the plain fallback

    @property
    def horizon(self) -> int:
        return self.xs.shape[0]

    def cumulative_losses(self) -> np.ndarray:
        return np.cumsum(self.losses)

    def expert_cumulative_losses(self) -> np.ndarray:
        return np.nansum(self.expert_losses, axis=0)

    def hedge_gap(self) -> float:
        """Aggregated cumulative loss minus the best expert's; only
        meaningful when every expert was active from the first round."""
        return float(self.losses.sum() - self.expert_cumulative_losses().min())


def run_smad(
    family,
    cset: ConstraintSet,
    thetas,
    pool: ExpertPool,
    x1,
    roster: Sequence[tuple[int, object]] = (),
    initial_history=None,
) -> SmadTrajectory:
    """Drive an expert pool over a realized parameter sequence.

    ``roster`` lists (activation round, predictor) pairs handled at the top
    of the given round.  While the pool is empty the aggregate falls back to
    plain projected descent on the last observation, so a run whose first
    activation is late stays identical to the standard baseline until then.
    ``initial_history`` seeds the observation record (data available before
    round 1).
    """
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim != 2 or thetas.shape[0] < 1:
        raise ValueError("thetas must be a nonempty (T, m) array")
    horizon = thetas.shape[0]
    x = np.asarray(x1, dtype=float)
    if not cset.contains(x, tol=1e-9):
        raise ValueError("initial point x1 must lie in the constraint set")
    if initial_history is None:
        seed_len = 0
        seed_rows = np.empty((0, thetas.shape[1]))
    else:
        seed_rows = np.array(initial_history, dtype=float)
        if seed_rows.ndim != 2 or (seed_rows.size and seed_rows.shape[1] != thetas.shape[1]):
            raise ValueError("initial_history must be a (k, m) array")
        seed_len = seed_rows.shape[0]
    # one shared buffer; rounds see growing views instead of growing copies
    record = np.empty((seed_len + horizon, thetas.shape[1]))
    record[:seed_len] = seed_rows

    pending = sorted(roster, key=lambda pair: pair[0])
    n_total = pool.capacity
    n = x.shape[0]
    xs = np.empty((horizon, n))
    losses = np.empty(horizon)
    expert_xs = np.full((horizon, n_total, n), np.nan)
    expert_losses = np.full((horizon, n_total), np.nan)
    p_hist = np.full((horizon, n_total), np.nan)
    activation_times: list[int] = [e.activated_at for e in pool.experts]
    pool_empty_until = 0

    last_output = x.copy()
    for t in range(1, horizon + 1):
        i = t - 1
        while pending and pending[0][0] <= t:
            _, predictor = pending.pop(0)
            # the entrant inherits the previous played point, not the
            # fallback's pre-stepped iterate
            pool.activate(predictor, x_init=last_output, t=t)
            activation_times.append(t)
        theta_t = thetas[i]
        if pool.n_active == 0:
            xs[i] = x
            losses[i] = family.value(x, theta_t)
            last_output = xs[i]
            x = ogd_step(family, cset, x, theta_t, pool.eta, pool.inner_steps)
            pool_empty_until = t
        else:
            x = pool.step(family, cset, theta_t, record[: seed_len + i])
            xs[i] = x
            losses[i] = family.value(x, theta_t)
            last_output = xs[i]
            m_act = pool.n_active
            expert_xs[i, :m_act] = pool._last_moves
            expert_losses[i, :m_act] = pool._last_losses
            p_hist[i, :m_act] = pool.distribution()
        record[seed_len + i] = theta_t

    p_theta = np.full(n_total, np.nan)
    first_plays = np.full((n_total, n), np.nan)
    for idx, expert in enumerate(pool.experts):
        p_theta[idx] = expert.p_theta
        if expert.first_play is not None:
            first_plays[idx] = expert.first_play

    return SmadTrajectory(
        xs=xs,
        thetas=thetas,
        losses=losses,
        expert_xs=expert_xs,
        expert_losses=expert_losses,
        p=p_hist,
        activation_times=tuple(activation_times),
        p_theta_by_expert=p_theta,
        first_plays=first_plays,
        pool_empty_until=pool_empty_until,
    )
