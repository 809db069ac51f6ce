"""Empirical CDFs of the reorganized dataset and the sup-gap statistic.

``b1(x)`` is the empirical CDF of the pre-event state ``X_{T-1}``.
``b2(x) = sum_t beta_t(x) * gamma_t`` rebuilds the same distribution from the
states of trajectories still at risk at each step, weighted by the hazard.
Under the null (event timing independent of the state) the two agree, and
their largest gap is the test statistic.

All CDFs use the closed order ``X <= x`` in every coordinate.  With unequal
horizons a trajectory contributes to step ``t`` only when its horizon is at
least ``t``; the hazard denominator is the at-risk count at ``t``.

The ratios ``a1(x) = P(A_{t+1} = 1 | X_t <= x, no event yet)`` and
``a2 = P(A_{t+1} = 1 | no event yet)`` that define the hypotheses are not
estimated directly; comparing ``b1`` with ``b2`` replaces them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import NoEventError, TrajectoryDataset, grid_index
from .kernels import dominance_sum


@dataclass(frozen=True)
class EmpiricalCdf:
    """A CDF tabulated on ``grid`` (shape (G, n)) with ``values`` (shape (G,))."""

    grid: np.ndarray
    values: np.ndarray

    def __len__(self):
        return self.values.shape[0]

    def __call__(self, x):
        """Evaluate a one-dimensional CDF at arbitrary ``x``.

        Exact when the grid contains every jump point, which holds for grids
        produced by :func:`~rarecause.core.evaluation_grid`.
        """
        if self.grid.shape[1] != 1:
            raise ValueError("off-grid evaluation needs n = 1; pass points= to the estimator")
        knots = self.grid[:, 0]
        x = np.asarray(x, dtype=np.float64)
        pos = np.searchsorted(knots, x, side="right") - 1
        vals = np.where(pos >= 0, self.values[np.maximum(pos, 0)], 0.0)
        return vals if vals.ndim else float(vals)


@dataclass(frozen=True)
class HazardSequence:
    """``gammas[t - 1]`` is the hazard estimate at step ``t``."""

    gammas: np.ndarray
    at_risk_counts: np.ndarray
    event_counts: np.ndarray


@dataclass(frozen=True)
class TestStatistic:
    value: float
    argmax_point: np.ndarray
    grid_size: int

    __test__ = False

    def __float__(self):
        return self.value


def _at_risk(horizons, first_times, width):
    """(N, width) mask of trajectories at risk at steps t = 1..width."""
    steps = np.arange(1, width + 1)
    in_horizon = steps[None, :] <= horizons[:, None]
    alive = (first_times[:, None] == 0) | (steps[None, :] <= first_times[:, None])
    return in_horizon & alive


def _hazard(horizons, first_times, width):
    at_risk = _at_risk(horizons, first_times, width)
    risk_counts = at_risk.sum(axis=0)
    event_counts = np.bincount(first_times, minlength=width + 1)[1:width + 1]
    gammas = np.zeros(width)
    pos = risk_counts > 0
    gammas[pos] = event_counts[pos] / risk_counts[pos]
    return HazardSequence(gammas, risk_counts, event_counts), at_risk


def estimate_gammas(ds: TrajectoryDataset) -> HazardSequence:
    """Hazard per step: first events at ``t`` over trajectories at risk at ``t``."""
    hazard, _ = _hazard(ds.horizons, ds.first_event_times, ds.max_horizon)
    return hazard


def _b1_values(index, first_times, rows):
    rows = rows[first_times[rows] > 0]
    if rows.size == 0:
        raise NoEventError("no event-bearing trajectories")
    pts = index.state_ranks[rows, first_times[rows] - 1]
    return dominance_sum(pts, np.ones(rows.size), index.query_ranks) / rows.size


def _b2_values(index, horizons, first_times, rows):
    width = index.state_ranks.shape[1] - 1
    hazard, at_risk = _hazard(horizons[rows], first_times[rows], width)
    n_rows = rows.size
    ii, tt = np.nonzero(at_risk)
    # point (i, t) is state X_{t-1} of trajectory i, weighted by gamma_t; divide by N last
    weights = hazard.gammas[tt]
    keep = weights > 0
    pts = index.state_ranks[rows[ii[keep]], tt[keep]]
    return dominance_sum(pts, weights[keep], index.query_ranks) / n_rows


def estimate_b1(ds: TrajectoryDataset, points=None) -> EmpiricalCdf:
    """Empirical CDF of the pre-event state over event-bearing trajectories.

    ``points`` overrides the evaluation grid.
    """
    index = grid_index(ds, points)
    rows = np.arange(len(ds))
    return EmpiricalCdf(index.grid, _b1_values(index, ds.first_event_times, rows))


def estimate_beta_t(ds: TrajectoryDataset, t: int, points=None) -> EmpiricalCdf:
    """``(1/N) #{i : X_{t-1} <= x, no event before t}`` for one step ``t``."""
    t = int(t)
    if not 1 <= t <= ds.max_horizon:
        raise ValueError(f"t={t} outside [1, {ds.max_horizon}]")
    index = grid_index(ds, points)
    risk = _at_risk(ds.horizons, ds.first_event_times, ds.max_horizon)[:, t - 1]
    pts = index.state_ranks[risk, t - 1]
    values = dominance_sum(pts, np.ones(pts.shape[0]), index.query_ranks) / len(ds)
    return EmpiricalCdf(index.grid, values)


def estimate_b2(ds: TrajectoryDataset, points=None) -> EmpiricalCdf:
    """Hazard-weighted mixture of at-risk state CDFs, truncated at the horizon."""
    index = grid_index(ds, points)
    rows = np.arange(len(ds))
    values = _b2_values(index, ds.horizons, ds.first_event_times, rows)
    return EmpiricalCdf(index.grid, values)


def reorganized_cdfs(ds: TrajectoryDataset, points=None) -> tuple[EmpiricalCdf, EmpiricalCdf]:
    """``(b1, b2)`` on a shared grid."""
    index = grid_index(ds, points)
    rows = np.arange(len(ds))
    b1 = _b1_values(index, ds.first_event_times, rows)
    b2 = _b2_values(index, ds.horizons, ds.first_event_times, rows)
    return EmpiricalCdf(index.grid, b1), EmpiricalCdf(index.grid, b2)


def _gap(index, horizons, first_times, rows):
    b1 = _b1_values(index, first_times, rows)
    b2 = _b2_values(index, horizons, first_times, rows)
    gaps = np.abs(b1 - b2)
    # grid is lexicographically sorted, so argmax picks the smallest tie
    k = int(np.argmax(gaps))
    return float(gaps[k]), k


def sup_gap(ds: TrajectoryDataset) -> TestStatistic:
    """Largest ``|b1 - b2|`` over the evaluation grid, with a point attaining it."""
    index = grid_index(ds)
    value, k = _gap(index, ds.horizons, ds.first_event_times, np.arange(len(ds)))
    return TestStatistic(value, index.grid[k].copy(), index.grid.shape[0])
