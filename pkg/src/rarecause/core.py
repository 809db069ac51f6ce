"""Trajectory data model, first-event extraction and evaluation grids.

A trajectory stores states ``X_0 .. X_H`` and binary event flags
``A_1 .. A_H``.  ``events[t - 1]`` holds ``A_t`` and its "state before" is
``states[t - 1]``, i.e. ``X_{t-1}``.

A :class:`TrajectoryDataset` packs N trajectories into padded arrays so the
estimators can work on whole datasets at once.  Trajectories may have
different horizons; padding beyond a trajectory's horizon is never read.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional

import numpy as np


class NoEventError(ValueError):
    """Raised when an operation needs an event that a trajectory lacks."""


def _as_state_array(states, name="states") -> np.ndarray:
    arr = np.asarray(states, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have shape (H + 1, n) with n >= 1")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contain non-finite values")
    return arr


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One realization: ``states`` of shape (H + 1, n), ``events`` of length H."""

    states: np.ndarray
    events: np.ndarray

    def __post_init__(self):
        states = _as_state_array(self.states)
        events = np.asarray(self.events)
        if events.ndim != 1:
            raise ValueError("events must be one-dimensional")
        if events.size and not np.all((events == 0) | (events == 1)):
            raise ValueError("events must be binary flags")
        events = events.astype(np.int8)
        if states.shape[0] != events.size + 1:
            raise ValueError(
                f"expected {events.size + 1} states for {events.size} events, "
                f"got {states.shape[0]}"
            )
        if events.size < 1:
            raise ValueError("horizon must be a positive integer")
        states.flags.writeable = False
        events.flags.writeable = False
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "events", events)

    @property
    def horizon(self) -> int:
        return int(self.events.size)

    @property
    def dimension(self) -> int:
        return int(self.states.shape[1])

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (
            self.states.shape == other.states.shape
            and np.array_equal(self.states, other.states)
            and np.array_equal(self.events, other.events)
        )

    __hash__ = None


def first_event_time(traj: Trajectory) -> Optional[int]:
    """Return the smallest ``t`` with ``A_t = 1``, or ``None`` if no event occurs."""
    hits = np.flatnonzero(traj.events)
    if hits.size == 0:
        return None
    return int(hits[0]) + 1


def pre_event_state(traj: Trajectory) -> np.ndarray:
    """Return ``X_{T-1}``, the state just before the first event."""
    t = first_event_time(traj)
    if t is None:
        raise NoEventError("no event on trajectory")
    return traj.states[t - 1]


def componentwise_leq(x, y) -> bool:
    """``x <= y`` in every coordinate."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return bool(np.all(x <= y))


class TrajectoryDataset:
    """N independent trajectories sharing a state dimension.

    Parameters
    ----------
    states : array of shape (N, H_max + 1, n)
    events : array of shape (N, H_max)
    horizons : optional int array of shape (N,); defaults to ``H_max`` for all
    ids : optional trajectory labels, used by the CSV format
    """

    def __init__(self, states, events, horizons=None, ids=None):
        states = np.asarray(states, dtype=np.float64)
        if states.ndim == 2:
            states = states[:, :, None]
        events = np.asarray(events)
        if states.ndim != 3 or events.ndim != 2:
            raise ValueError("states must be (N, H+1, n) and events (N, H)")
        n_traj, width, dim = states.shape
        if events.shape != (n_traj, width - 1):
            raise ValueError(
                f"events shape {events.shape} does not match states {states.shape}"
            )
        if n_traj < 1:
            raise ValueError("dataset must contain at least one trajectory")
        if dim < 1 or width < 2:
            raise ValueError("need n >= 1 and horizon >= 1")
        if horizons is None:
            horizons = np.full(n_traj, width - 1, dtype=np.int64)
        horizons = np.asarray(horizons, dtype=np.int64)
        if horizons.shape != (n_traj,) or horizons.min() < 1 or horizons.max() > width - 1:
            raise ValueError("horizons must lie in [1, H_max]")
        if events.size and not np.all((events == 0) | (events == 1)):
            raise ValueError("events must be binary flags")
        events = events.astype(np.int8)
        # canonical shape: no padding column beyond the longest horizon
        width = int(horizons.max()) + 1
        states = states[:, :width]
        events = events[:, : width - 1]

        steps = np.arange(width)
        state_valid = steps[None, :] <= horizons[:, None]
        if not np.all(np.isfinite(states[state_valid])):
            raise ValueError("states contain non-finite values")
        # Padding is zeroed so it can never leak into a comparison.
        states = np.where(state_valid[:, :, None], states, 0.0)
        events = np.where(steps[None, 1:] <= horizons[:, None], events, 0).astype(np.int8)

        if ids is None:
            ids = [str(i) for i in range(n_traj)]
        ids = [str(i) for i in ids]
        if len(ids) != n_traj:
            raise ValueError("ids must have one entry per trajectory")

        for arr in (states, events, horizons):
            arr.flags.writeable = False
        self.states = states
        self.events = events
        self.horizons = horizons
        self.ids = ids

    @classmethod
    def from_trajectories(cls, trajectories: Iterable[Trajectory], ids=None) -> "TrajectoryDataset":
        trajs = list(trajectories)
        if not trajs:
            raise ValueError("dataset must contain at least one trajectory")
        dim = trajs[0].dimension
        if any(tr.dimension != dim for tr in trajs):
            raise ValueError("all trajectories must share the same dimension")
        h_max = max(tr.horizon for tr in trajs)
        states = np.zeros((len(trajs), h_max + 1, dim))
        events = np.zeros((len(trajs), h_max), dtype=np.int8)
        for i, tr in enumerate(trajs):
            states[i, : tr.horizon + 1] = tr.states
            events[i, : tr.horizon] = tr.events
        return cls(states, events, [tr.horizon for tr in trajs], ids=ids)

    def __len__(self) -> int:
        return self.states.shape[0]

    def __getitem__(self, i: int) -> Trajectory:
        h = int(self.horizons[i])
        return Trajectory(self.states[i, : h + 1].copy(), self.events[i, :h].copy())

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def __eq__(self, other):
        if not isinstance(other, TrajectoryDataset):
            return NotImplemented
        return (
            self.states.shape == other.states.shape
            and np.array_equal(self.horizons, other.horizons)
            and np.array_equal(self.states, other.states)
            and np.array_equal(self.events, other.events)
            and self.ids == other.ids
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"TrajectoryDataset(N={len(self)}, n={self.dimension}, "
            f"H_max={self.max_horizon}, events={self.n_event_bearing})"
        )

    @property
    def trajectories(self) -> list[Trajectory]:
        return list(self)

    @property
    def dimension(self) -> int:
        return self.states.shape[2]

    @property
    def max_horizon(self) -> int:
        return self.events.shape[1]

    @property
    def common_horizon(self) -> bool:
        return bool(np.all(self.horizons == self.horizons[0]))

    @cached_property
    def first_event_times(self) -> np.ndarray:
        """First event time per trajectory, 0 where no event occurs."""
        return first_event_times(self.events)

    @property
    def n_event_bearing(self) -> int:
        return int(np.count_nonzero(self.first_event_times))

    @cached_property
    def pre_event_states(self) -> np.ndarray:
        """``X_{T-1}`` for every event-bearing trajectory, shape (N_event, n)."""
        t = self.first_event_times
        rows = np.flatnonzero(t)
        return self.states[rows, t[rows] - 1]

    def subset(self, index) -> "TrajectoryDataset":
        index = np.asarray(index)
        if index.dtype == bool:
            index = np.flatnonzero(index)
        if index.size == 0:
            raise ValueError("subset would leave no trajectories")
        h = int(self.horizons[index].max())
        return TrajectoryDataset(
            self.states[index, : h + 1],
            self.events[index, :h],
            self.horizons[index],
            ids=[self.ids[i] for i in index],
        )

    def event_bearing(self) -> "TrajectoryDataset":
        """Drop trajectories with no event within their horizon."""
        keep = self.first_event_times > 0
        if not keep.any():
            raise NoEventError("no event-bearing trajectories")
        if keep.all():
            return self
        return self.subset(keep)

    def valid_states(self) -> np.ndarray:
        """All in-horizon states stacked into an (M, n) array."""
        steps = np.arange(self.states.shape[1])
        mask = steps[None, :] <= self.horizons[:, None]
        return self.states[mask]

    @cached_property
    def _grid_index(self) -> "GridIndex":
        return GridIndex(self, None)


def first_event_times(events: np.ndarray) -> np.ndarray:
    """Vectorized first-event time for an (N, H) flag array; 0 means no event."""
    events = np.asarray(events)
    hit = events.astype(bool)
    first = np.argmax(hit, axis=1) + 1
    return np.where(hit.any(axis=1), first, 0).astype(np.int64)


def evaluation_grid(ds: TrajectoryDataset) -> np.ndarray:
    """Deduplicated in-horizon states of every trajectory, lexicographically sorted.

    Pre-event states are a subset of these, so for n = 1 the grid holds every
    jump point of both reorganized CDFs.  For n > 1 it misses meet points of
    incomparable states and the maximum over it is only a lower bound.
    """
    if len(ds) < 1:
        raise ValueError("empty dataset")
    return ds._grid_index.grid


@dataclass
class GridIndex:
    """Per-coordinate integer ranks of every state and every query point.

    Comparing ranks is equivalent to comparing the underlying floats, and
    lets the dominance kernels work on small integers.
    """

    ds: TrajectoryDataset
    points: Optional[np.ndarray] = None
    grid: np.ndarray = field(init=False)
    state_ranks: np.ndarray = field(init=False)
    query_ranks: np.ndarray = field(init=False)
    sizes: tuple = field(init=False)

    def __post_init__(self):
        ds = self.ds
        dim = ds.dimension
        flat = ds.states.reshape(-1, dim)
        steps = np.arange(ds.states.shape[1])
        valid = (steps[None, :] <= ds.horizons[:, None]).ravel()
        n_valid = int(valid.sum())
        extra = None
        if self.points is not None:
            extra = _as_state_array(self.points, "points")
            if extra.shape[1] != dim:
                raise ValueError(
                    f"points have dimension {extra.shape[1]}, dataset has {dim}"
                )
        # padding keeps rank 0; it is never read
        state_ranks = np.zeros(flat.shape, dtype=np.int64)
        valid_ranks = np.empty((n_valid, dim), dtype=np.int64)
        query_ranks = None if extra is None else np.empty(extra.shape, dtype=np.int64)
        coords = []
        for d in range(dim):
            col = flat[valid, d]
            if extra is not None:
                col = np.concatenate([col, extra[:, d]])
            values, inverse = np.unique(col, return_inverse=True)
            inverse = inverse.ravel()
            valid_ranks[:, d] = inverse[:n_valid]
            if extra is not None:
                query_ranks[:, d] = inverse[n_valid:]
            coords.append(values)
        state_ranks[valid] = valid_ranks
        sizes = tuple(v.size for v in coords)
        if extra is None:
            query_ranks = _unique_rows(valid_ranks, sizes)
            grid = np.column_stack([coords[d][query_ranks[:, d]] for d in range(dim)])
        else:
            grid = extra
        grid.flags.writeable = False
        self.grid = grid
        self.state_ranks = state_ranks.reshape(ds.states.shape)
        self.query_ranks = query_ranks
        self.sizes = sizes


def _unique_rows(ranks: np.ndarray, sizes: tuple) -> np.ndarray:
    """Lexicographically sorted unique rows of a nonnegative integer array."""
    if ranks.shape[1] == 1:
        return np.unique(ranks[:, 0])[:, None]
    if np.prod([float(s) for s in sizes]) < 2.0 ** 62:
        key = np.zeros(ranks.shape[0], dtype=np.int64)
        for d, size in enumerate(sizes):
            key = key * size + ranks[:, d]
        key = np.unique(key)
        out = np.empty((key.size, len(sizes)), dtype=np.int64)
        for d in range(len(sizes) - 1, -1, -1):
            out[:, d] = key % sizes[d]
            key = key // sizes[d]
        return out
    return np.unique(ranks, axis=0)


def grid_index(ds: TrajectoryDataset, points=None) -> GridIndex:
    if points is None:
        return ds._grid_index
    return GridIndex(ds, points)
