import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

import oracle
from rarecause import (
    NoEventError,
    Trajectory,
    TrajectoryDataset,
    componentwise_leq,
    evaluation_grid,
    first_event_time,
    pre_event_state,
)
from rarecause.core import first_event_times


def traj(states, events):
    return Trajectory(np.asarray(states, dtype=float), np.asarray(events))


class TestFirstEventTime:
    @pytest.mark.parametrize("events,expected", [
        ((1, 0, 0), 1),
        ((0, 0, 1), 3),
        ((0, 0, 0), None),
    ])
    def test_examples(self, events, expected):
        assert first_event_time(traj(np.zeros(4), events)) == expected

    @settings(max_examples=500, deadline=None)
    @given(st.lists(st.integers(0, 1), min_size=1, max_size=30))
    def test_matches_brute_force(self, flags):
        tr = traj(np.zeros(len(flags) + 1), flags)
        t = first_event_time(tr)
        assert t == oracle.first_time(flags)
        assert first_event_time(tr) == t
        if t is not None:
            assert not any(flags[: t - 1]) and flags[t - 1] == 1

    def test_ten_thousand_sequences(self):
        rng = np.random.default_rng(0)
        for _ in range(10_000):
            h = int(rng.integers(1, 30))
            flags = (rng.random(h) < rng.random() * 0.3).astype(int).tolist()
            tr = traj(np.zeros(h + 1), flags)
            assert first_event_time(tr) == oracle.first_time(flags)

    @given(hnp.arrays(np.int8, st.tuples(st.integers(1, 20), st.integers(1, 20)),
                      elements=st.integers(0, 1)))
    def test_vectorized_agrees(self, events):
        got = first_event_times(events)
        want = [oracle.first_time(row) or 0 for row in events]
        assert got.tolist() == want


class TestPreEventState:
    def test_examples(self):
        assert pre_event_state(traj([5, 7, 9], [0, 1])).tolist() == [7.0]
        assert pre_event_state(traj([5, 7], [1])).tolist() == [5.0]

    def test_no_event_raises(self):
        with pytest.raises(NoEventError, match="no event on trajectory"):
            pre_event_state(traj([5, 7, 9], [0, 0]))


class TestComponentwiseLeq:
    @pytest.mark.parametrize("x,y,expected", [
        ((1, 2), (1, 3), True),
        ((1, 4), (2, 3), False),
        ((2,), (2,), True),
    ])
    def test_examples(self, x, y, expected):
        assert componentwise_leq(x, y) is expected

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            componentwise_leq((1, 2), (1, 2, 3))

    vec = hnp.arrays(np.float64, 3, elements=st.integers(-3, 3).map(float))

    @given(vec, vec, vec)
    def test_partial_order(self, x, y, z):
        assert componentwise_leq(x, x)
        if componentwise_leq(x, y) and componentwise_leq(y, x):
            assert np.array_equal(x, y)
        if componentwise_leq(x, y) and componentwise_leq(y, z):
            assert componentwise_leq(x, z)


class TestTrajectory:
    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            traj([1, 2], [0, 1])

    def test_non_binary_events(self):
        with pytest.raises(ValueError):
            traj([1, 2, 3], [0, 2])

    def test_non_finite_state(self):
        with pytest.raises(ValueError):
            traj([1, np.nan], [0])

    def test_immutable(self):
        tr = traj([1, 2], [0])
        with pytest.raises(ValueError):
            tr.states[0, 0] = 5.0


class TestDataset:
    def test_round_trip_trajectories(self):
        trs = [traj([1, 2, 3], [0, 1]), traj([4, 5], [0])]
        ds = TrajectoryDataset.from_trajectories(trs)
        assert ds.trajectories == trs
        assert ds.horizons.tolist() == [2, 1]
        assert not ds.common_horizon
        assert ds.first_event_times.tolist() == [2, 0]

    def test_mixed_dimension_rejected(self):
        with pytest.raises(ValueError):
            TrajectoryDataset.from_trajectories([traj([1, 2], [0]), traj([[1, 2], [3, 4]], [0])])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            TrajectoryDataset.from_trajectories([])

    def test_padding_is_zeroed(self):
        states = np.full((2, 3, 1), 7.0)
        ds = TrajectoryDataset(states, np.ones((2, 2)), horizons=[2, 1])
        assert ds.states[1, 2, 0] == 0.0
        assert ds.events[1].tolist() == [1, 0]

    def test_event_bearing_filter(self):
        ds = TrajectoryDataset.from_trajectories([traj([1, 2], [0]), traj([3, 4], [1])])
        kept = ds.event_bearing()
        assert len(kept) == 1 and kept.ids == ["1"]
        with pytest.raises(NoEventError, match="no event-bearing trajectories"):
            ds.subset([0]).event_bearing()

    def test_pre_event_states(self, two_traj):
        assert two_traj.pre_event_states.ravel().tolist() == [2.0, 3.0]


class TestEvaluationGrid:
    def test_examples(self):
        ds = TrajectoryDataset.from_trajectories([traj([1, 2], [1])])
        assert evaluation_grid(ds).ravel().tolist() == [1.0, 2.0]
        ds = TrajectoryDataset.from_trajectories([traj([1, 3], [0]), traj([3, 5], [1])])
        assert evaluation_grid(ds).ravel().tolist() == [1.0, 3.0, 5.0]
        ds = TrajectoryDataset.from_trajectories([traj([[1, 2], [2, 1]], [1])])
        assert evaluation_grid(ds).tolist() == [[1.0, 2.0], [2.0, 1.0]]

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.booleans())
    def test_matches_set_union(self, seed, dim, ragged):
        rng = np.random.default_rng(seed)
        ds = oracle.random_dataset(rng, 6, 5, dim, levels=4, ragged=ragged)
        got = [tuple(row) for row in evaluation_grid(ds).tolist()]
        assert got == oracle.grid(ds)
        pre = {tuple(p) for p in ds.pre_event_states.tolist()}
        assert pre <= set(got)
