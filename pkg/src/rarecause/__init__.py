"""Test whether system state drives the first occurrence of a rare event.

Compares the CDF of the state just before the first event with a
hazard-weighted CDF built from the whole dataset.  The two agree when event
timing does not depend on state.
"""
from .core import (
    GridIndex,
    NoEventError,
    Trajectory,
    TrajectoryDataset,
    componentwise_leq,
    evaluation_grid,
    first_event_time,
    grid_index,
    pre_event_state,
)
from .estimators import (
    EmpiricalCdf,
    HazardSequence,
    TestStatistic,
    estimate_b1,
    estimate_b2,
    estimate_beta_t,
    estimate_gammas,
    reorganized_cdfs,
    sup_gap,
)
from .hypothesis_test import (
    BaselineReport,
    EmptyConditionalSample,
    TestReport,
    baseline_cdfs,
    baseline_sup_gap,
    dkw_threshold,
    monte_carlo_null_threshold,
    null_statistics,
    run_test,
)
from .simulate import (
    EventModel,
    MultiLinkParams,
    SingleLinkParams,
    scenario_params,
    simulate,
    simulate_multi_link,
    simulate_scenario,
    simulate_single_link,
)

__version__ = "0.1.0"
