"""Synthetic single-link and parallel-link traffic datasets.

Single link::

    x[t+1] = (1 - mu(A[t])) x[t] + mu(A[t]) u + w[t],   A[t+1] ~ Bernoulli(p(x[t]))

Parallel links route the total inflow by a softmax of ``-beta * x``.  Noise
is uniform on ``(-w, w)``, drawn independently per link.

Trajectory ``i`` draws from ``numpy.random.default_rng([seed, i])``: a fixed
block of noise uniforms followed by a block of event uniforms.  Datasets are
therefore identical under either kernel backend, and dropping trajectory
``j`` leaves every other trajectory unchanged.

Trajectories start from ``x0`` (default: the noise-free fixed point) and run
``burn_in`` event-free steps before ``X_0`` is recorded, so ``X_0`` follows
the stationary law rather than sitting on a single value.  Dynamics continue
after an event; first-event truncation happens downstream.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

import numpy as np

from . import kernels
from .core import TrajectoryDataset

ANY_COORDINATE = "any-coordinate"
MAX_COORDINATE = "max-coordinate"

SCENARIOS = ("single-link-H0", "single-link-H1", "multi-link-H0", "multi-link-H1")


@dataclass(frozen=True)
class EventModel:
    """Per-step event probability as a function of the current state.

    ``constant``: probability ``p``.  ``threshold``: ``p_high`` when the
    state reaches ``threshold`` and ``p_low`` below it.  For vector states
    ``any-coordinate`` and ``max-coordinate`` both fire when some link is at
    or above the threshold (the two conditions coincide).
    """

    kind: str = "constant"
    p: float = 0.01
    p_low: float = 0.01
    p_high: float = 0.10
    threshold: float = 109.0
    aggregator: str = ANY_COORDINATE

    def __post_init__(self):
        if self.kind not in ("constant", "threshold"):
            raise ValueError(f"unknown event model kind {self.kind!r}")
        if self.aggregator not in (ANY_COORDINATE, MAX_COORDINATE):
            raise ValueError(f"unknown aggregator {self.aggregator!r}")
        probs = (self.p,) if self.kind == "constant" else (self.p_low, self.p_high)
        for q in probs:
            if not 0.0 <= q < 1.0:
                raise ValueError("event probabilities must lie in [0, 1)")
        if not math.isfinite(self.threshold):
            raise ValueError("threshold must be finite")

    @classmethod
    def constant(cls, p: float) -> "EventModel":
        return cls(kind="constant", p=p)

    @classmethod
    def thresholded(cls, p_low: float, p_high: float, threshold: float,
                    aggregator: str = ANY_COORDINATE) -> "EventModel":
        return cls(kind="threshold", p_low=p_low, p_high=p_high,
                   threshold=threshold, aggregator=aggregator)

    def _kernel_args(self):
        kind = kernels.CONSTANT if self.kind == "constant" else kernels.THRESHOLD
        return kind, float(self.p), float(self.p_low), float(self.p_high), float(self.threshold)


def _check_common(mu0, mu1, w, horizon, burn_in):
    if not (0.0 < mu0 < 1.0 and 0.0 < mu1 < 1.0):
        raise ValueError("mu0 and mu1 must lie in (0, 1)")
    if w < 0:
        raise ValueError("noise_half_width must be nonnegative")
    if horizon < 1:
        raise ValueError("horizon must be positive")
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")


@dataclass(frozen=True)
class SingleLinkParams:
    horizon: int = 500
    mu0: float = 0.3
    mu1: float = 0.2
    u: float = 100.0
    noise_half_width: float = 10.0
    x0: Optional[float] = None
    burn_in: int = 50
    event_model: EventModel = field(default_factory=lambda: EventModel.constant(0.01))

    def __post_init__(self):
        _check_common(self.mu0, self.mu1, self.noise_half_width, self.horizon, self.burn_in)

    @property
    def start(self) -> float:
        return float(self.u if self.x0 is None else self.x0)


@dataclass(frozen=True)
class MultiLinkParams:
    R: int = 2
    horizon: int = 250
    mu0: float = 0.3
    mu1: float = 0.2
    u: Optional[float] = None
    softmax_beta: float = 0.01
    noise_half_width: float = 10.0
    x0: Optional[tuple] = None
    burn_in: int = 50
    event_model: EventModel = field(
        default_factory=lambda: EventModel.thresholded(0.02, 0.30, 105.0)
    )

    def __post_init__(self):
        if self.R < 2:
            raise ValueError("R must be at least 2")
        if not self.softmax_beta > 0:
            raise ValueError("softmax_beta must be positive")
        _check_common(self.mu0, self.mu1, self.noise_half_width, self.horizon, self.burn_in)
        if self.x0 is not None and len(self.x0) != self.R:
            raise ValueError("x0 needs one entry per link")

    @property
    def inflow(self) -> float:
        return float(100.0 * self.R if self.u is None else self.u)

    @property
    def start(self) -> np.ndarray:
        if self.x0 is None:
            return np.full(self.R, self.inflow / self.R)
        return np.asarray(self.x0, dtype=np.float64)


def scenario_params(scenario: str, R: int = 2):
    """Parameters used for the named experiment scenario."""
    if scenario == "single-link-H0":
        return SingleLinkParams(event_model=EventModel.constant(0.01))
    if scenario == "single-link-H1":
        return SingleLinkParams(event_model=EventModel.thresholded(0.01, 0.10, 109.0))
    if scenario == "multi-link-H0":
        return MultiLinkParams(R=R, event_model=EventModel.constant(0.02))
    if scenario == "multi-link-H1":
        return MultiLinkParams(R=R, event_model=EventModel.thresholded(0.02, 0.30, 105.0))
    raise ValueError(f"unknown scenario {scenario!r}")


_EVENT_KEYS = {"event_kind": "kind", "p": "p", "p_low": "p_low", "p_high": "p_high",
               "threshold": "threshold", "aggregator": "aggregator"}


def params_from_mapping(base, values: dict):
    """Override fields of ``base`` from a flat ``{key: str-or-value}`` mapping.

    Event-model fields are addressed as ``event_kind``, ``p``, ``p_low``,
    ``p_high``, ``threshold`` and ``aggregator``.  Unknown keys raise.
    """
    top = {f.name: f for f in fields(base) if f.name != "event_model"}
    direct, event = {}, {}
    for key, raw in values.items():
        if raw is None:
            continue
        if key in _EVENT_KEYS:
            event[_EVENT_KEYS[key]] = raw
        elif key in top:
            direct[key] = raw
        else:
            raise ValueError(f"unknown simulation parameter {key!r}")
    conv = {}
    for key, raw in direct.items():
        if key in ("horizon", "burn_in", "R"):
            conv[key] = int(raw)
        elif key == "x0":
            if isinstance(raw, str):
                parts = [float(v) for v in raw.replace(",", " ").split()]
            else:
                parts = list(np.atleast_1d(raw).astype(float))
            conv[key] = parts[0] if isinstance(base, SingleLinkParams) else tuple(parts)
        else:
            conv[key] = float(raw)
    if event:
        em = asdict(base.event_model)
        for key, raw in event.items():
            em[key] = raw if key in ("kind", "aggregator") else float(raw)
        conv["event_model"] = EventModel(**em)
    return replace(base, **conv)


def _draws(seed, start, n_traj, noise_steps, horizon, n_links):
    noise = np.empty((n_traj, noise_steps, n_links))
    events = np.empty((n_traj, horizon))
    for k in range(n_traj):
        rng = np.random.default_rng([seed, start + k])
        noise[k] = rng.random((noise_steps, n_links))
        events[k] = rng.random(horizon)
    return noise, events


def _check_n(N):
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")


def simulate_single_link(params: SingleLinkParams, N: int, seed: int, start: int = 0,
                         backend: Optional[str] = None) -> TrajectoryDataset:
    """``N`` single-link trajectories; trajectory ``k`` uses stream ``(seed, start + k)``."""
    _check_n(N)
    H, B = params.horizon, params.burn_in
    noise, event_u = _draws(seed, start, N, B + H, H, 1)
    kind, p, p_low, p_high, thr = params.event_model._kernel_args()
    states, events, ok = kernels.single_link(
        params.start, params.mu0, params.mu1, float(params.u), float(params.noise_half_width),
        np.ascontiguousarray(noise[:, :, 0]), event_u, kind, p, p_low, p_high, thr, B,
        backend=backend,
    )
    if not ok:
        raise FloatingPointError("simulation produced non-finite states")
    return TrajectoryDataset(states[:, :, None], events, ids=[str(start + k) for k in range(N)])


def simulate_multi_link(params: MultiLinkParams, N: int, seed: int, start: int = 0,
                        backend: Optional[str] = None) -> TrajectoryDataset:
    """``N`` parallel-link trajectories of dimension ``R`` under softmax routing."""
    _check_n(N)
    H, B = params.horizon, params.burn_in
    noise, event_u = _draws(seed, start, N, B + H, H, params.R)
    kind, p, p_low, p_high, thr = params.event_model._kernel_args()
    states, events, ok = kernels.multi_link(
        params.start, params.mu0, params.mu1, params.inflow, float(params.softmax_beta),
        float(params.noise_half_width), noise, event_u, kind, p, p_low, p_high, thr, B,
        backend=backend,
    )
    if not ok:
        raise FloatingPointError("simulation produced non-finite states")
    return TrajectoryDataset(states, events, ids=[str(start + k) for k in range(N)])


def simulate(params, N: int, seed: int, start: int = 0, backend: Optional[str] = None):
    if isinstance(params, MultiLinkParams):
        return simulate_multi_link(params, N, seed, start, backend)
    return simulate_single_link(params, N, seed, start, backend)


def simulate_scenario(scenario: str, N: int, seed: int, R: int = 2) -> TrajectoryDataset:
    return simulate(scenario_params(scenario, R), N, seed)
