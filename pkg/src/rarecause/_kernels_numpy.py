"""Pure-numpy kernels.  Vectorized over trajectories, looping over time.

Every function here has a twin with the same signature in
``_kernels_numba``; the two must agree bit-for-bit on single-link data and
to rounding on multi-link data (``exp`` may differ in the last ulp).
"""
import numpy as np

CONSTANT = 0
THRESHOLD = 1


def single_link(x0, mu0, mu1, u, w, noise_u, event_u, kind, p, p_low, p_high,
                threshold, burn_in):
    n_traj, horizon = event_u.shape
    states = np.empty((n_traj, horizon + 1))
    events = np.zeros((n_traj, horizon), dtype=np.int8)
    x = np.full(n_traj, float(x0))
    for k in range(burn_in):
        x = (1.0 - mu0) * x + mu0 * u + w * (2.0 * noise_u[:, k] - 1.0)
    states[:, 0] = x
    prev = np.zeros(n_traj, dtype=bool)
    for t in range(horizon):
        if kind == CONSTANT:
            prob = np.full(n_traj, p)
        else:
            prob = np.where(x >= threshold, p_high, p_low)
        hit = event_u[:, t] < prob
        events[:, t] = hit
        mu = np.where(prev, mu1, mu0)
        x = (1.0 - mu) * x + mu * u + w * (2.0 * noise_u[:, burn_in + t] - 1.0)
        states[:, t + 1] = x
        prev = hit
    return states, events, bool(np.all(np.isfinite(states)))


def _routing(x, u, beta):
    z = -beta * x
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True) * u


def multi_link(x0, mu0, mu1, u, beta, w, noise_u, event_u, kind, p, p_low,
               p_high, threshold, burn_in):
    n_traj, horizon = event_u.shape
    n_links = x0.shape[0]
    states = np.empty((n_traj, horizon + 1, n_links))
    events = np.zeros((n_traj, horizon), dtype=np.int8)
    x = np.tile(np.asarray(x0, dtype=np.float64), (n_traj, 1))
    for k in range(burn_in):
        x = (1.0 - mu0) * x + mu0 * _routing(x, u, beta) + w * (2.0 * noise_u[:, k] - 1.0)
    states[:, 0] = x
    prev = np.zeros(n_traj, dtype=bool)
    for t in range(horizon):
        if kind == CONSTANT:
            prob = np.full(n_traj, p)
        else:
            prob = np.where(x.max(axis=1) >= threshold, p_high, p_low)
        hit = event_u[:, t] < prob
        events[:, t] = hit
        mu = np.where(prev, mu1, mu0)[:, None]
        x = (1.0 - mu) * x + mu * _routing(x, u, beta) + w * (2.0 * noise_u[:, burn_in + t] - 1.0)
        states[:, t + 1] = x
        prev = hit
    return states, events, bool(np.all(np.isfinite(states)))


def dominance_brute(points, weights, queries):
    """``out[g] = sum(weights[p] for p with points[p] <= queries[g] in every coordinate)``."""
    out = np.zeros(queries.shape[0])
    if points.shape[0] == 0 or queries.shape[0] == 0:
        return out
    chunk = max(1, 2_000_000 // max(1, points.shape[0] * points.shape[1]))
    for start in range(0, queries.shape[0], chunk):
        q = queries[start:start + chunk]
        dom = np.all(points[None, :, :] <= q[:, None, :], axis=2)
        out[start:start + chunk] = dom @ weights
    return out


dominance_2d = None
