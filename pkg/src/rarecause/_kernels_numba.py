"""numba-compiled twins of ``_kernels_numpy``."""
import numpy as np
from numba import njit

CONSTANT = 0
THRESHOLD = 1


@njit(cache=True, nogil=True)
def single_link(x0, mu0, mu1, u, w, noise_u, event_u, kind, p, p_low, p_high,
                threshold, burn_in):
    n_traj, horizon = event_u.shape
    states = np.empty((n_traj, horizon + 1))
    events = np.zeros((n_traj, horizon), dtype=np.int8)
    ok = True
    for i in range(n_traj):
        x = x0
        for k in range(burn_in):
            x = (1.0 - mu0) * x + mu0 * u + w * (2.0 * noise_u[i, k] - 1.0)
        states[i, 0] = x
        prev = False
        for t in range(horizon):
            if kind == CONSTANT:
                prob = p
            elif x >= threshold:
                prob = p_high
            else:
                prob = p_low
            hit = event_u[i, t] < prob
            events[i, t] = hit
            mu = mu1 if prev else mu0
            x = (1.0 - mu) * x + mu * u + w * (2.0 * noise_u[i, burn_in + t] - 1.0)
            states[i, t + 1] = x
            if not np.isfinite(x):
                ok = False
            prev = hit
    return states, events, ok


@njit(cache=True, nogil=True)
def _step_links(x, out, mu, u, beta, w, noise_row):
    n_links = x.shape[0]
    zmax = -beta * x[0]
    for j in range(1, n_links):
        z = -beta * x[j]
        if z > zmax:
            zmax = z
    total = 0.0
    e = np.empty(n_links)
    for j in range(n_links):
        e[j] = np.exp(-beta * x[j] - zmax)
        total += e[j]
    for j in range(n_links):
        out[j] = (1.0 - mu) * x[j] + mu * (e[j] / total * u) + w * (2.0 * noise_row[j] - 1.0)


@njit(cache=True, nogil=True)
def multi_link(x0, mu0, mu1, u, beta, w, noise_u, event_u, kind, p, p_low,
               p_high, threshold, burn_in):
    n_traj, horizon = event_u.shape
    n_links = x0.shape[0]
    states = np.empty((n_traj, horizon + 1, n_links))
    events = np.zeros((n_traj, horizon), dtype=np.int8)
    x = np.empty(n_links)
    nxt = np.empty(n_links)
    ok = True
    for i in range(n_traj):
        x[:] = x0
        for k in range(burn_in):
            _step_links(x, nxt, mu0, u, beta, w, noise_u[i, k])
            x[:] = nxt
        states[i, 0] = x
        prev = False
        for t in range(horizon):
            if kind == CONSTANT:
                prob = p
            elif x.max() >= threshold:
                prob = p_high
            else:
                prob = p_low
            hit = event_u[i, t] < prob
            events[i, t] = hit
            mu = mu1 if prev else mu0
            _step_links(x, nxt, mu, u, beta, w, noise_u[i, burn_in + t])
            x[:] = nxt
            states[i, t + 1] = x
            for j in range(n_links):
                if not np.isfinite(x[j]):
                    ok = False
            prev = hit
    return states, events, ok


@njit(cache=True, nogil=True)
def dominance_brute(points, weights, queries):
    n_q = queries.shape[0]
    n_p, dim = points.shape
    out = np.zeros(n_q)
    for g in range(n_q):
        acc = 0.0
        for p in range(n_p):
            inside = True
            for d in range(dim):
                if points[p, d] > queries[g, d]:
                    inside = False
                    break
            if inside:
                acc += weights[p]
        out[g] = acc
    return out


@njit(cache=True, nogil=True)
def dominance_2d(points, weights, queries, size1):
    """Sweep on coordinate 0 with a Fenwick tree over coordinate 1.

    Ranks in coordinate 1 must lie in ``[0, size1)``.
    """
    n_p = points.shape[0]
    n_q = queries.shape[0]
    p_order = np.argsort(points[:, 0], kind="mergesort")
    q_order = np.argsort(queries[:, 0], kind="mergesort")
    tree = np.zeros(size1 + 1)
    out = np.zeros(n_q)
    j = 0
    for qi in range(n_q):
        g = q_order[qi]
        bound = queries[g, 0]
        while j < n_p and points[p_order[j], 0] <= bound:
            p = p_order[j]
            k = points[p, 1] + 1
            while k <= size1:
                tree[k] += weights[p]
                k += k & (-k)
            j += 1
        k = queries[g, 1] + 1
        acc = 0.0
        while k > 0:
            acc += tree[k]
            k -= k & (-k)
        out[g] = acc
    return out
