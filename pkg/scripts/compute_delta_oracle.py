"""Large-N reference value of the sup-gap under the single-link H1 model.

Independent of the package: its own vectorized simulator (one RNG stream per
chunk) and fixed-bin histograms for every CDF, so nothing here shares code
with ``rarecause.estimators``.  The value is written to
``tests/fixtures/delta_oracle.json`` and read by the acceptance suite.

    python3 scripts/compute_delta_oracle.py --n 1000000 --seed 20240601
"""
import argparse
import json
import time
from pathlib import Path

import numpy as np

H = 500
MU0, MU1, U, W = 0.3, 0.2, 100.0, 10.0
P_LOW, P_HIGH, THRESHOLD = 0.01, 0.10, 109.0
BURN_IN = 50

EDGES = np.linspace(40.0, 160.0, 24001)


def simulate_chunk(rng, n):
    """States (n, H+1) and first event time (0 if none), burn-in from x = u."""
    x = np.full(n, U)
    for _ in range(BURN_IN):
        x = (1 - MU0) * x + MU0 * U + W * rng.uniform(-1.0, 1.0, n)
    states = np.empty((n, H + 1))
    states[:, 0] = x
    first = np.zeros(n, dtype=np.int64)
    prev = np.zeros(n, dtype=bool)
    for t in range(1, H + 1):
        p = np.where(x >= THRESHOLD, P_HIGH, P_LOW)
        hit = rng.uniform(0.0, 1.0, n) < p
        first[(first == 0) & hit] = t
        mu = np.where(prev, MU1, MU0)
        x = (1 - mu) * x + mu * U + W * rng.uniform(-1.0, 1.0, n)
        states[:, t] = x
        prev = hit
    return states, first


def bin_of(values):
    # bin k counts values with EDGES[k-1] < v <= EDGES[k]; cumsum gives #{v <= EDGES[k]}
    return np.minimum(np.searchsorted(EDGES, values, side="left"), EDGES.size - 1)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--chunk", type=int, default=50_000)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1]
                                          / "tests" / "fixtures" / "delta_oracle.json"))
    args = ap.parse_args()

    G = EDGES.size
    pre_hist = np.zeros(G)
    beta_hist = np.zeros((H, G))
    at_risk = np.zeros(H)
    first_at = np.zeros(H)
    n_bearing = 0
    tic = time.time()
    done = 0
    chunk_id = 0
    while done < args.n:
        n = min(args.chunk, args.n - done)
        rng = np.random.default_rng([args.seed, chunk_id])
        states, first = simulate_chunk(rng, n)
        keep = first > 0
        states, first = states[keep], first[keep]
        n_bearing += first.size
        rows = np.arange(first.size)
        pre_hist += np.bincount(bin_of(states[rows, first - 1]), minlength=G)
        for t in range(1, H + 1):
            risk = first >= t
            k = np.count_nonzero(risk)
            if k == 0:
                break
            at_risk[t - 1] += k
            first_at[t - 1] += np.count_nonzero(first == t)
            beta_hist[t - 1] += np.bincount(bin_of(states[risk, t - 1]), minlength=G)
        done += n
        chunk_id += 1
        print(f"{done}/{args.n} trajectories, {time.time() - tic:.0f}s", flush=True)

    gamma = np.divide(first_at, at_risk, out=np.zeros(H), where=at_risk > 0)
    b1 = np.cumsum(pre_hist) / n_bearing
    b2 = (np.cumsum(beta_hist, axis=1) / n_bearing * gamma[:, None]).sum(axis=0)
    gap = np.abs(b1 - b2)
    k = int(np.argmax(gap))
    result = {
        "delta_hat": float(gap[k]),
        "argmax_x": float(EDGES[k]),
        "n_simulated": args.n,
        "n_event_bearing": int(n_bearing),
        "seed": args.seed,
        "scenario": "single-link-H1",
        "grid": "uniform 40..160 step 0.005",
        "generator": "scripts/compute_delta_oracle.py",
    }
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(json.dumps(result, indent=2) + "\n")
    print(json.dumps(result, indent=2))


if __name__ == "__main__":
    main()
