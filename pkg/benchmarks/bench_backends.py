"""Compare the numba and pure-numpy kernel backends.

Times the single-link and multi-link simulators and the weighted dominance
sum behind the sup-gap statistic.  Each case is run once to warm up (numba
compiles on first call) and then timed as the best of ``--repeat`` runs.

    python benchmarks/bench_backends.py --repeat 3
"""
import argparse
import time

import numpy as np

from rarecause import kernels
from rarecause.simulate import scenario_params, simulate


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        tic = time.perf_counter()
        fn()
        times.append(time.perf_counter() - tic)
    return min(times)


def cases(n_traj, n_points):
    rng = np.random.default_rng(0)
    single = scenario_params("single-link-H1")
    multi = scenario_params("multi-link-H1", R=3)
    yield "simulate single-link", lambda b: simulate(single, n_traj, seed=1, backend=b)
    yield "simulate multi-link R=3", lambda b: simulate(multi, n_traj, seed=1, backend=b)
    for dim in (1, 2, 3):
        pts = rng.integers(0, n_points // 4, size=(n_points, dim))
        qs = rng.integers(0, n_points // 4, size=(n_points, dim))
        w = rng.random(n_points)
        yield (f"dominance_sum n={dim} M=G={n_points}",
               lambda b, p=pts, q=qs, w=w: kernels.dominance_sum(p, w, q, backend=b))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n-traj", type=int, default=2000, help="trajectories per simulation")
    parser.add_argument("--n-points", type=int, default=20000, help="points for dominance_sum")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    # make sure the numba module is importable even if the env flag says numpy
    kernels.get_kernels("numba")
    print(f"{'case':38s} {'numba s':>9s} {'numpy s':>9s} {'speedup':>8s}")
    for name, fn in cases(args.n_traj, args.n_points):
        t_nb = best_of(lambda: fn("numba"), args.repeat)
        t_np = best_of(lambda: fn("numpy"), args.repeat)
        print(f"{name:38s} {t_nb:9.4f} {t_np:9.4f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
