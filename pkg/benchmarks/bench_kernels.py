"""Compiled kernels against the pure-Python fallback.

The fallback has to be chosen before the package is imported, so it runs in a
child interpreter with SPHEREPPW_DISABLE_NUMBA=1. Usage:

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys
import time

WORKLOADS = ("single_integration", "eigenvalue_shoot", "profile_pair")


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def measure(repeat: int) -> dict:
    import numpy as np

    from sphereppw import _accel
    from sphereppw.ball import lambda_shoot
    from sphereppw.profile import build_profile
    from sphereppw.radial import BallSpec, ModeParams, eval_um

    grid = np.linspace(0.01, 3.0, 400)
    mode = ModeParams(3, 1, 40.0)
    jobs = {
        "single_integration": lambda: eval_um(mode, grid),
        "eigenvalue_shoot": lambda: [lambda_shoot(BallSpec(n, 1.0), m)
                                     for n in (2, 4) for m in (0, 1)],
        "profile_pair": lambda: build_profile(BallSpec(3, 1.2), 201),
    }
    # first call compiles (or warms caches) and is not timed
    for job in jobs.values():
        job()
    return {"numba": _accel.NUMBA_ENABLED,
            "seconds": {name: _best(job, repeat) for name, job in jobs.items()}}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()
    if args.child:
        print(json.dumps(measure(args.repeat)))
        return

    env = dict(os.environ, SPHEREPPW_DISABLE_NUMBA="1")
    child = subprocess.run([sys.executable, __file__, "--child", "--repeat", str(args.repeat)],
                           env=env, capture_output=True, text=True, check=True)
    slow = json.loads(child.stdout)
    fast = measure(args.repeat)
    if slow["numba"] or not fast["numba"]:
        sys.exit("could not get one compiled and one fallback run")
    print(f"{'workload':<22}{'numba [s]':>12}{'python [s]':>12}{'speed-up':>10}")
    for name in WORKLOADS:
        a, b = fast["seconds"][name], slow["seconds"][name]
        print(f"{name:<22}{a:>12.4f}{b:>12.4f}{b / a:>9.0f}x")


if __name__ == "__main__":
    main()
