"""Time the compiled and pure-Python step loops on the same inputs.

    python benchmarks/bench_kernels.py --hours 24 --repeat 3
"""

import argparse
import timeit

import numpy as np

from freqreg.kernels import available_backends


def workloads(n, rng):
    x = rng.uniform(-1, 1, n)
    noise = rng.standard_normal(n)
    cmd = rng.uniform(-1.2, 1.2, n)
    return {
        "ema": lambda k: k.ema(x, 0.0222),
        "hysteresis": lambda k: k.hysteresis(x, 0.25, 0.10),
        "follow": lambda k: k.follow(cmd, 0.5, 0.5, 1.0, 0.9, 0.9, 1 / 900),
        "ou_walk": lambda k: k.ou_walk(noise, 1 / 900, 4.0, 0.894, 5.4),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--hours", type=int, default=24, help="signal length at 4-second steps")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    n = args.hours * 900
    backends = available_backends()
    jobs = workloads(n, np.random.default_rng(0))
    print(f"{n} steps, best of {args.repeat}")
    print(f"{'kernel':<12}" + "".join(f"{name:>12}" for name in backends) + "     speedup")
    for name, job in jobs.items():
        times = {b: min(timeit.repeat(lambda: job(mod), number=1, repeat=args.repeat)) for b, mod in backends.items()}
        row = f"{name:<12}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times.values())
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>11.1f}x"
        print(row)
    if "cython" not in backends:
        print("compiled extension not built; only the pure-Python backend was timed")


if __name__ == "__main__":
    main()
