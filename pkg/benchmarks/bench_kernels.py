"""Compare the compiled and NumPy kernel backends.

Usage::

    python3 benchmarks/bench_kernels.py [--n 128] [--repeat 50]

Prints per-call timings for each kernel and backend plus the maximum
absolute difference between backends, then the cost of one solver step.
"""

import argparse
import time

import numpy as np

from mhd2d import kernels
from mhd2d.config import parse_config
from mhd2d.runner import build_initial_state
from mhd2d.solver import step


def _time(fn, repeat):
    fn()
    t0 = time.perf_counter()
    for _ in range(repeat):
        out = fn()
    return (time.perf_counter() - t0) / repeat, out


def _diff(a, b):
    if isinstance(a, tuple):
        return max(_diff(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=128)
    parser.add_argument("--repeat", type=int, default=50)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(0)
    n = args.n
    fields = rng.standard_normal((12, n, n))
    f, g, h = rng.standard_normal((3, n, n))
    ps = np.array([2.0, 4.0, 8.0, 16.0, 32.0, 64.0, np.inf])
    cases = {
        "nonlinear_terms": lambda m: m.nonlinear_terms(fields),
        "lp_norms": lambda m: m.lp_norms(f, ps, 1.0 / n**2),
        "abs_triple_sum": lambda m: m.abs_triple_sum(f, g, h),
    }
    found = kernels.backends()
    print(f"grid {n}x{n}, backends: {', '.join(found)} (active: {kernels.BACKEND})")
    print(f"{'kernel':<18}" + "".join(f"{b:>14}" for b in found) + f"{'speedup':>10}{'max diff':>12}")
    for name, fn in cases.items():
        times, outs = {}, {}
        for b, mod in found.items():
            times[b], outs[b] = _time(lambda: fn(mod), args.repeat)
        row = f"{name:<18}" + "".join(f"{times[b] * 1e3:>11.3f} ms" for b in found)
        if "cython" in found:
            row += f"{times['python'] / times['cython']:>9.1f}x"
            row += f"{_diff(outs['python'], outs['cython']):>12.2e}"
        print(row)

    cfg = parse_config(f"preset=magnetic_only\neta=0.1\nnx={n}\nny={n}\ndt=1e-3\nt_end=1")
    state = build_initial_state(cfg)
    dt, _ = _time(lambda: step(state, cfg.params, cfg.dt), max(1, args.repeat // 5))
    print(f"solver step ({kernels.BACKEND}): {dt * 1e3:.2f} ms")


if __name__ == "__main__":
    main()
