"""Time the compiled kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py``.  Both backends are checked
for agreement before timing.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from cavitrap.kernels import compiled_backend, python_backend


def cases():
    x = np.linspace(-6.0, 6.0, 4000)
    nodes, weights = np.polynomial.hermite.hermgauss(64)
    k0 = np.linspace(4.0e6, 4.1e6, 2000)
    n = np.array([1.0, 1.0, 3.48, 1.0, 1.0], dtype=complex)
    d = np.array([0.0, 0.0175, 110e-9, 0.0175, 0.0])
    mr = np.array([0.95, 0.0, 0.0, 0.95], dtype=complex)
    mt = np.array([0.3j, 1.0, 1.0, 0.3j], dtype=complex)
    return {
        "hermite_table": (lambda b: b.hermite_table(20, x)),
        "gh_overlap": (lambda b: b.gh_overlap(6, 7, 1.0, 1.1, 0.8, nodes, weights)),
        "stack_matrices": (lambda b: b.stack_matrices(k0, n, d, mr, mt)),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--number", type=int, default=20)
    args = p.parse_args(argv)
    if compiled_backend is None:
        print("compiled extension not available; only the fallback is timed")
    print(f"{'kernel':<16}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}")
    for name, call in cases().items():
        ref = np.asarray(call(python_backend))
        t_py = min(timeit.repeat(lambda: call(python_backend), repeat=args.repeat,
                                 number=args.number)) / args.number
        if compiled_backend is None:
            print(f"{name:<16}{t_py * 1e3:>14.3f}{'-':>14}{'-':>10}")
            continue
        out = np.asarray(call(compiled_backend))
        err = np.max(np.abs(out - ref)) / max(np.max(np.abs(ref)), 1e-300)
        if err > 1e-10:
            raise SystemExit(f"{name}: backends disagree (relative error {err:.2e})")
        t_c = min(timeit.repeat(lambda: call(compiled_backend), repeat=args.repeat,
                                number=args.number)) / args.number
        print(f"{name:<16}{t_py * 1e3:>14.3f}{t_c * 1e3:>14.3f}{t_py / t_c:>10.1f}")


if __name__ == "__main__":
    main()
