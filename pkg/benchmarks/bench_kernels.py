"""Compare the numba and numpy kernels on representative workloads.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import math
import time

import numpy as np

from bellforge import kernels
from bellforge._backend import HAVE_NUMBA
from bellforge.expr import canonicalize_symmetric
from bellforge.generators import hardy, upb_noqv
from bellforge.polytope import encode
from bellforge.quantum import PureState, coefficient_tensor, pauli_correlations, random_directions
from bellforge.transforms import homogenize


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def strategy_case(X, label):
    masks, patterns, coeffs, _, prob, nbits = encode(X)
    total = 1 << nbits

    def run(fn):
        return lambda: fn(0, total, masks, patterns, coeffs, prob)

    return f"strategies {label} ({total})", run(kernels.evaluate_strategies_nb), run(kernels.evaluate_strategies_np)


def seesaw_case(E, label, sweeps=50):
    C, cd = coefficient_tensor(E)
    T = pauli_correlations(PureState.gghz(E.n, math.pi / 4))
    U0 = random_directions(E.layout, np.random.default_rng(0))
    trace = np.zeros(0)

    def run(fn):
        return lambda: fn(C, cd, T, U0.copy(), 1.0, -math.inf, sweeps, trace)

    return f"see-saw {label} ({sweeps} sweeps)", run(kernels.seesaw_sweeps_nb), run(kernels.seesaw_sweeps_np)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    h5 = homogenize(canonicalize_symmetric(hardy(5)))
    cases = [
        strategy_case(homogenize(canonicalize_symmetric(hardy(4))), "hardy4 homogenized"),
        strategy_case(h5, "hardy5 homogenized"),
        strategy_case(upb_noqv(6), "upb6 events"),
        seesaw_case(homogenize(canonicalize_symmetric(hardy(3))), "hardy3 homogenized"),
        seesaw_case(homogenize(canonicalize_symmetric(hardy(4))), "hardy4 homogenized"),
        seesaw_case(h5, "hardy5 homogenized", sweeps=10),
    ]
    print(f"{'workload':45s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for label, nb, np_ in cases:
        nb()  # compile
        t_nb = best_of(nb, args.repeat)
        t_np = best_of(np_, args.repeat)
        print(f"{label:45s} {1e3 * t_nb:10.2f} {1e3 * t_np:10.2f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
