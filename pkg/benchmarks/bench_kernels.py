"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py --repeat 3
"""

import argparse
import time

import numpy as np

from tsvf._backend import available_backends
from tsvf.hilbert import random_hermitian
from tsvf.measure import GaussianPointer, _pack_schedule, weak_pointer_amplitudes
from tsvf.scenarios import three_box
from tsvf.twostate import _check_schedule


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(trials, draws):
    box = three_box(1)
    steps = _check_schedule(3, box.schedule_entries([("P_A", "identity"), ("X", "identity")]))
    projs, nproj, unit = _pack_schedule(3, steps)
    mix = weak_pointer_amplitudes(box.tsv(), box.observables["P_C"], GaussianPointer(10.0))
    mats = [random_hermitian(d, np.random.default_rng(d)).matrix for d in (4, 8, 16)]
    return {
        "jacobi_eigh dim 4/8/16 x50": lambda k: [k.jacobi_eigh(m) for m in mats for _ in range(50)],
        f"simulate_strong {trials} trials": lambda k: k.simulate_strong(
            box.pre.amps, projs, nproj, unit, box.post.amps, True, 1, trials, 0
        ),
        f"sample_mixture {trials}x{draws}": lambda k: k.sample_mixture(
            mix.coefficients, mix.centers, mix.sigma, 1, 0, trials, draws
        ),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--draws", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = available_backends()
    names = sorted(backends)
    print(f"{'kernel':36s}" + "".join(f"{n:>12s}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for label, fn in cases(args.trials, args.draws).items():
        t = {n: best_of(lambda: fn(backends[n]), args.repeat) for n in names}
        row = f"{label:36s}" + "".join(f"{t[n]:11.4f}s" for n in names)
        if "cython" in t and "python" in t:
            row += f"{t['python'] / t['cython']:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
