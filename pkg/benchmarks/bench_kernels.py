"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--n 16384] [--repeat 200]

Reports per-call time of each pointwise kernel and of one full exact-system
Strang step, for every backend that is importable.
"""
import argparse
import timeit

import numpy as np

from shortpulse import kernels
from shortpulse.models import ExactKGStepper, KGState
from shortpulse.spectral import PeriodicGrid


def kernel_cases(backend, n, rng):
    f = rng.standard_normal(n)
    g = rng.standard_normal(n)
    u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    w = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    m = np.exp(1j * rng.standard_normal(n))
    F = rng.standard_normal(n // 2 + 1) + 1j * rng.standard_normal(n // 2 + 1)
    G = F.copy()
    th = rng.standard_normal(n // 2 + 1)
    c, a12, a21 = np.cos(th), 1j * np.sin(th), 1j * np.sin(th)
    out_f, out_g = np.empty_like(u), np.empty_like(u)
    return {
        "kg_rotate": lambda: backend.kg_rotate(f, g, 1e-3),
        "kg_linear": lambda: backend.kg_linear(F, G, c, a12, a21),
        "phase_rotate": lambda: backend.phase_rotate(u, 1e-3),
        "cmul": lambda: backend.cmul(u, m),
        "kg_envelope_cubic": lambda: backend.kg_envelope_cubic(u, w, 1.0, out_f, out_g),
    }


def full_step(backend_name, n):
    grid = PeriodicGrid(30 * np.pi, n)
    stepper = ExactKGStepper(grid, 0.01, 0.01, backend=backend_name)
    x = grid.x
    state = KGState(np.exp(-(x - 15) ** 2) * np.cos(x / 0.01),
                    np.exp(-(x - 15) ** 2) * np.sin(x / 0.01))
    arr = stepper.to_internal(state)

    def step():
        stepper.linear(arr, 0.005)
        stepper.nonlinear(arr, 0.01)
        stepper.linear(arr, 0.005)

    return step


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=16384)
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()

    names = ["python"]
    try:
        kernels.get_backend("cython")
        names.insert(0, "cython")
    except ImportError:
        print("compiled backend not available; timing the fallback only")

    rng = np.random.default_rng(1)
    results = {}
    for name in names:
        be = kernels.get_backend(name)
        cases = kernel_cases(be, args.n, rng)
        cases["exact strang step"] = full_step(name, args.n)
        for label, fn in cases.items():
            t = min(timeit.repeat(fn, number=args.repeat, repeat=3)) / args.repeat
            results[(name, label)] = t

    labels = list(dict.fromkeys(label for _, label in results))
    print(f"N = {args.n}, times in microseconds per call")
    print(f"{'kernel':<20}" + "".join(f"{n:>12}" for n in names)
          + ("     speedup" if len(names) == 2 else ""))
    for label in labels:
        row = [results[(n, label)] * 1e6 for n in names]
        line = f"{label:<20}" + "".join(f"{t:12.1f}" for t in row)
        if len(names) == 2:
            line += f"{row[1] / row[0]:11.2f}x"
        print(line)


if __name__ == "__main__":
    main()
