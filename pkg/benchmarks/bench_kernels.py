"""Compare the compiled and pure-Python kernels on the two hot paths.

    python benchmarks/bench_kernels.py [--repeat 3] [--size 64]

Reports the best wall time of ``all_betti`` (every lower link at one time)
and of the crossing sweep on a random family, per backend.
"""
import argparse
import time

import numpy as np

from plcerf import kernels
from plcerf.family import TimeVaryingField, detect_crossings, enforce_genericity
from plcerf.mesh import GridSpec, grid_complex


def best_of(fn, repeat):
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return min(out)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--size", type=int, default=64, help="2D grid side; 3D uses size // 4")
    ap.add_argument("--timesteps", type=int, default=6)
    args = ap.parse_args()

    names = ["python"]
    try:
        kernels.backend("cython")
        names.append("cython")
    except ImportError:
        print("compiled kernels not built; timing the Python fallback only")

    rng = np.random.default_rng(0)
    n3 = max(3, args.size // 4)
    cases = [("2D", (args.size, args.size)), ("3D", (n3, n3, n3))]
    print(f"{'case':<4} {'kernel':<9} {'backend':<8} {'time [s]':>10} {'speed-up':>9}")
    for label, dims in cases:
        c = grid_complex(GridSpec(dims, (True,) * len(dims)))
        table = c.link_table
        f = TimeVaryingField(c, rng.standard_normal((c.vertex_count, args.timesteps)))
        ev = enforce_genericity(detect_crossings(f))
        ub0 = table.orientation(f.values[:, 0])
        timings = {}
        for name in names:
            impl = kernels.backend(name)
            timings["all_betti", name] = best_of(
                lambda: kernels.all_betti(table, ub0, c, impl), args.repeat)

            def run_sweep():
                ub = ub0.copy()
                betti = kernels.all_betti(table, ub, c, impl)
                kernels.sweep(table, ub, betti, ev.edge, c, impl)

            timings["sweep", name] = best_of(run_sweep, args.repeat)
        for kernel in ("all_betti", "sweep"):
            base = timings[kernel, "python"]
            for name in names:
                t = timings[kernel, name]
                print(f"{label:<4} {kernel:<9} {name:<8} {t:>10.4f} {base / t:>8.1f}x")
        print(f"     ({c.vertex_count} vertices, {len(ev)} crossings)")


if __name__ == "__main__":
    main()
