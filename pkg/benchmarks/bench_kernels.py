"""Time the compiled and numpy kernel backends on representative problem sizes.

    python benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from parafocus import DonutBeam, FocusedBeam, MirrorGeometry, QuadratureSpec, angular_domain, kernels
from parafocus.coupling import gaussian_kernel


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def _debye_case(n_points, quad):
    geom = MirrorGeometry()
    system = FocusedBeam(geom, DonutBeam(waist=4.7584), domain=angular_domain(geom), quad=quad)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-400.0, 400.0, (n_points, 3))
    return system, pts


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    backends = ["python"]
    try:
        from parafocus import _debye  # noqa: F401

        backends.append("cython")
    except ImportError:
        print("compiled extension not built; timing the numpy backend only")

    cases = []
    for n_points, quad in ((200, QuadratureSpec(256, 128)), (1000, QuadratureSpec(512, 256))):
        system, pts = _debye_case(n_points, quad)
        label = f"debye_sum {n_points} pts x {system._coef.size} nodes"
        cases.append((label, lambda b, s=system, p=pts: kernels.debye_sum(p, s._kvec, s._coef, s._pol, backend=b)))

    rng = np.random.default_rng(1)
    values = rng.random((400, 2001))
    kern = gaussian_kernel(49.0, 2.0)
    label = f"gaussian_convolve_1d 400 rows x 2001 (kernel {kern.size})"
    cases.append((label, lambda b: [kernels.gaussian_convolve_1d(r, kern, backend=b) for r in values]))

    width = max(len(c[0]) for c in cases)
    print(f"{'case'.ljust(width)}  " + "  ".join(f"{b:>10}" for b in backends) + "  speedup")
    for label, fn in cases:
        times = [_best(lambda: fn(b), args.repeat) for b in backends]
        speed = f"{times[0] / times[1]:7.2f}x" if len(times) == 2 else "      -"
        print(f"{label.ljust(width)}  " + "  ".join(f"{t:9.4f}s" for t in times) + f"  {speed}")


if __name__ == "__main__":
    main()
