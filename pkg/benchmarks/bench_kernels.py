"""Time the path kernels on both backends and check that they agree.

    python3 benchmarks/bench_kernels.py [--paths N] [--steps M]

Noise generation is timed separately since both backends share it.
"""

import argparse
import time

import numpy as np

from levy_neumann import (Ball, CompoundPoisson, Interval, LevyDriverSpec, ScalarField,
                          SdeCoefficients, StablePart)
from levy_neumann._kernels import run_batch
from levy_neumann._vectorized import run_batch_numpy
from levy_neumann.functionals import gauss_legendre
from levy_neumann.sde import _kernel_args, sample_batch

CASES = {
    "1d-brownian": (Interval(0.0, 1.0), SdeCoefficients.isotropic(1, 1.0), LevyDriverSpec(1)),
    "1d-stable": (Interval(-1.0, 1.0), SdeCoefficients.zero(1), LevyDriverSpec(1, stable=StablePart(1.5), p=1.2)),
    "2d-jumps": (Ball([0.0, 0.0], 1.0), SdeCoefficients.isotropic(2, 0.5),
                 LevyDriverSpec(2, compound=CompoundPoisson(3.0, "normal", {"std": 0.5}),
                                stable=StablePart(1.5), p=1.2)),
}


def bench(name, n_paths, steps, n_pen):
    domain, coeffs, levy = CASES[name]
    d = domain.dim
    f = ScalarField.radial([0.0, 0.0, 1.0], np.zeros(d))
    g = ScalarField.cosine(np.ones(d))
    args = _kernel_args(domain, coeffs, f, g, 1.0, n_pen, 32)
    xq, wq = gauss_legendre(32)
    x0 = np.full(d, 0.1)
    ck = np.array([steps], np.int64)

    t0 = time.perf_counter()
    nb = sample_batch(levy, coeffs.channels, 1.0, steps, 0, range(n_paths))
    t_noise = time.perf_counter() - t0

    out = {}
    for label, runner in (("numba", run_batch), ("numpy", run_batch_numpy)):
        ti, bnd, var = np.empty(n_paths), np.empty(n_paths), np.empty((n_paths, 1))
        call = (x0, nb.h, nb.dW, nb.grid_inc, nb.jptr, nb.jump_step, nb.jump_times, nb.jump_sizes,
                nb.bridge, *args, ck, xq, wq, ti, bnd, var)
        runner(*call)  # warm-up (jit compile)
        t0 = time.perf_counter()
        runner(*call)
        out[label] = (time.perf_counter() - t0, ti + bnd)
    (tn, vn), (tp, vp) = out["numba"], out["numpy"]
    per = 1e9 / (n_paths * steps)
    print(f"{name:12s} n_pen={n_pen:<6g} noise {t_noise * per:6.1f} ns/step  "
          f"numba {tn * per:6.1f} ns/step  numpy {tp * per:6.1f} ns/step  "
          f"max |diff| {np.max(np.abs(vn - vp)):.1e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=512)
    ap.add_argument("--steps", type=int, default=1024)
    a = ap.parse_args()
    for name in CASES:
        for n_pen in (0.0, 100.0):
            bench(name, a.paths, a.steps, n_pen)


if __name__ == "__main__":
    main()
