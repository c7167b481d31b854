"""Compare the compiled kernel backend against the numpy fallback.

Run:  python benchmarks/bench_kernels.py [n]

Times kinetic_energy_grad (the hot kernel of every minimization loop) and
bilinear_interp (the hot kernel of the ray-integration quadratures) on an
n x n grid for both backends and reports the speedup and the agreement of
the results.
"""

import sys
import time

import numpy as np

from maglab import _kernels
from maglab._kernels import numpy_backend


def make_instance(n, seed=0):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    px = np.exp(1j * rng.standard_normal((n - 1, n)))
    py = np.exp(1j * rng.standard_normal((n, n - 1)))
    wx = rng.uniform(0.0, 1.0, (n - 1, n))
    wy = rng.uniform(0.0, 1.0, (n, n - 1))
    return tuple(np.ascontiguousarray(a) for a in (u, px, py, wx, wy))


def bench(fn, args, repeat=20):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        out = fn(*args)
    return (time.perf_counter() - t0) / repeat, out


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 257
    args = make_instance(n)
    print(f"grid {n} x {n}, active backend: {_kernels.BACKEND}")
    t_active, (ea, ga) = bench(_kernels.kinetic_energy_grad, args)
    t_numpy, (en, gn) = bench(numpy_backend.kinetic_energy_grad, args)
    assert np.isclose(ea, en, rtol=1e-12)
    assert np.allclose(ga, gn, rtol=1e-11, atol=1e-12)
    print(f"kinetic_energy_grad  active: {1e3 * t_active:8.3f} ms"
          f"  numpy: {1e3 * t_numpy:8.3f} ms"
          f"  speedup: {t_numpy / t_active:5.2f}x")

    rng = np.random.default_rng(1)
    v = np.ascontiguousarray(rng.standard_normal((n, n)))
    npts = 4 * n * n
    fx = rng.uniform(0.0, n - 1.0 - 1e-9, npts)
    fy = rng.uniform(0.0, n - 1.0 - 1e-9, npts)
    t_active, va = bench(_kernels.bilinear_interp, (v, fx, fy))
    t_numpy, vn = bench(numpy_backend.bilinear_interp, (v, fx, fy))
    assert np.allclose(va, vn, rtol=1e-12, atol=1e-14)
    print(f"bilinear_interp      active: {1e3 * t_active:8.3f} ms"
          f"  numpy: {1e3 * t_numpy:8.3f} ms"
          f"  speedup: {t_numpy / t_active:5.2f}x")


if __name__ == "__main__":
    main()
