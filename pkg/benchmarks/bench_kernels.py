"""Compare the compiled and pure-Python kernels on the same inputs.

    python benchmarks/bench_kernels.py [--walkers 256] [--steps 200] [--repeat 3]

Both backends must agree; the script prints the best time of each and
the speed-up.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from riccati_foliations import _pykernels
from riccati_foliations.groups import triangle_group
from riccati_foliations.suspension import from_group

try:
    from riccati_foliations import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def crossing_inputs(D, n, seed):
    rng = np.random.default_rng(seed)
    z = np.cumsum(0.05 * (rng.normal(size=n) + 1j * rng.normal(size=n))) + D.basepoint
    d = D.cut_directions
    return (z.real, z.imag, D.basepoint.real, D.basepoint.imag, d.real, d.imag, D.cut_lengths)


def walk_inputs(D, walkers, steps, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(walkers, 3))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    Y = np.column_stack([rng.normal(size=walkers) + 0j, np.ones(walkers, complex)])
    noise = rng.normal(size=(steps, walkers, 3))
    d = D.cut_directions
    mats = np.array([M.matrix for M in D.monodromies])
    inv = np.array([M.inverse().matrix for M in D.monodromies])
    return (X, Y, noise, 0.1, D.basepoint.real, D.basepoint.imag, d.real, d.imag, D.cut_lengths,
            D.far_radius(), mats, inv, steps // 3, 10)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--walkers", type=int, default=256)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--vertices", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels unavailable; nothing to compare")
        return 1
    D = from_group(triangle_group(2, 3, 7))
    cases = [("segment_crossings", crossing_inputs(D, a.vertices, a.seed)),
             ("walk", walk_inputs(D, a.walkers, a.steps, a.seed))]
    print(f"{'kernel':<20}{'python [s]':>12}{'cython [s]':>12}{'speed-up':>10}")
    for name, args in cases:
        tp, rp = best_of(lambda: getattr(_pykernels, name)(*args), a.repeat)
        tc, rc = best_of(lambda: getattr(_ckernels, name)(*args), a.repeat)
        for x, y in zip(rp, rc):
            if not np.allclose(x, y, rtol=1e-9, atol=1e-12):
                raise SystemExit(f"{name}: backends disagree")
        print(f"{name:<20}{tp:>12.4f}{tc:>12.4f}{tp / tc:>10.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
