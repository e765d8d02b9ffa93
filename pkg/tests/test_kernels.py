import os
import subprocess
import sys

import numpy as np
import pytest

from riccati_foliations import _pykernels, kernels
from riccati_foliations.suspension import crossing_word, circle_path, standard_loop

try:
    from riccati_foliations import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None

compiled = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


def _crossing_args(D, n=5000, seed=1):
    rng = np.random.default_rng(seed)
    z = np.cumsum(0.05 * (rng.normal(size=n) + 1j * rng.normal(size=n))) + D.basepoint
    d = D.cut_directions
    return (z.real, z.imag, D.basepoint.real, D.basepoint.imag, d.real, d.imag, D.cut_lengths)


def _walk_args(D, walkers=32, steps=60, seed=2):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(walkers, 3))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    Y = np.column_stack([rng.normal(size=walkers) + 0j, np.ones(walkers, complex)])
    noise = rng.normal(size=(steps, walkers, 3))
    d = D.cut_directions
    mats = np.array([M.matrix for M in D.monodromies])
    inv = np.array([M.inverse().matrix for M in D.monodromies])
    return (X, Y, noise, 0.1, D.basepoint.real, D.basepoint.imag, d.real, d.imag, D.cut_lengths,
            D.far_radius(), mats, inv, 20, 5)


@compiled
def test_crossings_backends_agree(d237):
    a = _pykernels.segment_crossings(*_crossing_args(d237))
    b = _ckernels.segment_crossings(*_crossing_args(d237))
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


@compiled
def test_walk_backends_agree(d237):
    a = _pykernels.walk(*_walk_args(d237))
    b = _ckernels.walk(*_walk_args(d237))
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=1e-9, atol=1e-12)


def test_pure_environment_selects_fallback():
    code = "from riccati_foliations import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, RICCATI_FOLIATIONS_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_selected_backend_counts_loop(d237):
    assert kernels.BACKEND in ("python", "cython")
    word = crossing_word(d237, standard_loop(d237, 0))
    assert len(word) == 1 and word[0][0] == 0


def test_small_circle_crosses_nothing(d237):
    assert crossing_word(d237, circle_path(d237.basepoint + 0.1, 0.01)) == []
