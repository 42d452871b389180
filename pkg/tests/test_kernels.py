import os
import subprocess
import sys

import numpy as np
import pytest

from resistar import _pykernels, kernels
from resistar.boundary import build_store
from resistar.grid import GridSpec
from resistar.oracle import SphereOracle, random_radial

HAVE_C = "cython" in kernels.backends()
needs_c = pytest.mark.skipif(not HAVE_C, reason="compiled kernels not built")


def cube_batches(variant, d, n, seed):
    o = random_radial(d, 5, 0.3, seed) if seed else SphereOracle((0.5,) * d, 0.31)
    s = build_store(o, GridSpec(d, n), variant, 8)
    rng = np.random.default_rng(seed)
    for c in list(s.cube_ids())[:40]:
        yield s.cube_arrays(c), rng.random((50, d))


@needs_c
@pytest.mark.parametrize("variant", ["cube", "kuhn"])
@pytest.mark.parametrize("d, n, seed", [(2, 9, 0), (3, 6, 0), (3, 7, 11), (4, 5, 12), (5, 4, 13)])
def test_backends_agree(variant, d, n, seed):
    c_mod = kernels.backends()["cython"]
    delta = 1e-5 * (n - 1)
    for data, xs in cube_batches(variant, d, n, seed):
        if variant == "cube":
            a = _pykernels.classify_cube_batch(data.local, data.mask_minus, data.mask_plus, xs, delta)
            b = c_mod.classify_cube_batch(data.local, data.mask_minus, data.mask_plus, xs, delta)
        else:
            a = _pykernels.classify_simplex_batch(data.mask_minus, data.mask_plus, data.t, xs, delta)
            b = c_mod.classify_simplex_batch(data.mask_minus, data.mask_plus, data.t, xs, delta)
        assert a.dtype == b.dtype == np.int8
        assert np.array_equal(a, b)


@needs_c
def test_backends_agree_on_the_delta_guard():
    c_mod = kernels.backends()["cython"]
    data, _ = next(cube_batches("cube", 3, 6, 0))
    bary = data.local.mean(axis=0)
    xs = np.array([bary, bary + 1e-7, bary + 0.3 * (np.full(3, 0.5) - bary)])
    xs = np.clip(xs, 0, 1)
    a = _pykernels.classify_cube_batch(data.local, data.mask_minus, data.mask_plus, xs, 1e-5)
    b = c_mod.classify_cube_batch(data.local, data.mask_minus, data.mask_plus, xs, 1e-5)
    assert a[0] == 0 and a[1] == 0
    assert np.array_equal(a, b)


def test_empty_batches():
    for mod in kernels.backends().values():
        out = mod.classify_cube_batch(np.zeros((1, 2)) + 0.5, [0], [1], np.zeros((0, 2)), 1e-5)
        assert out.shape == (0,)


def test_pure_python_switch():
    code = "import resistar.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, RESISTAR_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    env["RESISTAR_PURE_PYTHON"] = "0"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == ("cython" if HAVE_C else "python")
