"""The compiled kernels and the numpy fallback must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from fasisac import _pykernels, kernels

ck = pytest.importorskip("fasisac._ckernels")


def _c(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def data(rng):
    n, p = 5, 4
    return dict(
        pos=np.ascontiguousarray(rng.uniform(-2, 2, (n, 2))),
        ut=rng.uniform(-2, 2, 2),
        el=rng.uniform(0, np.pi, p), az=rng.uniform(0, np.pi, p),
        sigma=np.ascontiguousarray(_c(rng, p, p)),
        f=_c(rng, n), U=np.ascontiguousarray(_c(rng, n, n)), E=np.ascontiguousarray(_c(rng, 3, n)),
    )


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "python")


def test_response_and_channel(data):
    d = data
    np.testing.assert_allclose(ck.response_matrix(d["pos"], d["el"], d["az"], 0.7),
                               _pykernels.response_matrix(d["pos"], d["el"], d["az"], 0.7),
                               rtol=1e-13, atol=1e-13)
    a = ck.channel_row(d["pos"], d["ut"], d["el"], d["az"], d["el"][::-1].copy(), d["az"], d["sigma"], 1.0)
    b = _pykernels.channel_row(d["pos"], d["ut"], d["el"], d["az"], d["el"][::-1].copy(), d["az"],
                               d["sigma"], 1.0)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


def test_forms(data):
    d = data
    assert abs(ck.quad_form(d["f"], d["U"]) - _pykernels.quad_form(d["f"], d["U"])) < 1e-12
    assert abs(ck.trace_sandwich(d["E"], d["U"]) - _pykernels.trace_sandwich(d["E"], d["U"])) < 1e-11
    assert ck.min_pairwise_distance(d["pos"]) == pytest.approx(_pykernels.min_pairwise_distance(d["pos"]),
                                                               rel=1e-15)
    assert ck.min_pairwise_distance(d["pos"][:1].copy()) == np.inf


def test_settle_matches(rng):
    for _ in range(50):
        prev = np.ascontiguousarray(rng.uniform(-1, 1, (4, 2)))
        tent = np.ascontiguousarray(prev + rng.uniform(-0.6, 0.6, prev.shape))
        np.testing.assert_array_equal(ck.settle_positions(prev, tent, 0.5),
                                      _pykernels.settle_positions(prev, tent, 0.5))


def test_optimizer_kernels_bitwise(rng):
    n = 1000
    args = [rng.standard_normal(n) for _ in range(2)] + [np.zeros(n), np.zeros(n)]
    a = [x.copy() for x in args]
    b = [x.copy() for x in args]
    for step in range(1, 4):
        c1, c2 = 1 - 0.9 ** step, 1 - 0.999 ** step
        ck.adam_update(*a, 1e-3, 0.9, 0.999, 1e-8, c1, c2)
        _pykernels.adam_update(*b, 1e-3, 0.9, 0.999, 1e-8, c1, c2)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)
    t1, t2, o = rng.standard_normal(n), None, rng.standard_normal(n)
    t2 = t1.copy()
    ck.soft_update(t1, o, 0.01)
    _pykernels.soft_update(t2, o, 0.01)
    np.testing.assert_array_equal(t1, t2)


def test_env_var_forces_fallback():
    env = dict(os.environ, FASISAC_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from fasisac import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
