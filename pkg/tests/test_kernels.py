"""Compiled and pure-Python kernels must agree."""
import numpy as np
import pytest
from scipy.special import ndtri

from dpmc import _backend, _pykernels

try:
    from dpmc import _ckernels
except ImportError:
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


def test_backend_reported():
    assert _backend.BACKEND in ("cython", "python")


def test_norm_icdf_accuracy(kernel_module):
    u = np.concatenate([np.geomspace(1e-300, 0.5, 500), 1 - np.geomspace(1e-16, 0.5, 500),
                        np.random.default_rng(0).random(10_000)])
    x = kernel_module.norm_icdf(u)
    np.testing.assert_allclose(x, ndtri(u), rtol=1e-14, atol=1e-14)


def test_jacobi_orthogonalizes(kernel_module, rng):
    A = rng.normal(size=(7, 5))
    G = np.ascontiguousarray(A.T)
    V = np.eye(5)
    sweeps = kernel_module.jacobi_sweeps(G, V, 1e-15, 60)
    assert sweeps > 0
    gram = G @ G.T
    off = gram - np.diag(np.diag(gram))
    assert np.abs(off).max() <= 1e-12 * np.abs(gram).max()
    np.testing.assert_allclose(V @ A.T, G, atol=1e-12)


def test_jacobi_reports_nonconvergence(kernel_module, rng):
    G = np.ascontiguousarray(rng.normal(size=(6, 6)))
    assert kernel_module.jacobi_sweeps(G, np.eye(6), 1e-15, 1) == -1


def test_grid_min_brute_force(kernel_module, rng):
    a, b = rng.uniform(1, 2, 30), rng.uniform(1, 2, 20)
    s1c, s2c = rng.uniform(0, 2, (30, 2)), rng.uniform(0, 2, (20, 2))
    ok = np.all(s1c[:, None, :] * s2c[None, :, :] >= 1.0, axis=2)
    ref = np.min(np.where(ok, np.outer(a, b), np.inf))
    assert kernel_module.grid_min(a, s1c, b, s2c, 1.0) == ref


@needs_ext
def test_backends_agree(rng):
    u = rng.random(50_000)
    np.testing.assert_allclose(_ckernels.norm_icdf(u), _pykernels.norm_icdf(u), rtol=0, atol=5e-15)
    A = rng.normal(size=(9, 6))
    out = []
    for mod in (_ckernels, _pykernels):
        G, V = np.ascontiguousarray(A.T), np.eye(6)
        mod.jacobi_sweeps(G, V, 1e-15, 60)
        out.append(np.sort(np.linalg.norm(G, axis=1)))
    np.testing.assert_allclose(out[0], out[1], rtol=1e-13)
