import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dpmc.errors import (ConditioningError, DomainError, MatrixFormatError,
                         ShapeError)
from dpmc.matnorm import (CovariancePair, delta_prime_norm, format_matrix,
                          frobenius_norm, make_rng, read_matrix,
                          sample_matrix_normal, sample_matrix_normal_batch,
                          sample_snd, sample_snd_batch, split_rng, svd)
from dpmc.scalar_gauss import std_normal_cdf_inv

from conftest import random_orthogonal


def test_snd_deterministic():
    a = sample_snd(2, 3, make_rng(11))
    b = sample_snd(2, 3, make_rng(11))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_snd(2, 3, make_rng(12)))


def test_snd_shape():
    assert sample_snd(3, 2, make_rng(0)).shape == (3, 2)


def test_snd_rejects_empty():
    with pytest.raises(DomainError):
        sample_snd(0, 2, make_rng(0))


def test_snd_stream_contract():
    # one raw 64-bit draw per entry, row-major, mapped to (0, 1) then inverted
    raw = np.random.Philox(5).random_raw(6)
    u = ((raw >> np.uint64(11)).astype(float) + 0.5) * 2.0 ** -53
    expected = np.array([std_normal_cdf_inv(x) for x in u]).reshape(2, 3)
    np.testing.assert_allclose(sample_snd(2, 3, make_rng(5)), expected, rtol=0, atol=1e-15)


def test_snd_batch_continues_stream():
    rng = make_rng(3)
    first, second = sample_snd(2, 2, rng), sample_snd(2, 2, rng)
    batch = sample_snd_batch(2, 2, 2, make_rng(3))
    assert np.array_equal(batch[0], first) and np.array_equal(batch[1], second)


def test_snd_moments():
    x = sample_snd(1_000_000, 1, make_rng(99)).ravel()
    assert abs(x.mean()) <= 4 / math.sqrt(1e6)
    assert abs(x.var() - 1.0) <= 0.01


def test_split_rng_independent_streams():
    a, b = split_rng(make_rng(1), 2)
    assert not np.array_equal(sample_snd(3, 3, a), sample_snd(3, 3, b))


def test_matrix_normal_identity_factors_match_snd():
    cov = CovariancePair(np.eye(2), np.eye(3))
    Z = sample_matrix_normal(np.zeros((2, 3)), cov, make_rng(8))
    assert np.array_equal(Z, sample_snd(2, 3, make_rng(8)))


def test_matrix_normal_vanishing_noise():
    M = np.arange(6.0).reshape(2, 3) - 2.5
    cov = CovariancePair(1e-12 * np.eye(2), np.eye(3))
    Z = sample_matrix_normal(M, cov, make_rng(4))
    assert np.max(np.abs(Z - M)) <= 1e-10


def test_matrix_normal_shape_mismatch():
    with pytest.raises(ShapeError):
        sample_matrix_normal(np.zeros((3, 3)), CovariancePair(np.eye(2), np.eye(3)), make_rng(0))


def _kron_z_scores(U1, U2, samples, seed):
    cov = CovariancePair(U1, U2)
    m, n = cov.shape
    Z = sample_matrix_normal_batch(samples, np.zeros((m, n)), cov, make_rng(seed))
    v = Z.transpose(0, 2, 1).reshape(samples, m * n)  # column-stacking vec
    target = np.kron(cov.Sigma2, cov.Sigma1)
    prods = v[:, :, None] * v[:, None, :]
    se = prods.std(axis=0, ddof=1) / math.sqrt(samples)
    return np.abs(prods.mean(axis=0) - target) / se


def test_matrix_normal_kronecker_diag():
    z = _kron_z_scores(np.diag([2.0, 1.0]), np.eye(2), 100_000, 21)
    assert z.max() <= 5.0


@pytest.mark.slow
@pytest.mark.parametrize("m,n", [(1, 3), (2, 2), (3, 2), (3, 3)])
def test_matrix_normal_kronecker_random_spd(m, n, rng):
    U1 = rng.normal(size=(m, m)) + 2 * np.eye(m)
    U2 = rng.normal(size=(n, n)) + 2 * np.eye(n)
    z = _kron_z_scores(U1, U2, 200_000, 100 * m + n)
    assert z.max() <= 5.0


def test_svd_identity():
    np.testing.assert_allclose(svd(np.eye(3)).values, [1, 1, 1])


def test_svd_magnitudes():
    np.testing.assert_allclose(svd(np.diag([3.0, -2.0])).values, [3, 2])


def _check_svd(A):
    sp = svd(A)
    r = min(A.shape)
    assert sp.values.shape == (r,)
    assert np.all(np.diff(sp.values) <= 0) and np.all(sp.values >= 0)
    recon = sp.left @ np.diag(sp.values) @ sp.right.T
    scale = max(np.linalg.norm(A), 1e-300)
    assert np.linalg.norm(recon - A) <= 1e-9 * scale + 1e-300
    np.testing.assert_allclose(sp.left.T @ sp.left, np.eye(r), atol=1e-10)
    np.testing.assert_allclose(sp.right.T @ sp.right, np.eye(r), atol=1e-10)
    return sp


def test_svd_random_against_eigen_oracle(rng):
    A = rng.normal(size=(5, 4))
    sp = _check_svd(A)
    eig = np.sqrt(np.clip(np.linalg.eigvalsh(A.T @ A), 0, None))[::-1]
    np.testing.assert_allclose(sp.values, eig, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("shape", [(1, 1), (1, 5), (5, 1), (3, 7), (7, 3), (6, 6), (40, 25)])
def test_svd_shapes(shape, rng):
    _check_svd(rng.normal(size=shape))


def test_svd_rank_deficient(rng):
    A = rng.normal(size=(6, 2)) @ rng.normal(size=(2, 5))
    sp = _check_svd(A)
    assert sp.values[2:].max() <= 1e-12 * sp.values[0]


def test_svd_zero_matrix():
    sp = _check_svd(np.zeros((3, 2)))
    assert np.all(sp.values == 0)


def test_svd_does_not_mutate_input(rng):
    A = rng.normal(size=(3, 6))
    keep = A.copy()
    svd(A)
    assert np.array_equal(A, keep)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
              elements=st.floats(-1e3, 1e3, allow_subnormal=False)))
def test_svd_property(A):
    _check_svd(A)


def test_frobenius_basic():
    assert frobenius_norm(np.zeros((2, 3))) == 0.0
    assert frobenius_norm(np.eye(3)) == pytest.approx(math.sqrt(3), abs=1e-15)


def test_frobenius_matches_spectrum(rng):
    A = rng.normal(size=(4, 4))
    assert abs(frobenius_norm(A) - math.sqrt(np.sum(svd(A).values ** 2))) <= 1e-9


def test_frobenius_orthogonal_invariance(rng):
    for _ in range(50):
        m, n = rng.integers(1, 7, size=2)
        A = rng.normal(size=(m, n))
        Q, P = random_orthogonal(rng, m), random_orthogonal(rng, n)
        assert abs(frobenius_norm(Q @ A @ P.T) - frobenius_norm(A)) <= 1e-10


def test_covariance_cached_spectra(rng):
    U1 = rng.normal(size=(3, 3)) + 3 * np.eye(3)
    U2 = rng.normal(size=(2, 2)) + 3 * np.eye(2)
    cov = CovariancePair(U1, U2)
    np.testing.assert_allclose(cov.sigma1, np.linalg.svd(U1, compute_uv=False), atol=1e-10)
    np.testing.assert_allclose(cov.sigma2, np.linalg.svd(U2, compute_uv=False), atol=1e-10)
    np.testing.assert_allclose(cov.Sigma1, cov.Sigma1.T)
    assert np.all(np.linalg.eigvalsh(cov.Sigma1) > 0)


def test_covariance_rejects_singular():
    with pytest.raises(ConditioningError):
        CovariancePair(np.diag([1.0, 0.0]), np.eye(2))
    with pytest.raises(ShapeError):
        CovariancePair(np.ones((2, 3)), np.eye(2))


def test_delta_prime_identity(rng):
    D = rng.normal(size=(3, 4))
    assert delta_prime_norm(D, CovariancePair(np.eye(3), np.eye(4))) == pytest.approx(
        frobenius_norm(D), rel=1e-14)


def test_delta_prime_scalar(rng):
    D = rng.normal(size=(3, 4))
    c = 2.5
    general = CovariancePair(c * np.eye(3), np.eye(4))
    assert delta_prime_norm(D, general) == pytest.approx(frobenius_norm(D) / c, rel=1e-14)
    assert delta_prime_norm(D, CovariancePair.iid(3, 4, c)) == pytest.approx(
        frobenius_norm(D) / c, rel=1e-14)


def test_delta_prime_general_matches_inverse_oracle(rng):
    for _ in range(100):
        m, n = rng.integers(1, 6, size=2)
        U1 = rng.normal(size=(m, m)) + 2 * np.eye(m)
        U2 = rng.normal(size=(n, n)) + 2 * np.eye(n)
        D = rng.normal(size=(m, n))
        ref = np.linalg.norm(np.linalg.inv(U1) @ D @ np.linalg.inv(U2).T)
        assert delta_prime_norm(D, CovariancePair(U1, U2)) == pytest.approx(ref, rel=1e-9)


def test_delta_prime_aligned_spectral_formula(rng):
    m, n = 4, 3
    W1, W2 = random_orthogonal(rng, m), random_orthogonal(rng, n)
    s1 = np.sort(rng.uniform(0.5, 3, m))   # ascending: column i pairs with sigma_{m-i+1}
    s2 = np.sort(rng.uniform(0.5, 3, n))
    sd = np.sort(rng.uniform(0.1, 2, 3))[::-1]
    S = np.zeros((m, n))
    S[np.arange(3), np.arange(3)] = sd
    D = W1 @ S @ W2.T
    formula = math.sqrt(np.sum(sd ** 2 / (s1[:3] ** 2 * s2[:3] ** 2)))
    general = CovariancePair(W1 @ np.diag(s1), W2 @ np.diag(s2))
    spectral = CovariancePair.from_spectra(W1, s1, W2, s2)
    assert delta_prime_norm(D, general) == pytest.approx(formula, rel=1e-12)
    assert delta_prime_norm(D, spectral) == pytest.approx(formula, rel=1e-12)


def test_delta_prime_shape_mismatch():
    with pytest.raises(ShapeError):
        delta_prime_norm(np.zeros((2, 2)), CovariancePair(np.eye(3), np.eye(2)))


def test_matrix_file_round_trip(tmp_path, rng):
    A = rng.normal(size=(3, 4))
    path = tmp_path / "a.csv"
    path.write_text(format_matrix(A))
    assert path.read_text().splitlines()[0] == "# rows=3 cols=4"
    assert np.array_equal(read_matrix(path), A)


@pytest.mark.parametrize("text", [
    "1,2\n3,4\n",
    "# rows=2 cols=2\n1,2\n",
    "# rows=2 cols=2\n1,2\n3\n",
    "# rows=1 cols=2\n1,abc\n",
    "# rows=1 cols=1\nnan\n",
    "",
])
def test_matrix_file_errors(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(MatrixFormatError):
        read_matrix(path)


@pytest.mark.parametrize("scale", [1e-157, 1e-300, 1e150, 1e300])
def test_svd_extreme_magnitudes(scale):
    A = scale * np.array([[0.0, 1.0, 1.0], [1.0, 1.0, 1.0]])
    np.testing.assert_allclose(svd(A).values, np.linalg.svd(A, compute_uv=False), rtol=1e-12)
