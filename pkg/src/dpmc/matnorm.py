"""Dense matrix kernel: matrix-normal sampling, Jacobi SVD, whitened norms.

Random streams
--------------
All sampling goes through an explicitly passed :class:`numpy.random.Generator`
backed by the counter-based Philox bit generator (see :func:`make_rng`). Each
standard-normal entry consumes exactly one 64-bit raw draw ``w``, mapped to
the open unit interval as ``u = ((w >> 11) + 0.5) * 2**-53`` and then through
the inverse normal CDF. Entries are drawn in row-major order, and batches of
matrices in sample-major order, so a stream can be replayed from its seed.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import solve_triangular

from dpmc._backend import kernels
from dpmc.errors import (ConditioningError, ConvergenceError, DomainError,
                         MatrixFormatError, ShapeError)

RNG_ALGORITHM = "philox4x64-icdf-v1"
JACOBI_MAX_SWEEPS = 60
_EPS = np.finfo(np.float64).eps
_COND_FLOOR = 1e-15


def make_rng(seed: int | None) -> np.random.Generator:
    """Seeded Philox generator used by every sampler in the package."""
    return np.random.Generator(np.random.Philox(seed))


def split_rng(rng: np.random.Generator, k: int) -> list[np.random.Generator]:
    """``k`` statistically independent child generators (one per thread)."""
    return list(rng.spawn(k))


def as_matrix(A, name: str = "matrix") -> np.ndarray:
    """Validate a dense, finite, non-empty 2-D float array."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ShapeError(f"{name} must be a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError(f"{name} has non-finite entries")
    return A


def _open_uniforms(rng: np.random.Generator, size: int) -> np.ndarray:
    raw = rng.bit_generator.random_raw(size)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def sample_snd(m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``m x n`` matrix of independent standard normal draws."""
    if m < 1 or n < 1:
        raise DomainError(f"dimensions must be >= 1, got ({m}, {n})")
    return kernels.norm_icdf(_open_uniforms(rng, m * n)).reshape(m, n)


def sample_snd_batch(k: int, m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``k`` consecutive :func:`sample_snd` draws stacked as ``(k, m, n)``."""
    if k < 1 or m < 1 or n < 1:
        raise DomainError(f"dimensions must be >= 1, got ({k}, {m}, {n})")
    return kernels.norm_icdf(_open_uniforms(rng, k * m * n)).reshape(k, m, n)


@dataclass(frozen=True)
class SingularSpectrum:
    """Singular values in non-increasing order with optional directions.

    When present, ``left`` (m x r) and ``right`` (n x r) have orthonormal
    columns and ``A = left @ diag(values) @ right.T``.
    """

    values: np.ndarray
    left: np.ndarray | None = None
    right: np.ndarray | None = None


def _complete_basis(Q: np.ndarray, dim: int, k: int) -> np.ndarray:
    # extend orthonormal columns Q (dim x g) to dim x k
    g = Q.shape[1]
    if g == k:
        return Q
    M = np.hstack([Q, np.eye(dim)])
    full, R = np.linalg.qr(M)
    extra = full[:, g:k]
    return np.hstack([Q, extra])


def _jacobi_tall(A: np.ndarray):
    # A is m x n with m >= n
    m, n = A.shape
    # rescale so squared norms stay clear of underflow and overflow
    scale = float(np.max(np.abs(A)))
    if scale == 0.0:
        scale = 1.0
    G = np.array(A.T, dtype=np.float64, order="C", copy=True)
    G /= scale
    V = np.eye(n)
    floor = (_EPS * np.linalg.norm(G)) ** 2
    sweeps = kernels.jacobi_sweeps(G, V, _EPS * m, JACOBI_MAX_SWEEPS, floor)
    if sweeps < 0:
        raise ConvergenceError(f"Jacobi SVD did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    norms = np.sqrt(np.einsum("ij,ij->i", G, G))
    order = np.argsort(-norms, kind="stable")
    values = norms[order]
    G, V = G[order], V[order]
    cutoff = values[0] * _EPS * max(m, n) if values[0] > 0 else 0.0
    good = int(np.count_nonzero(values > cutoff))
    left = (G[:good] / values[:good, None]).T
    left = _complete_basis(left, m, n)
    return values * scale, left, V.T


def svd(A) -> SingularSpectrum:
    """Thin SVD by one-sided (Hestenes) Jacobi rotations.

    Returns ``r = min(m, n)`` singular values in non-increasing order with
    left (m x r) and right (n x r) orthonormal directions.
    """
    A = as_matrix(A)
    m, n = A.shape
    if m >= n:
        values, left, right = _jacobi_tall(A)
    else:
        values, right, left = _jacobi_tall(A.T)
    return SingularSpectrum(values=values, left=left, right=right)


def singular_values(A) -> np.ndarray:
    return svd(A).values


def frobenius_norm(A) -> float:
    return float(np.linalg.norm(as_matrix(A), "fro"))


@dataclass(frozen=True, eq=False)
class CovariancePair:
    """Row and column covariance factors ``U1`` (m x m) and ``U2`` (n x n).

    ``Sigma_k = U_k U_k^T``. Spectra are computed once at construction. When
    built with :meth:`from_spectra` the factorization ``U_k = W_k diag(s_k)``
    with orthogonal ``W_k`` is kept and used for whitening.
    """

    U1: np.ndarray
    U2: np.ndarray
    sigma1: np.ndarray = field(init=False)
    sigma2: np.ndarray = field(init=False)
    directional: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        U1 = as_matrix(self.U1, "U1")
        U2 = as_matrix(self.U2, "U2")
        for name, U in (("U1", U1), ("U2", U2)):
            if U.shape[0] != U.shape[1]:
                raise ShapeError(f"{name} must be square, got {U.shape}")
        object.__setattr__(self, "U1", U1)
        object.__setattr__(self, "U2", U2)
        if self.directional is not None:
            _, s1, _, s2 = self.directional
            sig1 = np.sort(np.abs(s1))[::-1]
            sig2 = np.sort(np.abs(s2))[::-1]
        else:
            sig1, sig2 = singular_values(U1), singular_values(U2)
        for name, sig in (("U1", sig1), ("U2", sig2)):
            if not sig[-1] > _COND_FLOOR * sig[0]:
                raise ConditioningError(f"{name} is singular (spectrum {sig})")
        object.__setattr__(self, "sigma1", sig1)
        object.__setattr__(self, "sigma2", sig2)

    @classmethod
    def from_spectra(cls, W1, s1, W2, s2) -> "CovariancePair":
        """``U1 = W1 diag(s1)``, ``U2 = W2 diag(s2)`` for orthogonal ``W1``, ``W2``."""
        W1, W2 = as_matrix(W1, "W1"), as_matrix(W2, "W2")
        s1 = np.asarray(s1, dtype=np.float64)
        s2 = np.asarray(s2, dtype=np.float64)
        for W, s in ((W1, s1), (W2, s2)):
            if W.shape != (s.size, s.size):
                raise ShapeError(f"direction {W.shape} does not match spectrum of size {s.size}")
            if not np.allclose(W.T @ W, np.eye(s.size), atol=1e-10):
                raise DomainError("directional matrices must be orthogonal")
        return cls(W1 * s1, W2 * s2, directional=(W1, s1, W2, s2))

    @classmethod
    def iid(cls, m: int, n: int, scale1: float, scale2: float = 1.0) -> "CovariancePair":
        """Isotropic pair ``U1 = scale1 I_m``, ``U2 = scale2 I_n``."""
        return cls.from_spectra(np.eye(m), np.full(m, float(scale1)),
                                np.eye(n), np.full(n, float(scale2)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.U1.shape[0], self.U2.shape[0]

    @property
    def Sigma1(self) -> np.ndarray:
        return self.U1 @ self.U1.T

    @property
    def Sigma2(self) -> np.ndarray:
        return self.U2 @ self.U2.T

    @property
    def min_product(self) -> float:
        """``sigma_m(U1) * sigma_n(U2)``."""
        return float(self.sigma1[-1] * self.sigma2[-1])

    def scaled(self, c1: float, c2: float = 1.0) -> "CovariancePair":
        if self.directional is not None:
            W1, s1, W2, s2 = self.directional
            return CovariancePair.from_spectra(W1, s1 * c1, W2, s2 * c2)
        return CovariancePair(self.U1 * c1, self.U2 * c2)


def _check_conform(M: np.ndarray, cov: CovariancePair, name: str):
    if M.shape != cov.shape:
        raise ShapeError(f"{name} has shape {M.shape}, covariance expects {cov.shape}")


def sample_matrix_normal(M, cov: CovariancePair, rng: np.random.Generator) -> np.ndarray:
    """Draw ``Z = M + U1 N U2^T`` with ``N`` from :func:`sample_snd`."""
    M = as_matrix(M, "M")
    _check_conform(M, cov, "M")
    N = sample_snd(M.shape[0], M.shape[1], rng)
    return M + cov.U1 @ N @ cov.U2.T


def sample_matrix_normal_batch(k: int, M, cov: CovariancePair,
                               rng: np.random.Generator) -> np.ndarray:
    M = as_matrix(M, "M")
    _check_conform(M, cov, "M")
    N = sample_snd_batch(k, M.shape[0], M.shape[1], rng)
    return M + cov.U1 @ N @ cov.U2.T


def _triangular_factor(U: np.ndarray, name: str) -> np.ndarray:
    # U^T = Q R, so U U^T = R^T R: R is the Cholesky factor of Sigma, obtained
    # without forming Sigma
    R = np.linalg.qr(U.T, mode="r")
    d = np.abs(np.diag(R))
    if not d.min() > _COND_FLOOR * d.max():
        raise ConditioningError(f"{name} is numerically singular")
    return R


def delta_prime_norm(Delta, cov: CovariancePair) -> float:
    """``||U1^{-1} Delta U2^{-T}||_F`` by triangular solves, never an inverse."""
    Delta = as_matrix(Delta, "Delta")
    _check_conform(Delta, cov, "Delta")
    if cov.directional is not None:
        W1, s1, W2, s2 = cov.directional
        white = (W1.T @ Delta @ W2) / np.outer(s1, s2)
        return float(np.linalg.norm(white, "fro"))
    R1 = _triangular_factor(cov.U1, "U1")
    R2 = _triangular_factor(cov.U2, "U2")
    X = solve_triangular(R1, Delta, trans="T")
    Y = solve_triangular(R2, X.T, trans="T")
    return float(np.linalg.norm(Y, "fro"))


_HEADER = re.compile(r"^#\s*rows=(\d+)\s+cols=(\d+)\s*$")


def read_matrix(path) -> np.ndarray:
    """Read a matrix file: ``# rows=<m> cols=<n>`` then one CSV row per line."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise MatrixFormatError(f"{path}: empty file")
    match = _HEADER.match(lines[0].strip())
    if match is None:
        raise MatrixFormatError(f"{path}: missing '# rows=<m> cols=<n>' header")
    m, n = int(match.group(1)), int(match.group(2))
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != m:
        raise MatrixFormatError(f"{path}: header says {m} rows, found {len(body)}")
    try:
        rows = [[float(tok) for tok in ln.split(",")] for ln in body]
    except ValueError as exc:
        raise MatrixFormatError(f"{path}: {exc}") from None
    if any(len(r) != n for r in rows):
        raise MatrixFormatError(f"{path}: every row must have {n} entries")
    A = np.array(rows, dtype=np.float64).reshape(m, n)
    if not np.all(np.isfinite(A)):
        raise MatrixFormatError(f"{path}: non-finite entry")
    return A


def format_matrix(A) -> str:
    A = as_matrix(A)
    out = [f"# rows={A.shape[0]} cols={A.shape[1]}"]
    out += [",".join(repr(float(x)) for x in row) for row in A]
    return "\n".join(out) + "\n"


def write_matrix(path, A) -> None:
    Path(path).write_text(format_matrix(A))
