"""Executable checks: exact privacy profiles, the singular-value DP
certificate, randomized adversaries, Monte Carlo error estimates and a
brute-force search over the design program's feasible set."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from dpmc._backend import kernels
from dpmc.calibration import PrivacyBudget, calibrate, g_eval
from dpmc.errors import DomainError, ScaleError, ShapeError
from dpmc.matnorm import (CovariancePair, as_matrix, delta_prime_norm,
                          sample_snd_batch, singular_values, svd)
from dpmc.mechanisms import UtilitySubspace

DP_ATOL = 1e-12
ORACLE_MAX_DIM = 4
MIN_GRID_POINTS = 8


@dataclass(frozen=True)
class PrivacyLossParams:
    """The privacy loss of ``T`` composed releases is ``N(T eta, 2 T eta)``."""

    eta: float
    compositions: int = 1

    def __post_init__(self):
        if not self.eta >= 0:
            raise DomainError(f"eta must be >= 0, got {self.eta}")
        if int(self.compositions) != self.compositions or self.compositions < 1:
            raise DomainError(f"compositions must be >= 1, got {self.compositions}")


@dataclass(frozen=True)
class ProfilePoint:
    epsilon: float
    delta_achieved: float


@dataclass(frozen=True)
class DpCheck:
    holds: bool
    slack: float
    threshold: float
    worst_delta: float


@dataclass(frozen=True)
class InequalityGap:
    lhs: float
    rhs: float


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    stderr: float
    samples: int


def privacy_loss_params(Delta, cov: CovariancePair, T: int = 1) -> PrivacyLossParams:
    """``eta = ||U1^{-1} Delta U2^{-T}||_F^2 / 2``."""
    return PrivacyLossParams(eta=0.5 * delta_prime_norm(Delta, cov) ** 2, compositions=T)


def profile_delta(params: PrivacyLossParams, epsilon: float) -> ProfilePoint:
    """Smallest delta at which the Gaussian loss is (epsilon, delta)-DP:
    ``Pr[L >= eps] - e^eps Pr[L <= -eps]``, clamped to [0, 1]."""
    if not epsilon >= 0:
        raise DomainError(f"epsilon must be >= 0, got {epsilon}")
    total = params.eta * params.compositions
    if total == 0.0:
        return ProfilePoint(epsilon, 0.0)
    d = g_eval(math.sqrt(2.0 * total), epsilon)
    return ProfilePoint(epsilon, min(1.0, max(0.0, d)))


def worst_case_difference(cov: CovariancePair, s2: float) -> np.ndarray:
    """Rank-one ``Delta`` of norm ``s2`` along the weakest directions of
    ``U1`` and ``U2``; it maximizes the whitened norm over ``||Delta|| <= s2``."""
    sp1, sp2 = svd(cov.U1), svd(cov.U2)
    return s2 * np.outer(sp1.left[:, -1], sp2.left[:, -1])


def check_dp(cov: CovariancePair, s2: float, budget: PrivacyBudget, T: int = 1) -> DpCheck:
    """Singular-value certificate ``sigma_m(U1) sigma_n(U2) >= s2 sqrt(T) / B``.

    ``worst_delta`` is the exact profile at the worst-case difference; it is
    at most ``delta`` exactly when the certificate holds.
    """
    threshold = calibrate(s2, budget, T).sigma
    slack = cov.min_product - threshold
    Delta = worst_case_difference(cov, s2)
    worst = profile_delta(privacy_loss_params(Delta, cov, T), budget.epsilon).delta_achieved
    return DpCheck(holds=slack >= -DP_ATOL, slack=slack, threshold=threshold,
                   worst_delta=worst)


def random_adversary(cov: CovariancePair, s2: float, budget: PrivacyBudget,
                     T: int, trials: int, rng: np.random.Generator) -> float:
    """Largest profile delta over ``trials`` random differences with
    ``||Delta||_F <= s2``. Supplements, never replaces, :func:`check_dp`."""
    m, n = cov.shape
    worst = 0.0
    for D in sample_snd_batch(trials, m, n, rng):
        radius = s2 * rng.uniform() ** (1.0 / (m * n))
        D = D * (radius / np.linalg.norm(D))
        d = profile_delta(privacy_loss_params(D, cov, T), budget.epsilon).delta_achieved
        worst = max(worst, d)
    return worst


def rank_bound_sq(Delta, cov: CovariancePair) -> float:
    """``sum_i sigma_i^2(Delta) / (sigma_{m-i+1}^2(U1) sigma_{n-i+1}^2(U2))``."""
    sd = singular_values(Delta)
    r = sd.size
    s1 = cov.sigma1[::-1][:r]
    s2 = cov.sigma2[::-1][:r]
    return float(np.sum(sd ** 2 / (s1 ** 2 * s2 ** 2)))


def singular_inequality_gap(A, B, C) -> InequalityGap:
    """Both sides of ``||ABC||_F^2 <= sum_i sigma_i^2(A) sigma_i^2(B) sigma_i^2(C)``."""
    A, B, C = as_matrix(A, "A"), as_matrix(B, "B"), as_matrix(C, "C")
    m, n = B.shape
    if A.shape != (m, m) or C.shape != (n, n):
        raise ShapeError(f"need A {m}x{m}, C {n}x{n}; got {A.shape}, {C.shape}")
    r = min(m, n)
    lhs = float(np.linalg.norm(A @ B @ C, "fro") ** 2)
    sa, sb, sc = singular_values(A)[:r], singular_values(B)[:r], singular_values(C)[:r]
    return InequalityGap(lhs=lhs, rhs=float(np.sum(sa ** 2 * sb ** 2 * sc ** 2)))


def monte_carlo_expected_error(sub: UtilitySubspace, cov: CovariancePair, samples: int,
                               rng: np.random.Generator, batch: int = 20000
                               ) -> MonteCarloEstimate:
    """Sample mean and standard error of ``||W1 U1 N U2^T W2^T||_F^2``."""
    if samples < 100:
        raise DomainError(f"need at least 100 samples, got {samples}")
    if sub.shape != cov.shape:
        raise ShapeError(f"subspace acts on {sub.shape}, covariance is {cov.shape}")
    m, n = cov.shape
    L = sub.W1 @ cov.U1
    R = sub.W2 @ cov.U2
    total = total_sq = 0.0
    done = 0
    while done < samples:
        k = min(batch, samples - done)
        N = sample_snd_batch(k, m, n, rng)
        Y = L @ N @ R.T
        vals = np.einsum("kij,kij->k", Y, Y)
        total += math.fsum(vals)
        total_sq += math.fsum(vals * vals)
        done += k
    mean = total / samples
    var = max(0.0, (total_sq - samples * mean * mean) / (samples - 1))
    return MonteCarloEstimate(mean=mean, stderr=math.sqrt(var / samples), samples=samples)


def _spectra_grid(values: np.ndarray, dim: int) -> np.ndarray:
    # all non-increasing length-dim sequences drawn from ascending grid values
    idx = np.array(list(itertools.combinations_with_replacement(range(values.size), dim)))
    return values[idx][:, ::-1].copy()


def _padded_sq(W: np.ndarray, dim: int) -> np.ndarray:
    s = np.zeros(dim)
    sv = singular_values(W)[:dim]
    s[:sv.size] = sv ** 2
    return s


def _minimal_partner(S: np.ndarray, c: float, r: int, dim: int) -> np.ndarray:
    # smallest non-increasing partner spectrum meeting every per-index product
    low = np.zeros((S.shape[0], dim))
    low[:, dim - r:] = c / S[:, S.shape[1] - r:]
    return np.maximum.accumulate(low[:, ::-1], axis=1)[:, ::-1]


def grid_relative_slack(grid_points: int) -> float:
    """Relative objective gap one grid step can cause (objective is quartic)."""
    ratio = 100.0 ** (1.0 / (grid_points - 1))
    return ratio ** 4 - 1.0


def design_grid_oracle(sub: UtilitySubspace, s2: float, Bval: float,
                       grid_points: int = 9) -> float:
    """Brute-force minimum of the weighted-error design program.

    Minimizes ``(sum_i sigma_i^2(W1) sigma_{m-i+1}^2(U1)) *
    (sum_i sigma_i^2(W2) sigma_{n-i+1}^2(U2))`` over non-increasing spectra
    subject to ``sigma_{m-i+1}(U1) sigma_{n-i+1}(U2) >= s2 / Bval`` for
    ``i <= min(m, n)``. Candidates are every pair of log-spaced grid spectra
    on ``[sqrt(c)/10, 10 sqrt(c)]`` with ``c = s2 / Bval``, plus each grid
    spectrum paired with its minimal feasible partner.
    """
    m, n = sub.shape
    if m > ORACLE_MAX_DIM or n > ORACLE_MAX_DIM:
        raise ScaleError(f"oracle supports dims <= {ORACLE_MAX_DIM}, got ({m}, {n})")
    if grid_points < MIN_GRID_POINTS:
        raise DomainError(f"need at least {MIN_GRID_POINTS} grid points, got {grid_points}")
    if not (s2 > 0 and Bval > 0):
        raise DomainError("s2 and Bval must be positive")
    c = s2 / Bval
    r = min(m, n)
    root = math.sqrt(c)
    grid = np.geomspace(root / 10.0, root * 10.0, grid_points)
    w1, w2 = _padded_sq(sub.W1, m), _padded_sq(sub.W2, n)

    S1, S2 = _spectra_grid(grid, m), _spectra_grid(grid, n)
    a = (S1[:, ::-1] ** 2) @ w1
    b = (S2[:, ::-1] ** 2) @ w2
    s1c = np.ascontiguousarray(S1[:, ::-1][:, :r])
    s2c = np.ascontiguousarray(S2[:, ::-1][:, :r])
    threshold = c * (1.0 - 1e-12)
    best = kernels.grid_min(a, s1c, b, s2c, threshold)

    P2 = _minimal_partner(S1, c, r, n)
    best = min(best, float(np.min(a * ((P2[:, ::-1] ** 2) @ w2))))
    P1 = _minimal_partner(S2, c, r, m)
    best = min(best, float(np.min(b * ((P1[:, ::-1] ** 2) @ w1))))
    return best
