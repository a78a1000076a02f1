"""The IMGM matrix Gaussian mechanism, the MVG comparator bound, and
utility-optimal covariance design for linear post-processing."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from dpmc.calibration import PrivacyBound, PrivacyBudget, calibrate
from dpmc.errors import DegenerateSubspaceError, DomainError, ShapeError
from dpmc.matnorm import CovariancePair, as_matrix, sample_snd, singular_values


@dataclass(frozen=True)
class MechanismSpec:
    """Query sensitivity, output shape, budget and composition count."""

    sensitivity: float
    rows: int
    cols: int
    budget: PrivacyBudget
    compositions: int = 1

    def __post_init__(self):
        if not self.sensitivity > 0:
            raise DomainError(f"sensitivity must be positive, got {self.sensitivity}")
        if self.rows < 1 or self.cols < 1:
            raise DomainError(f"dimensions must be >= 1, got ({self.rows}, {self.cols})")
        if int(self.compositions) != self.compositions or self.compositions < 1:
            raise DomainError(f"compositions must be an integer >= 1, got {self.compositions}")

    def bound(self) -> PrivacyBound:
        return calibrate(self.sensitivity, self.budget, self.compositions)


def imgm_perturb(fX, spec: MechanismSpec, rng: np.random.Generator) -> np.ndarray:
    """Release ``fX + sigma * N`` with ``N`` i.i.d. standard normal and
    ``sigma = s2 * sqrt(T) / B``."""
    fX = as_matrix(fX, "fX")
    if fX.shape != (spec.rows, spec.cols):
        raise ShapeError(f"query output has shape {fX.shape}, spec says "
                         f"({spec.rows}, {spec.cols})")
    sigma = spec.bound().sigma
    return fX + sigma * sample_snd(spec.rows, spec.cols, rng)


# MVG comparator

@dataclass(frozen=True)
class MvgParams:
    """Inputs of the MVG sufficient condition. ``gamma`` is the supremum of
    ``||f(X)||_F`` over all datasets, so ``gamma >= s2 / 2``."""

    s2: float
    gamma: float
    m: int
    n: int
    budget: PrivacyBudget

    def __post_init__(self):
        if not self.s2 > 0:
            raise DomainError(f"s2 must be positive, got {self.s2}")
        if not self.gamma >= self.s2 / 2:
            raise DomainError(f"gamma must be >= s2/2, got {self.gamma}")
        if self.m < 1 or self.n < 1:
            raise DomainError(f"dimensions must be >= 1, got ({self.m}, {self.n})")


def harmonic(r: int, p: float = 1.0) -> float:
    """Generalized harmonic number ``sum_{i=1}^r i^{-p}`` (correctly rounded sum)."""
    if int(r) != r or r < 1:
        raise DomainError(f"r must be an integer >= 1, got {r}")
    if p < 0:
        raise DomainError(f"p must be >= 0, got {p}")
    return math.fsum(i ** -p for i in range(1, int(r) + 1))


def mvg_coefficients(p: MvgParams) -> tuple[float, float, float]:
    """``(alpha0, beta0, zeta(delta))`` of the MVG condition."""
    mn = p.m * p.n
    r = min(p.m, p.n)
    h1, hh = harmonic(r, 1.0), harmonic(r, 0.5)
    log_delta = math.log(p.budget.delta)
    zeta = 2.0 * math.sqrt(-mn * log_delta) - 2.0 * log_delta + mn
    alpha0 = (h1 + hh) * p.gamma ** 2 + 2.0 * h1 * p.gamma * p.s2
    beta0 = 2.0 * mn ** 0.25 * h1 * zeta * p.s2
    return alpha0, beta0, zeta


def mvg_singular_bound(p: MvgParams) -> float:
    """Upper bound on ``||sigma(Sigma1^-1)||_2 ||sigma(Sigma2^-1)||_2``.

    Evaluated as ``16 eps^2 / (beta0 + sqrt(beta0^2 + 8 alpha0 eps))^2``,
    the cancellation-free form of ``(-beta0 + sqrt(...))^2 / (4 alpha0^2)``.
    """
    eps = p.budget.epsilon
    if not eps > 0:
        raise DomainError("the MVG condition needs epsilon > 0")
    alpha0, beta0, _ = mvg_coefficients(p)
    root = math.sqrt(beta0 * beta0 + 8.0 * alpha0 * eps)
    return 16.0 * eps * eps / (beta0 + root) ** 2


def mvg_iid_sigma(bound: float, m: int, n: int) -> float:
    """Per-element std ``(mn)^{1/4} / sqrt(bound)`` of isotropic MVG noise
    that exactly meets ``bound``."""
    if not bound > 0:
        raise DomainError(f"bound must be positive, got {bound}")
    return (m * n) ** 0.25 / math.sqrt(bound)


# utility-optimal design

@dataclass(frozen=True, eq=False)
class UtilitySubspace:
    """Linear post-processing ``Y = W1 f(X) W2^T``."""

    W1: np.ndarray
    W2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "W1", as_matrix(self.W1, "W1"))
        object.__setattr__(self, "W2", as_matrix(self.W2, "W2"))

    @property
    def shape(self) -> tuple[int, int]:
        """Shape ``(m, n)`` of the query output the subspace acts on."""
        return self.W1.shape[1], self.W2.shape[1]


@dataclass(frozen=True)
class DesignResult:
    cov: CovariancePair
    objective: float
    minimum_formula: float


def expected_error(sub: UtilitySubspace, cov: CovariancePair) -> float:
    """``E||W1 U1 N U2^T W2^T||_F^2 = ||W1 U1||_F^2 ||W2 U2||_F^2``."""
    if sub.shape != cov.shape:
        raise ShapeError(f"subspace acts on {sub.shape}, covariance is {cov.shape}")
    a = np.linalg.norm(sub.W1 @ cov.U1, "fro") ** 2
    b = np.linalg.norm(sub.W2 @ cov.U2, "fro") ** 2
    return float(a * b)


def design_minimum(sub: UtilitySubspace, level: float) -> float:
    """Closed-form minimum ``level^2 * sum sigma_i^2(W1) * sum sigma_i^2(W2)``
    where ``level`` is the required singular-value product."""
    s1, s2 = singular_values(sub.W1), singular_values(sub.W2)
    return float(level ** 2 * math.fsum(s1 ** 2) * math.fsum(s2 ** 2))


def optimal_design(sub: UtilitySubspace, spec: MechanismSpec) -> DesignResult:
    """Covariance factors minimizing the expected weighted error under DP.

    All singular values of each factor are equal and their product is
    ``s2 sqrt(T) / B``. The objective does not depend on how that product is
    split between the factors, so both get its square root; directions are
    immaterial and set to identity.
    """
    m, n = sub.shape
    if (m, n) != (spec.rows, spec.cols):
        raise ShapeError(f"subspace acts on {(m, n)}, spec dims are "
                         f"({spec.rows}, {spec.cols})")
    if not (np.any(sub.W1) and np.any(sub.W2)):
        raise DegenerateSubspaceError("utility subspace has no nonzero singular value")
    level = spec.bound().sigma
    scale = math.sqrt(level)
    cov = CovariancePair.iid(m, n, scale, scale)
    return DesignResult(cov=cov, objective=expected_error(sub, cov),
                        minimum_formula=design_minimum(sub, level))
