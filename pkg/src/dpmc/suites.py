"""Named verification suites run by ``dpmc verify``."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from dpmc.calibration import (PrivacyBudget, calibrate, g_eval,
                              solve_bound_analytic, solve_bound_bisection)
from dpmc.matnorm import CovariancePair, make_rng, sample_matrix_normal_batch
from dpmc.mechanisms import (MechanismSpec, UtilitySubspace, expected_error,
                             optimal_design)
from dpmc.verification import (PrivacyLossParams, check_dp, design_grid_oracle,
                               monte_carlo_expected_error,
                               profile_delta, singular_inequality_gap)

EPS_GRID = (0.01, 0.05, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0)
DELTA_GRID = (1e-8, 1e-6, 1e-5, 1e-3, 0.1)
COMPOSITIONS = (1, 2, 4, 16, 256)


@dataclass
class SuiteConfig:
    seed: int = 0
    samples: int = 20000
    cov_scale: float = 1.0
    budget: PrivacyBudget = PrivacyBudget(1.0, 1e-5)
    sensitivity: float = 1.0


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str


def _budgets():
    return [PrivacyBudget(e, d) for e in EPS_GRID for d in DELTA_GRID]


def suite_solver(cfg: SuiteConfig) -> SuiteResult:
    gap = res = 0.0
    for b in _budgets():
        a = solve_bound_analytic(b)
        gap = max(gap, abs(a - solve_bound_bisection(b)))
        res = max(res, abs(g_eval(a, b.epsilon) - b.delta))
    return SuiteResult("solver", gap <= 1e-9 and res <= 1e-9,
                       f"max |analytic-bisection|={gap:.3e}, max residual={res:.3e}")


def suite_profile(cfg: SuiteConfig) -> SuiteResult:
    worst = 0.0
    for b in _budgets():
        B = solve_bound_analytic(b)
        d = profile_delta(PrivacyLossParams(B * B / 2), b.epsilon).delta_achieved
        worst = max(worst, abs(d - b.delta))
    return SuiteResult("profile", worst <= 1e-9, f"max |profile-delta|={worst:.3e}")


def suite_composition(cfg: SuiteConfig) -> SuiteResult:
    b, s2 = cfg.budget, cfg.sensitivity
    worst = 0.0
    for T in COMPOSITIONS:
        sigma = calibrate(s2, b, T).sigma
        eta = (s2 / sigma) ** 2 / 2
        d = profile_delta(PrivacyLossParams(eta, T), b.epsilon).delta_achieved
        worst = max(worst, abs(d - b.delta))
    return SuiteResult("composition", worst <= 1e-9, f"max |profile-delta|={worst:.3e}")


def suite_tightness(cfg: SuiteConfig) -> SuiteResult:
    b, s2 = cfg.budget, cfg.sensitivity
    sigma = calibrate(s2, b).sigma
    at = check_dp(CovariancePair.iid(3, 2, sigma), s2, b)
    below = check_dp(CovariancePair.iid(3, 2, 0.999 * sigma), s2, b)
    ok = (at.holds and abs(at.worst_delta - b.delta) <= 1e-9
          and not below.holds and below.worst_delta > b.delta)
    return SuiteResult("tightness", ok, f"delta at bound={at.worst_delta:.6e}, "
                       f"at 0.999 sigma={below.worst_delta:.6e}")


def suite_dp(cfg: SuiteConfig) -> SuiteResult:
    b, s2 = cfg.budget, cfg.sensitivity
    sigma = calibrate(s2, b).sigma
    cov = CovariancePair.iid(4, 3, math.sqrt(sigma), math.sqrt(sigma)).scaled(cfg.cov_scale)
    chk = check_dp(cov, s2, b)
    consistent = chk.holds == (chk.worst_delta <= b.delta + 1e-9)
    return SuiteResult("dp", chk.holds and consistent,
                       f"check_dp holds={chk.holds} slack={chk.slack:.3e} "
                       f"worst delta={chk.worst_delta:.3e}")


def suite_inequality(cfg: SuiteConfig) -> SuiteResult:
    rng = np.random.default_rng(cfg.seed)
    worst = -math.inf
    for _ in range(1000):
        m, n = rng.integers(1, 7, size=2)
        g = singular_inequality_gap(rng.normal(size=(m, m)), rng.normal(size=(m, n)),
                                    rng.normal(size=(n, n)))
        worst = max(worst, g.lhs - g.rhs)
    return SuiteResult("inequality", worst <= 1e-9, f"max lhs-rhs={worst:.3e}")


def _random_cov(rng, m, n):
    return CovariancePair(rng.normal(size=(m, m)) + 2 * np.eye(m),
                          rng.normal(size=(n, n)) + 2 * np.eye(n))


def suite_expected_error(cfg: SuiteConfig) -> SuiteResult:
    rng = np.random.default_rng(cfg.seed)
    stream = make_rng(cfg.seed)
    worst = 0.0
    for _ in range(10):
        m, n = rng.integers(1, 5, size=2)
        sub = UtilitySubspace(rng.normal(size=(rng.integers(1, 5), m)),
                              rng.normal(size=(rng.integers(1, 5), n)))
        cov = _random_cov(rng, m, n)
        est = monte_carlo_expected_error(sub, cov, cfg.samples, stream)
        worst = max(worst, abs(est.mean - expected_error(sub, cov)) / est.stderr)
    return SuiteResult("expected_error", worst <= 4.0, f"max z-score={worst:.2f}")


def suite_design(cfg: SuiteConfig) -> SuiteResult:
    rng = np.random.default_rng(cfg.seed)
    b, s2 = cfg.budget, cfg.sensitivity
    B = solve_bound_analytic(b)
    formula_gap = oracle_gap = 0.0
    for _ in range(50):
        m, n = rng.integers(1, 5, size=2)
        sub = UtilitySubspace(rng.normal(size=(rng.integers(1, 5), m)),
                              rng.normal(size=(rng.integers(1, 5), n)))
        res = optimal_design(sub, MechanismSpec(s2, m, n, b))
        formula_gap = max(formula_gap, abs(res.objective - res.minimum_formula)
                          / max(1.0, res.minimum_formula))
        oracle = design_grid_oracle(sub, s2, B, 9)
        oracle_gap = max(oracle_gap, (res.objective - oracle) / oracle)
    ok = formula_gap <= 1e-10 and oracle_gap <= 1e-9
    return SuiteResult("design", ok, f"max scaled |objective-formula|={formula_gap:.3e}, "
                       f"max relative excess over oracle={oracle_gap:.3e}")


def suite_sampler(cfg: SuiteConfig) -> SuiteResult:
    cov = CovariancePair(np.diag([2.0, 1.0]), np.eye(2))
    Z = sample_matrix_normal_batch(cfg.samples, np.zeros((2, 2)), cov, make_rng(cfg.seed))
    v = Z.transpose(0, 2, 1).reshape(cfg.samples, 4)
    target = np.kron(cov.Sigma2, cov.Sigma1)
    prods = v[:, :, None] * v[:, None, :]
    z = np.abs(prods.mean(axis=0) - target) / (prods.std(axis=0, ddof=1) / math.sqrt(cfg.samples))
    return SuiteResult("sampler", bool(z.max() <= 5.0), f"max z-score={z.max():.2f}")


SUITES: dict[str, Callable[[SuiteConfig], SuiteResult]] = {
    "solver": suite_solver,
    "profile": suite_profile,
    "composition": suite_composition,
    "tightness": suite_tightness,
    "dp": suite_dp,
    "inequality": suite_inequality,
    "expected_error": suite_expected_error,
    "design": suite_design,
    "sampler": suite_sampler,
}


def run_suites(names, cfg: SuiteConfig) -> list[SuiteResult]:
    return [SUITES[name](cfg) for name in names]
