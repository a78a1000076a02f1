"""Privacy bound B and noise scale from an (epsilon, delta) budget.

The bound B is the root of

    g(x) = Phi(x/2 - eps/x) - exp(eps) * Phi(-x/2 - eps/x) = delta,

the largest Frobenius norm of the whitened query difference for which the
Gaussian privacy loss stays within budget. Two independent solvers are
provided: plain bisection on ``g`` and the branch-wise search over the
auxiliary variables ``v`` / ``u`` of the analytic Gaussian mechanism.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import log_ndtr

from dpmc.errors import DomainError
from dpmc.scalar_gauss import bisect_monotone, std_normal_cdf

DEFAULT_TOL = 1e-12
# absolute floor on the v/u bracket; B depends on sqrt(v), so a 1e-13 bracket
# near v = 0 would cost ~3e-7 in B
_AUX_XTOL = 1e-30
_AUX_TINY = 1e-300
_LOG_SWITCH = 1e-200


@dataclass(frozen=True)
class PrivacyBudget:
    """An (epsilon, delta) pair with ``epsilon >= 0`` and ``0 < delta < 1``."""

    epsilon: float
    delta: float

    def __post_init__(self):
        eps, delta = float(self.epsilon), float(self.delta)
        if not (math.isfinite(eps) and eps >= 0.0):
            raise DomainError(f"epsilon must be finite and >= 0, got {self.epsilon}")
        if not 0.0 < delta < 1.0:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "delta", delta)


@dataclass(frozen=True)
class PrivacyBound:
    """Calibrated bound ``B`` and per-element noise std ``sigma``.

    ``sigma = sensitivity * sqrt(compositions) / B``.
    """

    B: float
    sigma: float
    budget: PrivacyBudget
    sensitivity: float
    compositions: int
    method: str
    residual: float


@dataclass(frozen=True)
class RdpPoint:
    alpha: float
    epsilon_prime: float


def _scaled_cdf(eps: float, x: float) -> float:
    # exp(eps) * Phi(x) without overflowing exp for large eps
    tail = std_normal_cdf(x)
    if tail == 0.0:
        return 0.0
    if eps < 700.0:
        return math.exp(eps) * tail
    return math.exp(eps + math.log(tail))


def g_eval(x: float, epsilon: float) -> float:
    """Exact privacy profile of a Gaussian loss with whitened norm ``x``.

    Strictly increasing in ``x`` from 0 (as ``x -> 0+``) to 1.
    """
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"g is defined for x > 0, got {x}")
    if epsilon < 0.0:
        raise DomainError(f"epsilon must be >= 0, got {epsilon}")
    shift = epsilon / x
    upper, lower = 0.5 * x - shift, -0.5 * x - shift
    head = std_normal_cdf(upper)
    if head > _LOG_SWITCH:
        return head - _scaled_cdf(epsilon, lower)
    # both terms near underflow: factor out Phi(upper) in log space
    log_head = float(log_ndtr(upper))
    return math.exp(log_head) * -math.expm1(epsilon + float(log_ndtr(lower)) - log_head)


def _g_or_zero(epsilon):
    return lambda x: g_eval(x, epsilon) if x > 0.0 else 0.0


def _grow_upper(pred, start=1.0):
    hi = start
    while not pred(hi):
        hi *= 2.0
        if hi > 1e300:
            raise DomainError("could not bracket the root")
    return hi


def solve_bound_bisection(budget: PrivacyBudget, tol: float = DEFAULT_TOL) -> float:
    """Root of ``g(x) = delta`` by bisection on ``g`` itself.

    The bracket is run down to floating-point exhaustion; ``tol`` is the
    accepted residual ``|g(B) - delta|``.
    """
    eps, delta = budget.epsilon, budget.delta
    g = _g_or_zero(eps)
    hi = _grow_upper(lambda x: g(x) >= delta)
    res = bisect_monotone(g, 0.0, hi, delta, tol=min(tol, delta * 1e-10), xtol=0.0)
    if abs(res.residual) > tol:
        raise DomainError(f"residual {res.residual} exceeds tol {tol}")
    return res.root


def delta_zero(epsilon: float) -> float:
    """Branch threshold ``Phi(0) - exp(eps) Phi(-sqrt(2 eps))``."""
    return 0.5 - _scaled_cdf(epsilon, -math.sqrt(2.0 * epsilon))


def _b_plus(eps, v):
    return std_normal_cdf(math.sqrt(eps * v)) - _scaled_cdf(eps, -math.sqrt(eps * (v + 2.0)))


def _b_minus(eps, u):
    return std_normal_cdf(-math.sqrt(eps * u)) - _scaled_cdf(eps, -math.sqrt(eps * (u + 2.0)))


def solve_bound_analytic(budget: PrivacyBudget) -> float:
    """Root of ``g(x) = delta`` via the analytic Gaussian mechanism search.

    For ``delta >= delta_zero`` the supremum ``v*`` of ``{v : B+(v) <= delta}``
    gives ``alpha = sqrt(1 + v*/2) - sqrt(v*/2)``; otherwise the infimum
    ``u*`` of ``{u : B-(u) <= delta}`` gives ``alpha = sqrt(1 + u*/2) +
    sqrt(u*/2)``. The bound is ``sqrt(2 eps) / alpha``. ``epsilon = 0`` is
    delegated to :func:`solve_bound_bisection`.
    """
    eps, delta = budget.epsilon, budget.delta
    if eps == 0.0:
        return solve_bound_bisection(budget)
    d0 = delta_zero(eps)
    if delta >= d0:
        f = lambda v: _b_plus(eps, v)
        if f(0.0) == delta:
            v_star = 0.0
        else:
            hi = _grow_upper(lambda v: f(v) > delta)
            v_star = bisect_monotone(f, 0.0, hi, delta, tol=_AUX_TINY,
                                     xtol=_AUX_XTOL).root
        a, b = math.sqrt(1.0 + 0.5 * v_star), math.sqrt(0.5 * v_star)
        # alpha = a - b, rewritten without cancellation
        return math.sqrt(2.0 * eps) * (a + b)
    f = lambda u: -_b_minus(eps, u)
    hi = _grow_upper(lambda u: -f(u) <= delta)
    u_star = bisect_monotone(f, 0.0, hi, -delta, tol=_AUX_TINY,
                             xtol=_AUX_XTOL).root
    alpha = math.sqrt(1.0 + 0.5 * u_star) + math.sqrt(0.5 * u_star)
    return math.sqrt(2.0 * eps) / alpha


def calibrate(
    sensitivity: float,
    budget: PrivacyBudget,
    T: int = 1,
    method: str = "auto",
) -> PrivacyBound:
    """Noise scale for ``T`` composed releases of a query with l2-sensitivity
    ``sensitivity``.

    Parameters
    ----------
    sensitivity : float
        l2 (Frobenius) sensitivity of the matrix-valued query.
    budget : PrivacyBudget
        Target guarantee for the whole composition.
    T : int
        Number of composed mechanisms.
    method : {"auto", "analytic", "bisection"}
        Solver for B. ``"auto"`` uses the analytic search for ``epsilon > 0``
        and bisection at ``epsilon = 0``.

    Returns
    -------
    PrivacyBound
        With ``sigma = sensitivity * sqrt(T) / B``. The result does not
        depend on the matrix dimensions.
    """
    sensitivity = float(sensitivity)
    if not (math.isfinite(sensitivity) and sensitivity > 0.0):
        raise DomainError(f"sensitivity must be positive, got {sensitivity}")
    if int(T) != T or T < 1:
        raise DomainError(f"T must be an integer >= 1, got {T}")
    T = int(T)
    if method == "auto":
        method = "analytic" if budget.epsilon > 0.0 else "bisection"
    if method == "analytic" and budget.epsilon > 0.0:
        B = solve_bound_analytic(budget)
    elif method in ("analytic", "bisection"):
        method = "bisection"
        B = solve_bound_bisection(budget)
    else:
        raise DomainError(f"unknown method {method!r}")
    return PrivacyBound(
        B=B,
        sigma=sensitivity * math.sqrt(T) / B,
        budget=budget,
        sensitivity=sensitivity,
        compositions=T,
        method=method,
        residual=g_eval(B, budget.epsilon) - budget.delta,
    )


def rdp_epsilon(alpha: float, B: float) -> RdpPoint:
    """Renyi-DP order ``alpha`` guarantee implied by bound ``B``:

    eps' = (2 alpha + 1) B / (2 (alpha - 1)) * exp(B (alpha^2 + alpha) / 2)
    """
    alpha, B = float(alpha), float(B)
    if not alpha > 1.0:
        raise DomainError(f"alpha must exceed 1, got {alpha}")
    if not (B >= 0.0 and math.isfinite(B)):
        raise DomainError(f"B must be finite and >= 0, got {B}")
    try:
        growth = math.exp(0.5 * B * (alpha * alpha + alpha))
    except OverflowError:
        growth = math.inf
    eps_prime = (2.0 * alpha + 1.0) * B / (2.0 * (alpha - 1.0)) * growth if B > 0 else 0.0
    return RdpPoint(alpha=alpha, epsilon_prime=eps_prime)
