"""Pure-Python/numpy versions of the compiled kernels in ``_ckernels``.

Selected automatically when the extension is unavailable, or on request with
``DPMC_BACKEND=python``. Results agree with the compiled kernels to rounding.
"""
import numpy as np
from scipy.special import erfc

from dpmc.scalar_gauss import _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D, _P_LOW

_SQRT1_2 = 0.7071067811865476
_INV_SQRT_2PI = 0.3989422804014327


def _horner(coeffs, t):
    out = np.zeros_like(t)
    for c in coeffs:
        out = out * t + c
    return out


def _lower_icdf(q):
    x = np.empty_like(q)
    tail = q < _P_LOW
    t = np.sqrt(-2.0 * np.log(q[tail]))
    x[tail] = _horner(_ACKLAM_C, t) / (_horner(_ACKLAM_D, t) * t + 1.0)
    r = q[~tail] - 0.5
    s = r * r
    x[~tail] = _horner(_ACKLAM_A, s) * r / (_horner(_ACKLAM_B, s) * s + 1.0)
    for _ in range(2):
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
        err = 0.5 * erfc(-x * _SQRT1_2) - q
        step = np.divide(err, pdf, out=np.zeros_like(x), where=pdf > 0.0)
        x = x - step
    return x


def norm_icdf(u):
    u = np.asarray(u, dtype=np.float64)
    upper = u > 0.5
    q = np.where(upper, 1.0 - u, u)
    x = _lower_icdf(q)
    return np.where(upper, -x, x)


def jacobi_sweeps(G, V, tol, max_sweeps, floor=0.0):
    k = G.shape[0]
    for sweep in range(max_sweeps):
        rotated = False
        for i in range(k - 1):
            for j in range(i + 1, k):
                gi, gj = G[i], G[j]
                alpha = float(gi @ gi)
                beta = float(gj @ gj)
                gamma = float(gi @ gj)
                if alpha <= floor or beta <= floor:
                    continue
                if gamma == 0.0 or abs(gamma) <= tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                if zeta >= 0.0:
                    t = 1.0 / (zeta + np.sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                G[i], G[j] = c * gi - s * gj, s * gi + c * gj
                vi, vj = V[i].copy(), V[j].copy()
                V[i], V[j] = c * vi - s * vj, s * vi + c * vj
        if not rotated:
            return sweep + 1
    return -1


def grid_min(a, s1c, b, s2c, threshold, chunk=2048):
    best = np.inf
    for start in range(0, a.shape[0], chunk):
        sl = slice(start, start + chunk)
        ok = np.all(s1c[sl, None, :] * s2c[None, :, :] >= threshold, axis=2)
        if not ok.any():
            continue
        vals = np.where(ok, a[sl, None] * b[None, :], np.inf)
        best = min(best, float(vals.min()))
    return best
