# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: one-sided Jacobi rotations, vectorized inverse normal
CDF, and the brute-force design-grid scan.

Each function mirrors a function of the same name in ``_pykernels``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, exp, erfc, fabs, INFINITY

cnp.import_array()

cdef double _SQRT1_2 = 0.7071067811865476
cdef double _INV_SQRT_2PI = 0.3989422804014327
cdef double _P_LOW = 0.02425

cdef double _A0 = -3.969683028665376e+01
cdef double _A1 = 2.209460984245205e+02
cdef double _A2 = -2.759285104469687e+02
cdef double _A3 = 1.383577518672690e+02
cdef double _A4 = -3.066479806614716e+01
cdef double _A5 = 2.506628277459239e+00
cdef double _B0 = -5.447609879822406e+01
cdef double _B1 = 1.615858368580409e+02
cdef double _B2 = -1.556989798598866e+02
cdef double _B3 = 6.680131188771972e+01
cdef double _B4 = -1.328068155288572e+01
cdef double _C0 = -7.784894002430293e-03
cdef double _C1 = -3.223964580411365e-01
cdef double _C2 = -2.400758277161838e+00
cdef double _C3 = -2.549732539343734e+00
cdef double _C4 = 4.374664141464968e+00
cdef double _C5 = 2.938163982698783e+00
cdef double _D0 = 7.784695709041462e-03
cdef double _D1 = 3.224671290700398e-01
cdef double _D2 = 2.445134137142996e+00
cdef double _D3 = 3.754408661907416e+00


cdef inline double _lower_icdf(double q) nogil:
    # q in (0, 0.5]; returns x <= 0 with Phi(x) = q
    cdef double x, t, r, s, pdf, err
    cdef int k
    if q < _P_LOW:
        t = sqrt(-2.0 * log(q))
        x = (((((_C0 * t + _C1) * t + _C2) * t + _C3) * t + _C4) * t + _C5) / \
            ((((_D0 * t + _D1) * t + _D2) * t + _D3) * t + 1.0)
    else:
        r = q - 0.5
        s = r * r
        x = (((((_A0 * s + _A1) * s + _A2) * s + _A3) * s + _A4) * s + _A5) * r / \
            (((((_B0 * s + _B1) * s + _B2) * s + _B3) * s + _B4) * s + 1.0)
    for k in range(2):
        pdf = _INV_SQRT_2PI * exp(-0.5 * x * x)
        if pdf > 0.0:
            err = 0.5 * erfc(-x * _SQRT1_2) - q
            x = x - err / pdf
    return x


def norm_icdf(cnp.ndarray[cnp.float64_t, ndim=1] u):
    """Elementwise inverse standard normal CDF of values in (0, 1)."""
    cdef Py_ssize_t i, n = u.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] uv = u
    cdef double[::1] ov = out
    cdef double p
    with nogil:
        for i in range(n):
            p = uv[i]
            if p > 0.5:
                ov[i] = -_lower_icdf(1.0 - p)
            else:
                ov[i] = _lower_icdf(p)
    return out


def jacobi_sweeps(double[:, ::1] G, double[:, ::1] V, double tol, int max_sweeps,
                  double floor=0.0):
    """Orthogonalize the rows of ``G`` in place by one-sided Jacobi rotations.

    Pairs involving a row whose squared norm is at most ``floor`` are left
    alone. Rotations are accumulated into the rows of ``V``. Returns the number of
    sweeps performed, or -1 if ``max_sweeps`` was reached without convergence.
    """
    cdef Py_ssize_t k = G.shape[0], p = G.shape[1]
    cdef Py_ssize_t i, j, l
    cdef double alpha, beta, gamma, zeta, t, c, s, gi, gj
    cdef int sweep, rotated, done = -1
    with nogil:
        for sweep in range(max_sweeps):
            rotated = 0
            for i in range(k - 1):
                for j in range(i + 1, k):
                    alpha = 0.0
                    beta = 0.0
                    gamma = 0.0
                    for l in range(p):
                        alpha = alpha + G[i, l] * G[i, l]
                        beta = beta + G[j, l] * G[j, l]
                        gamma = gamma + G[i, l] * G[j, l]
                    if alpha <= floor or beta <= floor:
                        continue
                    if gamma == 0.0 or fabs(gamma) <= tol * sqrt(alpha * beta):
                        continue
                    rotated = 1
                    zeta = (beta - alpha) / (2.0 * gamma)
                    if zeta >= 0.0:
                        t = 1.0 / (zeta + sqrt(1.0 + zeta * zeta))
                    else:
                        t = -1.0 / (-zeta + sqrt(1.0 + zeta * zeta))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = c * t
                    for l in range(p):
                        gi = G[i, l]
                        gj = G[j, l]
                        G[i, l] = c * gi - s * gj
                        G[j, l] = s * gi + c * gj
                    for l in range(k):
                        gi = V[i, l]
                        gj = V[j, l]
                        V[i, l] = c * gi - s * gj
                        V[j, l] = s * gi + c * gj
            if not rotated:
                done = sweep + 1
                break
    return done


def grid_min(double[::1] a, double[:, ::1] s1c, double[::1] b, double[:, ::1] s2c,
             double threshold):
    """Minimum of ``a[k] * b[l]`` over pairs whose constrained singular-value
    products ``s1c[k, i] * s2c[l, i]`` all reach ``threshold``."""
    cdef Py_ssize_t k1 = a.shape[0], k2 = b.shape[0], r = s1c.shape[1]
    cdef Py_ssize_t k, l, i
    cdef double best = INFINITY, val
    cdef bint ok
    with nogil:
        for k in range(k1):
            for l in range(k2):
                val = a[k] * b[l]
                if val >= best:
                    continue
                ok = True
                for i in range(r):
                    if s1c[k, i] * s2c[l, i] < threshold:
                        ok = False
                        break
                if ok:
                    best = val
    return best
