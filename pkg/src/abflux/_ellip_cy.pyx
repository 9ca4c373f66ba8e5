# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical kernels: complete elliptic integrals (AGM, modulus
convention) and the adaptive finite-solenoid profile integral.

Mirrors ``abflux._ellip_py`` exactly; see that module for the formulas,
the small-k series switch and the tolerance semantics.
"""

from libc.math cimport fabs, sqrt
from libc.stdlib cimport free, malloc

import numpy as np

cdef double _PI = 3.141592653589793
cdef double _EPS = 2.220446049250313e-16

cdef double[8] _XGK = [
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.000000000000000,
]
cdef double[8] _WGK = [
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
]
cdef double[4] _WG = [
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
]

cdef double _SERIES_K2 = 5e-3
cdef double _B0 = 0.125
cdef double _B1 = 3.0 / 32.0
cdef double _B2 = 75.0 / 1024.0
cdef double _B3 = 245.0 / 4096.0
cdef double _B4 = 6615.0 / 131072.0
# saturate the modulus just below 1 so near-border points stay finite
cdef double _K2_MAX = 1.0 - 1e-14


cdef void _ke_agm(double k2, double *big_k, double *big_e) noexcept nogil:
    cdef double a = 1.0
    cdef double b = sqrt(1.0 - k2)
    cdef double s = 0.5 * k2
    cdef double p = 1.0
    cdef double c, t
    while fabs(a - b) > 4.0 * _EPS * a:
        c = 0.5 * (a - b)
        s += p * c * c
        t = 0.5 * (a + b)
        b = sqrt(a * b)
        a = t
        p *= 2.0
    big_k[0] = _PI / (a + b)
    big_e[0] = big_k[0] * (1.0 - s)


def ellipk(double k):
    """Complete elliptic integral of the first kind, modulus convention."""
    if k < 0.0:
        raise ValueError("elliptic modulus must be nonnegative")
    if k >= 1.0:
        raise ValueError(
            "K(k) has a logarithmic singularity at k = 1; modulus must satisfy k < 1"
        )
    cdef double kk, ee
    _ke_agm(k * k, &kk, &ee)
    return kk


def ellipe(double k):
    """Complete elliptic integral of the second kind, modulus convention."""
    if k < 0.0:
        raise ValueError("elliptic modulus must be nonnegative")
    if k > 1.0:
        raise ValueError("E(k) requires 0 <= k <= 1")
    if k == 1.0:
        return 1.0
    cdef double kk, ee
    _ke_agm(k * k, &kk, &ee)
    return ee


def ellipk_many(k):
    """Vectorized ``ellipk``."""
    arr = np.ascontiguousarray(k, dtype=np.float64)
    out = np.empty_like(arr)
    cdef double[::1] kv = arr.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = kv.shape[0]
    cdef double kk, ee
    for i in range(n):
        if kv[i] < 0.0 or kv[i] >= 1.0:
            raise ValueError("every modulus must satisfy 0 <= k < 1")
    with nogil:
        for i in range(n):
            _ke_agm(kv[i] * kv[i], &kk, &ee)
            ov[i] = kk
    return out


def ellipe_many(k):
    """Vectorized ``ellipe``."""
    arr = np.ascontiguousarray(k, dtype=np.float64)
    out = np.empty_like(arr)
    cdef double[::1] kv = arr.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = kv.shape[0]
    cdef double kk, ee
    for i in range(n):
        if kv[i] < 0.0 or kv[i] > 1.0:
            raise ValueError("every modulus must satisfy 0 <= k <= 1")
    with nogil:
        for i in range(n):
            if kv[i] == 1.0:
                ov[i] = 1.0
            else:
                _ke_agm(kv[i] * kv[i], &kk, &ee)
                ov[i] = ee
    return out


cdef double _integrand(double z, double rho, double a) noexcept nogil:
    cdef double s2 = (a + rho) * (a + rho) + z * z
    cdef double s = sqrt(s2)
    cdef double k2 = 4.0 * a * rho / s2
    cdef double kk, ee, poly
    if k2 > _K2_MAX:
        k2 = _K2_MAX
    if k2 <= _SERIES_K2:
        poly = _B0 + k2 * (_B1 + k2 * (_B2 + k2 * (_B3 + k2 * _B4)))
        return 0.5 * _PI * k2 * poly / s
    _ke_agm(k2, &kk, &ee)
    return ((2.0 - k2) * kk - 2.0 * ee) / (k2 * s)


def profile_integrand(double z, double rho, double a):
    """B(k)/(k**2 s) at height z; see the module docstring."""
    return _integrand(z, rho, a)


cdef void _gk15(double rho, double a, double lo, double hi,
                double *val, double *err) noexcept nogil:
    cdef double c = 0.5 * (lo + hi)
    cdef double hh = 0.5 * (hi - lo)
    cdef double fc = _integrand(c, rho, a)
    cdef double resk = _WGK[7] * fc
    cdef double resg = _WG[3] * fc
    cdef double x, f1, f2
    cdef int j
    for j in range(7):
        x = hh * _XGK[j]
        f1 = _integrand(c - x, rho, a)
        f2 = _integrand(c + x, rho, a)
        resk += _WGK[j] * (f1 + f2)
        if j % 2 == 1:
            resg += _WG[j // 2] * (f1 + f2)
    val[0] = resk * hh
    err[0] = fabs(resk - resg) * hh


cdef int _adaptive(double rho, double a, double half_length,
                   double abs_tol, double rel_tol, int max_subdiv,
                   double *out_val, double *out_err) noexcept nogil:
    """Worst-interval-first adaptive GK15 on [0, L], doubled. Returns the
    number of intervals used; result and error estimate via out args."""
    cdef double *lo = <double *> malloc(4 * max_subdiv * sizeof(double))
    if lo == NULL:
        out_val[0] = 0.0
        out_err[0] = -1.0
        return 0
    cdef double *hi = lo + max_subdiv
    cdef double *sv = lo + 2 * max_subdiv
    cdef double *se = lo + 3 * max_subdiv
    cdef int n = 1
    cdef int i, worst
    cdef double total, total_err, mid, wl, wh, v1, v2, e1, e2

    lo[0] = 0.0
    hi[0] = half_length
    _gk15(rho, a, 0.0, half_length, &sv[0], &se[0])

    while True:
        total = 0.0
        total_err = 0.0
        for i in range(n):
            total += sv[i]
            total_err += se[i]
        total *= 2.0
        total_err *= 2.0
        if total_err <= max(abs_tol, rel_tol * fabs(total)) or n >= max_subdiv:
            break
        worst = 0
        for i in range(1, n):
            if se[i] > se[worst]:
                worst = i
        wl = lo[worst]
        wh = hi[worst]
        mid = 0.5 * (wl + wh)
        _gk15(rho, a, wl, mid, &v1, &e1)
        _gk15(rho, a, mid, wh, &v2, &e2)
        lo[worst] = wl
        hi[worst] = mid
        sv[worst] = v1
        se[worst] = e1
        lo[n] = mid
        hi[n] = wh
        sv[n] = v2
        se[n] = e2
        n += 1

    out_val[0] = total
    out_err[0] = total_err
    free(lo)
    return n


def finite_profile_integral(double rho, double a, double half_length,
                            double abs_tol, double rel_tol, int max_subdiv):
    """Adaptive GK15 of the profile integrand over [-L, L] (even, doubled).

    Returns (value, error_estimate, intervals_used).
    """
    cdef double val, err
    cdef int n
    with nogil:
        n = _adaptive(rho, a, half_length, abs_tol, rel_tol, max_subdiv,
                      &val, &err)
    if err < 0.0:
        raise MemoryError("could not allocate quadrature workspace")
    return val, err, n


def finite_profile_integral_many(rhos, double a, double half_length,
                                 double abs_tol, double rel_tol,
                                 int max_subdiv):
    """Batched ``finite_profile_integral`` over an array of radii."""
    arr = np.ascontiguousarray(rhos, dtype=np.float64)
    vals = np.empty_like(arr)
    errs = np.empty_like(arr)
    cdef double[::1] rv = arr.ravel()
    cdef double[::1] vv = vals.ravel()
    cdef double[::1] ev = errs.ravel()
    cdef Py_ssize_t i, n = rv.shape[0]
    cdef int used, worst = 0
    cdef double val, err
    cdef bint oom = False
    with nogil:
        for i in range(n):
            used = _adaptive(rv[i], a, half_length, abs_tol, rel_tol,
                             max_subdiv, &val, &err)
            if err < 0.0:
                oom = True
                break
            vv[i] = val
            ev[i] = err
            if used > worst:
                worst = used
    if oom:
        raise MemoryError("could not allocate quadrature workspace")
    return vals, errs, worst
