"""Pure-Python numerical kernels: complete elliptic integrals and the
finite-solenoid profile integral.

This is the fallback backend; ``abflux._ellip_cy`` provides the same
functions compiled with Cython. Selection happens in ``abflux.kernels``.

Convention: every elliptic-integral routine here takes the *modulus* k,
not the parameter m = k**2 (sources differ; scipy.special uses m).

The profile integral is the z-even reduction of the azimuthal component
of a finite solenoid's vector potential, up to the flux/(pi**2 a)
prefactor:

    P(rho) = 2 * int_0^L B(k) / (k**2 * s) dz,
    s**2 = (a + rho)**2 + z**2,   k**2 = 4 a rho / s**2,
    B(k) = (2 - k**2) K(k) - 2 E(k).

B(k) is O(k**4), so evaluating it by subtraction for small k loses all
accuracy; below k**2 = 5e-3 the integrand switches to the series

    B(k)/k**2 = (pi/2) k**2 (1/8 + 3 k**2/32 + 75 k**4/1024
                             + 245 k**6/4096 + 6615 k**8/131072 + ...),

whose truncation error there is below 1e-13 relative.
"""

from __future__ import annotations

import math

import numpy as np

_EPS = 2.220446049250313e-16

# Gauss-Kronrod 7-15 pair on [-1, 1]; nonnegative abscissae, symmetric rule.
_XGK = (
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.000000000000000,
)
_WGK = (
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
)
_WG = (
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
)

# Series switch for B(k)/k**2 and its coefficients (exact rationals).
_SERIES_K2 = 5e-3
_B0 = 0.125
_B1 = 3.0 / 32.0
_B2 = 75.0 / 1024.0
_B3 = 245.0 / 4096.0
_B4 = 6615.0 / 131072.0

# Within ~1e-7 of the border the computed modulus rounds into k**2 >= 1;
# saturate it just below 1 so near-border evaluations stay finite (they
# are accurate only to ~1e-7 there, which callers respect by nudging).
_K2_MAX = 1.0 - 1e-14


def _ke_agm(k2: float) -> tuple[float, float]:
    """K(k) and E(k) from one arithmetic-geometric-mean run, k2 = k**2 < 1."""
    a = 1.0
    b = math.sqrt(1.0 - k2)
    s = 0.5 * k2
    p = 1.0
    while abs(a - b) > 4.0 * _EPS * a:
        c = 0.5 * (a - b)
        s += p * c * c
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        p *= 2.0
    big_k = math.pi / (a + b)
    return big_k, big_k * (1.0 - s)


def ellipk(k: float) -> float:
    """Complete elliptic integral of the first kind, modulus convention.

    Accurate to machine precision via the AGM. Raises ValueError for
    k < 0 and for k >= 1 (logarithmic singularity at k = 1).
    """
    k = float(k)
    if k < 0.0:
        raise ValueError("elliptic modulus must be nonnegative")
    if k >= 1.0:
        raise ValueError(
            "K(k) has a logarithmic singularity at k = 1; modulus must satisfy k < 1"
        )
    return _ke_agm(k * k)[0]


def ellipe(k: float) -> float:
    """Complete elliptic integral of the second kind, modulus convention.

    Defined on 0 <= k <= 1 with E(1) = 1 exactly.
    """
    k = float(k)
    if k < 0.0:
        raise ValueError("elliptic modulus must be nonnegative")
    if k > 1.0:
        raise ValueError("E(k) requires 0 <= k <= 1")
    if k == 1.0:
        return 1.0
    return _ke_agm(k * k)[1]


def _ke_agm_many(k2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.ones_like(k2)
    b = np.sqrt(1.0 - k2)
    s = 0.5 * k2
    p = 1.0
    # elements converge at different iterations; extra passes are harmless
    while np.max(np.abs(a - b)) > 4.0 * _EPS:
        c = 0.5 * (a - b)
        s = s + p * c * c
        a, b = 0.5 * (a + b), np.sqrt(a * b)
        p *= 2.0
    big_k = np.pi / (a + b)
    return big_k, big_k * (1.0 - s)


def ellipk_many(k) -> np.ndarray:
    """Vectorized ``ellipk``."""
    k = np.asarray(k, dtype=float)
    if np.any(k < 0.0) or np.any(k >= 1.0):
        raise ValueError("every modulus must satisfy 0 <= k < 1")
    return _ke_agm_many(k * k)[0]


def ellipe_many(k) -> np.ndarray:
    """Vectorized ``ellipe``."""
    k = np.asarray(k, dtype=float)
    if np.any(k < 0.0) or np.any(k > 1.0):
        raise ValueError("every modulus must satisfy 0 <= k <= 1")
    one = k == 1.0
    k2 = np.where(one, 0.0, k * k)
    out = _ke_agm_many(k2)[1]
    return np.where(one, 1.0, out)


def profile_integrand(z: float, rho: float, a: float) -> float:
    """B(k)/(k**2 s) at height z; finite for every rho != a (and rho = a, z != 0)."""
    s2 = (a + rho) * (a + rho) + z * z
    s = math.sqrt(s2)
    k2 = 4.0 * a * rho / s2
    if k2 > _K2_MAX:
        k2 = _K2_MAX
    if k2 <= _SERIES_K2:
        poly = _B0 + k2 * (_B1 + k2 * (_B2 + k2 * (_B3 + k2 * _B4)))
        return 0.5 * math.pi * k2 * poly / s
    big_k, big_e = _ke_agm(k2)
    return ((2.0 - k2) * big_k - 2.0 * big_e) / (k2 * s)


def _gk15(rho: float, a: float, lo: float, hi: float) -> tuple[float, float]:
    c = 0.5 * (lo + hi)
    hh = 0.5 * (hi - lo)
    fc = profile_integrand(c, rho, a)
    resk = _WGK[7] * fc
    resg = _WG[3] * fc
    for j in range(7):
        x = hh * _XGK[j]
        f1 = profile_integrand(c - x, rho, a)
        f2 = profile_integrand(c + x, rho, a)
        resk += _WGK[j] * (f1 + f2)
        if j % 2 == 1:
            resg += _WG[j // 2] * (f1 + f2)
    return resk * hh, abs(resk - resg) * hh


def finite_profile_integral(
    rho: float,
    a: float,
    half_length: float,
    abs_tol: float,
    rel_tol: float,
    max_subdiv: int,
) -> tuple[float, float, int]:
    """Adaptive Gauss-Kronrod integration of the profile over [-L, L].

    The integrand is even in z, so [0, L] is integrated and doubled.
    Worst-interval-first bisection; returns (value, error_estimate,
    intervals_used). The caller applies physical prefactors and decides
    whether the estimate meets its tolerance.
    """
    val, err = _gk15(rho, a, 0.0, half_length)
    segs = [(0.0, half_length, val, err)]
    while len(segs) < max_subdiv:
        total = 2.0 * math.fsum(s[2] for s in segs)
        total_err = 2.0 * math.fsum(s[3] for s in segs)
        if total_err <= max(abs_tol, rel_tol * abs(total)):
            break
        worst = max(range(len(segs)), key=lambda i: segs[i][3])
        lo, hi, _, _ = segs.pop(worst)
        mid = 0.5 * (lo + hi)
        v1, e1 = _gk15(rho, a, lo, mid)
        v2, e2 = _gk15(rho, a, mid, hi)
        segs.append((lo, mid, v1, e1))
        segs.append((mid, hi, v2, e2))
    total = 2.0 * math.fsum(s[2] for s in segs)
    total_err = 2.0 * math.fsum(s[3] for s in segs)
    return total, total_err, len(segs)


def finite_profile_integral_many(
    rhos,
    a: float,
    half_length: float,
    abs_tol: float,
    rel_tol: float,
    max_subdiv: int,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Batched ``finite_profile_integral`` over an array of radii."""
    rhos = np.asarray(rhos, dtype=float)
    vals = np.empty(rhos.shape, dtype=float)
    errs = np.empty(rhos.shape, dtype=float)
    worst = 0
    flat_v = vals.ravel()
    flat_e = errs.ravel()
    for i, r in enumerate(rhos.ravel()):
        v, e, n = finite_profile_integral(
            float(r), a, half_length, abs_tol, rel_tol, max_subdiv
        )
        flat_v[i] = v
        flat_e[i] = e
        worst = max(worst, n)
    return vals, errs, worst
