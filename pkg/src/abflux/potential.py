"""Vector potentials of finite and infinite solenoids.

Geometry: a cylindrical solenoid of radius ``a`` on the z axis carrying
total flux ``flux_phi``, either infinitely long or spanning |z| <= L. By
symmetry the vector potential has only an azimuthal component, which never
depends on the azimuth.

The infinite solenoid has the closed-form gauge

    A(rho) = flux/(2 pi rho)        for rho >= a,
    A(rho) = flux rho/(2 pi a**2)   for 0 <= rho <= a,

continuous across rho = a. Finite solenoids are evaluated by quadrature in
two independent routes that the tests cross-check against each other:

* ``a_phi_finite_plane_quadrature`` -- nested double quadrature of
      flux/(4 pi**2 a) * cos(p) / sqrt(rho**2 + a**2 + z**2 - 2 a rho cos(p)),
  adaptive Gauss-Kronrod in z composed with a periodic trapezoid rule in
  the angle (spectrally convergent off the border).
* ``a_phi_finite_elliptic`` -- reduction of the angular integral to
  complete elliptic integrals, leaving one adaptive z integral. This is
  the fast route used for lattice gauge fields.

Elliptic integrals use the *modulus* convention throughout: K(k), E(k)
with k**2 = 4 a rho / ((a + rho)**2 + z**2), never the parameter m = k**2.

The border rho = a, |z| <= L is excluded: the integrands lose
integrability there (k -> 1). Points within BORDER_RTOL * a of the border
circle are rejected; it is a zero-measure set, and callers that need a
value anyway (e.g. lattice edge midpoints) nudge radially outward by the
same tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels

BORDER_RTOL = 1e-9
# Radial nudge applied to points that must be evaluated despite sitting on
# the border (lattice edge midpoints). 1e-7 is the smallest decade that
# keeps the elliptic modulus representably below 1 under adaptive
# refinement; a 1e-9 nudge would round k**2 to exactly 1 at z = 0.
BORDER_NUDGE_RTOL = 1e-7

_TWO_PI = 2.0 * math.pi
_HALF_PI = 0.5 * math.pi


class BorderDivergenceError(ValueError):
    """Evaluation requested on the solenoid border, where the integrals diverge."""


class QuadratureAccuracyError(RuntimeError):
    """Quadrature did not reach the requested tolerance within its budget."""

    def __init__(self, message: str, achieved: float, requested: float):
        super().__init__(f"{message} (achieved {achieved:.3e}, requested {requested:.3e})")
        self.achieved = achieved
        self.requested = requested


class FitError(ValueError):
    """Convergence-rate fit is impossible on the given data."""


@dataclass(frozen=True)
class SolenoidSpec:
    """Physical configuration: radius, flux, half-length, coupling factor.

    ``half_length_L = math.inf`` selects the infinite solenoid; evaluation
    routines then use the closed-form gauge. ``coupling`` is the
    dimensionless charge/light-speed factor multiplying the potential in
    the lattice operator (it does not enter potential values themselves).
    """

    radius_a: float
    flux_phi: float
    half_length_L: float = math.inf
    coupling: float = 1.0

    def __post_init__(self):
        if not (self.radius_a > 0.0 and math.isfinite(self.radius_a)):
            raise ValueError("radius_a must be positive and finite")
        if not self.half_length_L > 0.0:
            raise ValueError("half_length_L must be positive (inf allowed)")
        if not math.isfinite(self.flux_phi):
            raise ValueError("flux_phi must be finite")
        if not math.isfinite(self.coupling):
            raise ValueError("coupling must be finite")

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.half_length_L)

    def with_half_length(self, half_length: float) -> "SolenoidSpec":
        return replace(self, half_length_L=half_length)


@dataclass(frozen=True)
class FieldPoint:
    """Evaluation point, cylindrical (rho, z) or spherical (r, theta).

    Both representations are stored; construct through ``cylindrical`` or
    ``spherical`` so they stay consistent (rho = r sin(theta),
    z = r cos(theta)). Points built with z = 0 or theta = pi/2 exactly are
    flagged equatorial and take the planar evaluation path.
    """

    rho: float
    z: float
    r: float
    theta: float

    @classmethod
    def cylindrical(cls, rho: float, z: float) -> "FieldPoint":
        rho = float(rho)
        z = float(z)
        if rho < 0.0:
            raise ValueError("rho must be nonnegative")
        return cls(rho=rho, z=z, r=math.hypot(rho, z), theta=math.atan2(rho, z))

    @classmethod
    def spherical(cls, r: float, theta: float) -> "FieldPoint":
        r = float(r)
        theta = float(theta)
        if r < 0.0:
            raise ValueError("r must be nonnegative")
        if not 0.0 <= theta <= math.pi:
            raise ValueError("theta must lie in [0, pi]")
        return cls(rho=r * math.sin(theta), z=r * math.cos(theta), r=r, theta=theta)

    @property
    def equatorial(self) -> bool:
        return self.z == 0.0 or self.theta == _HALF_PI


def on_border(point: FieldPoint, spec: SolenoidSpec, rtol: float = BORDER_RTOL) -> bool:
    """True iff the point sits on the solenoid wall: rho = a (within
    rtol * a) and |z| <= L."""
    if abs(point.rho - spec.radius_a) > rtol * spec.radius_a:
        return False
    return spec.is_infinite or abs(point.z) <= spec.half_length_L


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and subdivision budget shared by all quadrature routes."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-9
    max_subdivisions: int = 256

    def __post_init__(self):
        if not (self.abs_tol > 0.0 and self.rel_tol > 0.0):
            raise ValueError("tolerances must be strictly positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureConfig()


def _as_rho(point) -> float:
    if isinstance(point, FieldPoint):
        return point.rho
    return float(point)


def a_phi_infinite(point, spec: SolenoidSpec) -> float:
    """Closed-form infinite-solenoid gauge; accepts a FieldPoint or a bare
    radius. Independent of z; the two branches agree at rho = a."""
    rho = _as_rho(point)
    a = spec.radius_a
    if rho >= a:
        return spec.flux_phi / (_TWO_PI * rho)
    return spec.flux_phi * rho / (_TWO_PI * a * a)


def infinite_gauge_profile(rhos, spec: SolenoidSpec) -> np.ndarray:
    """Vectorized ``a_phi_infinite`` over an array of radii."""
    rhos = np.asarray(rhos, dtype=float)
    a = spec.radius_a
    outside = spec.flux_phi / (_TWO_PI * np.where(rhos > 0.0, rhos, 1.0))
    inside = spec.flux_phi * rhos / (_TWO_PI * a * a)
    return np.where(rhos >= a, np.where(rhos > 0.0, outside, 0.0), inside)


def _require_finite_length(spec: SolenoidSpec, op: str):
    if spec.is_infinite:
        raise ValueError(
            f"{op} needs a finite half-length; use a_phi_infinite for the "
            "infinite solenoid"
        )


def _check_planar_border(rho: float, spec: SolenoidSpec):
    if abs(rho - spec.radius_a) < BORDER_RTOL * spec.radius_a:
        raise BorderDivergenceError(
            f"rho = {rho} lies on the solenoid border circle rho = "
            f"{spec.radius_a}; the integrals diverge there"
        )


def a_phi_finite_elliptic(
    rho: float, spec: SolenoidSpec, quad: QuadratureConfig = DEFAULT_QUAD
) -> float:
    """Finite-solenoid planar profile via the elliptic-integral reduction.

    flux/(pi**2 a) * int_{-L}^{L} [(2 - k**2)K(k) - 2E(k)] / (k**2 s) dz
    with s**2 = (a + rho)**2 + z**2 and k**2 = 4 a rho / s**2. The small-k
    regime evaluates the bracket by series (it is O(k**4)), so rho -> 0
    is exact and never divides 0/0.
    """
    rho = float(rho)
    if rho < 0.0:
        raise ValueError("rho must be nonnegative")
    if math.isinf(spec.half_length_L):
        return a_phi_infinite(rho, spec)
    _check_planar_border(rho, spec)
    if spec.flux_phi == 0.0 or rho == 0.0:
        return 0.0
    pref = spec.flux_phi / (math.pi**2 * spec.radius_a)
    scale = abs(pref)
    val, err, _ = kernels.finite_profile_integral(
        rho,
        spec.radius_a,
        spec.half_length_L,
        quad.abs_tol / scale,
        quad.rel_tol,
        quad.max_subdivisions,
    )
    if err > max(quad.abs_tol / scale, quad.rel_tol * abs(val)):
        raise QuadratureAccuracyError(
            "profile integral did not converge; raise max_subdivisions "
            "or loosen the tolerances",
            achieved=err * scale,
            requested=max(quad.abs_tol, quad.rel_tol * abs(val) * scale),
        )
    return pref * val


def finite_gauge_profile(
    rhos, spec: SolenoidSpec, quad: QuadratureConfig = DEFAULT_QUAD
) -> np.ndarray:
    """Batched ``a_phi_finite_elliptic`` (the hot path for gauge fields)."""
    _require_finite_length(spec, "finite_gauge_profile")
    rhos = np.asarray(rhos, dtype=float)
    if np.any(rhos < 0.0):
        raise ValueError("radii must be nonnegative")
    if np.any(np.abs(rhos - spec.radius_a) < BORDER_RTOL * spec.radius_a):
        raise BorderDivergenceError(
            "a requested radius lies on the solenoid border circle"
        )
    if spec.flux_phi == 0.0:
        return np.zeros_like(rhos)
    pref = spec.flux_phi / (math.pi**2 * spec.radius_a)
    scale = abs(pref)
    vals, errs, _ = kernels.finite_profile_integral_many(
        rhos,
        spec.radius_a,
        spec.half_length_L,
        quad.abs_tol / scale,
        quad.rel_tol,
        quad.max_subdivisions,
    )
    bad = errs > np.maximum(quad.abs_tol / scale, quad.rel_tol * np.abs(vals))
    if np.any(bad):
        worst = float(np.max(errs[bad]) * scale)
        raise QuadratureAccuracyError(
            f"profile integral did not converge at {int(np.sum(bad))} radii",
            achieved=worst,
            requested=quad.abs_tol,
        )
    return pref * vals


def _periodic_cosine_integral(
    d_const: float, b_coef: float, abs_tol: float, rel_tol: float
) -> float:
    """int_0^{2 pi} cos(p) / sqrt(d_const - b_coef cos(p)) dp by the
    periodic trapezoid rule, doubling the order until two consecutive
    levels agree. The integrand is smooth and periodic whenever
    d_const > |b_coef|, so convergence is geometric."""
    n = 32
    phi = _TWO_PI * np.arange(n) / n
    c = np.cos(phi)
    vals = c / np.sqrt(d_const - b_coef * c)
    total = float(np.sum(vals)) * (_TWO_PI / n)
    while n < (1 << 16):
        # refine with the odd midpoints only; trapezoid sums are reused
        mid = _TWO_PI * (np.arange(n) + 0.5) / n
        c = np.cos(mid)
        vals = c / np.sqrt(d_const - b_coef * c)
        refined = 0.5 * total + float(np.sum(vals)) * (_TWO_PI / (2 * n))
        n *= 2
        change = abs(refined - total)
        total = refined
        if change <= max(abs_tol, rel_tol * abs(total)):
            return total
    raise QuadratureAccuracyError(
        "periodic angular rule did not converge (point too close to the border?)",
        achieved=change,
        requested=abs_tol,
    )


def _adaptive_gk15(f, lo: float, hi: float, abs_tol: float, rel_tol: float,
                   max_subdiv: int):
    """Generic worst-interval-first adaptive Gauss-Kronrod 7-15."""
    _xgk = (
        0.991455371120813, 0.949107912342759, 0.864864423359769,
        0.741531185599394, 0.586087235467691, 0.405845151377397,
        0.207784955007898, 0.0,
    )
    _wgk = (
        0.022935322010529, 0.063092092629979, 0.104790010322250,
        0.140653259715525, 0.169004726639267, 0.190350578064785,
        0.204432940075298, 0.209482141084728,
    )
    _wg = (
        0.129484966168870, 0.279705391489277, 0.381830050505119,
        0.417959183673469,
    )

    def rule(a_, b_):
        c = 0.5 * (a_ + b_)
        hh = 0.5 * (b_ - a_)
        fc = f(c)
        resk = _wgk[7] * fc
        resg = _wg[3] * fc
        for j in range(7):
            x = hh * _xgk[j]
            f1 = f(c - x)
            f2 = f(c + x)
            resk += _wgk[j] * (f1 + f2)
            if j % 2 == 1:
                resg += _wg[j // 2] * (f1 + f2)
        return resk * hh, abs(resk - resg) * hh

    val, err = rule(lo, hi)
    segs = [(lo, hi, val, err)]
    while len(segs) < max_subdiv:
        total = math.fsum(s[2] for s in segs)
        total_err = math.fsum(s[3] for s in segs)
        if total_err <= max(abs_tol, rel_tol * abs(total)):
            break
        worst = max(range(len(segs)), key=lambda i: segs[i][3])
        wl, wh, _, _ = segs.pop(worst)
        mid = 0.5 * (wl + wh)
        segs.append((wl, mid) + rule(wl, mid))
        segs.append((mid, wh) + rule(mid, wh))
    total = math.fsum(s[2] for s in segs)
    total_err = math.fsum(s[3] for s in segs)
    return total, total_err, len(segs)


def a_phi_finite_plane_quadrature(
    rho: float, spec: SolenoidSpec, quad: QuadratureConfig = DEFAULT_QUAD
) -> float:
    """Finite-solenoid planar profile via the nested double quadrature.

    Outer adaptive rule in z over [0, L] (the kernel is even in z, so the
    result is doubled), inner periodic trapezoid in the angle. Kept
    independent of the elliptic route so the two can cross-check each
    other.
    """
    rho = float(rho)
    if rho < 0.0:
        raise ValueError("rho must be nonnegative")
    _require_finite_length(spec, "a_phi_finite_plane_quadrature")
    _check_planar_border(rho, spec)
    if spec.flux_phi == 0.0 or rho == 0.0:
        return 0.0
    a = spec.radius_a
    pref = spec.flux_phi / (4.0 * math.pi**2 * a)
    scale = abs(pref)
    # inner budget one order below the outer request, per unit z-length
    inner_abs = 0.05 * quad.abs_tol / (scale * max(spec.half_length_L, 1.0))
    inner_rel = 0.05 * quad.rel_tol

    def outer_integrand(z: float) -> float:
        return _periodic_cosine_integral(
            rho * rho + a * a + z * z, 2.0 * a * rho, inner_abs, inner_rel
        )

    val, err, _ = _adaptive_gk15(
        outer_integrand,
        0.0,
        spec.half_length_L,
        0.5 * quad.abs_tol / scale,
        quad.rel_tol,
        quad.max_subdivisions,
    )
    result = pref * 2.0 * val
    if 2.0 * err > max(quad.abs_tol / scale, quad.rel_tol * abs(2.0 * val)):
        raise QuadratureAccuracyError(
            "outer quadrature did not converge",
            achieved=2.0 * err * scale,
            requested=quad.abs_tol,
        )
    return result


def a_phi_finite_3d(
    point: FieldPoint, spec: SolenoidSpec, quad: QuadratureConfig = DEFAULT_QUAD
) -> float:
    """Finite-solenoid profile at a general 3D point (spherical form).

    Kernel: cos(p) / sqrt(r**2 + a**2 + z**2 - 2 r z cos(theta)
    - 2 r a sin(theta) cos(p)). Points on the equator route to the planar
    double quadrature (the kernel reduces to it identically), so both
    evaluations agree bit for bit there.
    """
    _require_finite_length(spec, "a_phi_finite_3d")
    if on_border(point, spec):
        raise BorderDivergenceError(
            "the point lies on the solenoid wall; the integrals diverge there"
        )
    if point.equatorial:
        return a_phi_finite_plane_quadrature(point.rho, spec, quad)
    if spec.flux_phi == 0.0 or point.r == 0.0:
        return 0.0
    a = spec.radius_a
    r = point.r
    cos_t = math.cos(point.theta)
    sin_t = math.sin(point.theta)
    pref = spec.flux_phi / (4.0 * math.pi**2 * a)
    scale = abs(pref)
    inner_abs = 0.05 * quad.abs_tol / (scale * max(2.0 * spec.half_length_L, 1.0))
    inner_rel = 0.05 * quad.rel_tol

    def outer_integrand(z: float) -> float:
        return _periodic_cosine_integral(
            r * r + a * a + z * z - 2.0 * r * z * cos_t,
            2.0 * r * a * sin_t,
            inner_abs,
            inner_rel,
        )

    val, err, _ = _adaptive_gk15(
        outer_integrand,
        -spec.half_length_L,
        spec.half_length_L,
        quad.abs_tol / scale,
        quad.rel_tol,
        quad.max_subdivisions,
    )
    if err > max(quad.abs_tol / scale, quad.rel_tol * abs(val)):
        raise QuadratureAccuracyError(
            "outer quadrature did not converge",
            achieved=err * scale,
            requested=quad.abs_tol,
        )
    return pref * val


def far_field_approx(point: FieldPoint, spec: SolenoidSpec) -> float:
    """Closed-form large-distance approximation of the finite-solenoid
    profile, valid for r sin(theta) >> a:

        flux/(2 pi) * r sin(theta) / (r**2 + a**2 - r**2 cos(theta)**2)
          * [alpha (L - r cos(theta)) + beta (L + r cos(theta))] / (2 alpha beta)

    with alpha, beta = sqrt(r**2 + a**2 + L**2 +- 2 r L cos(theta)). For
    ``half_length_L = inf`` the large-L limit of the bracket (-> 1) is
    used. The caller is responsible for the validity regime.
    """
    a = spec.radius_a
    r = point.r
    sin_t = math.sin(point.theta) if point.theta != _HALF_PI else 1.0
    cos_t = math.cos(point.theta)
    denom = r * r + a * a - (r * cos_t) ** 2
    lead = spec.flux_phi / _TWO_PI * (r * sin_t) / denom
    if spec.is_infinite:
        return lead
    L = spec.half_length_L
    alpha = math.sqrt(r * r + a * a + L * L + 2.0 * r * cos_t * L)
    beta = math.sqrt(r * r + a * a + L * L - 2.0 * r * cos_t * L)
    return lead * (alpha * (L - r * cos_t) + beta * (L + r * cos_t)) / (2.0 * alpha * beta)


@dataclass(frozen=True)
class RateFit:
    """Power-law fit |deviation| ~ prefactor * L**(-exponent)."""

    exponent: float
    prefactor: float


def fit_power_law(lengths, deviations) -> RateFit:
    """Least-squares fit of log(deviation) against log(length).

    Needs at least 4 strictly increasing lengths spanning a decade and
    strictly positive, non-constant deviations.
    """
    lengths = np.asarray(lengths, dtype=float)
    deviations = np.asarray(deviations, dtype=float)
    if lengths.size < 4:
        raise FitError("need at least 4 points for a rate fit")
    if np.any(np.diff(lengths) <= 0.0):
        raise FitError("lengths must be strictly increasing")
    if lengths[-1] < 10.0 * lengths[0]:
        raise FitError("lengths must span at least one decade")
    if np.any(~np.isfinite(deviations)) or np.any(deviations <= 0.0):
        raise FitError(
            "deviations hit the floating-point floor (or are invalid); "
            "use a smaller length range"
        )
    logs = np.log(deviations)
    if float(np.ptp(logs)) == 0.0:
        raise FitError("deviations are constant; the exponent is undefined")
    slope, intercept = np.polyfit(np.log(lengths), logs, 1)
    return RateFit(exponent=abs(float(slope)), prefactor=float(math.exp(intercept)))


def fit_convergence_rate(
    rho: float,
    spec: SolenoidSpec,
    lengths,
    quad: QuadratureConfig = DEFAULT_QUAD,
) -> RateFit:
    """Fit the decay of |A_inf(rho) - A_L(rho)| against L.

    The finite-length values use the elliptic route; the reference is the
    closed-form infinite gauge of the same radius and flux.
    """
    ref = a_phi_infinite(rho, spec)
    deviations = [
        abs(ref - a_phi_finite_elliptic(rho, spec.with_half_length(L), quad))
        for L in np.asarray(lengths, dtype=float)
    ]
    return fit_power_law(lengths, deviations)
