"""Independent oracles used to pin expected values in the test suite.

Everything here deliberately avoids the package's own evaluation routes:
elliptic integrals come from direct adaptive quadrature of the defining
integrals, solenoid potentials from brute-force midpoint Riemann sums of
the double integral, lattice line integrals from the closed angular form
of the infinite-solenoid gauge, and box-Laplacian eigenvalues from the
classical closed form for the 5-point stencil.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate


def ellipk_quadrature(k: float) -> float:
    """K(k) by adaptive quadrature of int_0^{pi/2} dt / sqrt(1 - k^2 sin^2 t)."""
    val, _ = integrate.quad(
        lambda t: 1.0 / math.sqrt(1.0 - (k * math.sin(t)) ** 2),
        0.0,
        0.5 * math.pi,
        epsabs=1e-14,
        epsrel=1e-13,
        limit=200,
    )
    return val


def ellipe_quadrature(k: float) -> float:
    """E(k) by adaptive quadrature of int_0^{pi/2} sqrt(1 - k^2 sin^2 t) dt."""
    val, _ = integrate.quad(
        lambda t: math.sqrt(1.0 - (k * math.sin(t)) ** 2),
        0.0,
        0.5 * math.pi,
        epsabs=1e-14,
        epsrel=1e-13,
        limit=200,
    )
    return val


def riemann_potential_plane(
    rho: float,
    a: float,
    flux: float,
    half_length: float,
    n_z: int = 2000,
    n_phi: int = 512,
) -> float:
    """Midpoint Riemann sum of the planar double integral.

    flux/(4 pi^2 a) * sum over z' in [-L, L], phi' in [0, 2 pi) of
    cos(phi') / sqrt(rho^2 + a^2 + z'^2 - 2 a rho cos(phi')).
    Midpoint in z', periodic midpoint in phi' (spectrally accurate there).
    """
    dz = 2.0 * half_length / n_z
    z = -half_length + (np.arange(n_z) + 0.5) * dz
    dphi = 2.0 * math.pi / n_phi
    phi = (np.arange(n_phi) + 0.5) * dphi
    cphi = np.cos(phi)
    base = rho * rho + a * a + z * z  # (n_z,)
    kern = cphi[None, :] / np.sqrt(base[:, None] - 2.0 * a * rho * cphi[None, :])
    total = float(np.sum(kern)) * dz * dphi
    return flux / (4.0 * math.pi**2 * a) * total


def riemann_potential_3d(
    r: float,
    theta: float,
    a: float,
    flux: float,
    half_length: float,
    n_z: int = 2000,
    n_phi: int = 512,
) -> float:
    """Midpoint Riemann sum of the 3D double integral with kernel

    1 / sqrt(r^2 + a^2 + z'^2 - 2 r z' cos(theta) - 2 r a sin(theta) cos(phi')).
    """
    dz = 2.0 * half_length / n_z
    z = -half_length + (np.arange(n_z) + 0.5) * dz
    dphi = 2.0 * math.pi / n_phi
    phi = (np.arange(n_phi) + 0.5) * dphi
    cphi = np.cos(phi)
    base = r * r + a * a + z * z - 2.0 * r * np.cos(theta) * z
    kern = cphi[None, :] / np.sqrt(
        base[:, None] - 2.0 * r * a * math.sin(theta) * cphi[None, :]
    )
    total = float(np.sum(kern)) * dz * dphi
    return flux / (4.0 * math.pi**2 * a) * total


def infinite_gauge(rho: float, a: float, flux: float) -> float:
    """Azimuthal component of the infinite-solenoid gauge (closed form)."""
    if rho >= a:
        return flux / (2.0 * math.pi * rho)
    return flux * rho / (2.0 * math.pi * a * a)


def exact_edge_integral(p0, p1, a: float, flux: float) -> float:
    """Exact line integral of the infinite-solenoid gauge field along the
    straight segment p0 -> p1, assumed to stay outside the flux disk.

    Outside the disk the field is curl-free with circulation flux, so the
    integral equals flux/(2 pi) times the swept azimuthal angle.
    """
    ang0 = math.atan2(p0[1], p0[0])
    ang1 = math.atan2(p1[1], p1[0])
    d = ang1 - ang0
    # straight segments outside the disk never sweep an angle >= pi
    if d > math.pi:
        d -= 2.0 * math.pi
    elif d < -math.pi:
        d += 2.0 * math.pi
    return flux / (2.0 * math.pi) * d


def box_laplacian_eigenvalues(points_per_side: int, extent: float, count: int):
    """Smallest eigenvalues of the 5-point Dirichlet Laplacian on the box.

    The grid has `points_per_side` points across [-R, R] with the outer
    ring pinned to zero, i.e. m = points_per_side - 2 interior points per
    axis and spacing h = 2R/(points_per_side - 1):

        lambda_{p,q} = (4/h^2) [sin^2(p pi h / (4R)) + sin^2(q pi h / (4R))]

    for p, q = 1..m.
    """
    n = points_per_side
    m = n - 2
    h = 2.0 * extent / (n - 1)
    p = np.arange(1, m + 1)
    s = np.sin(p * math.pi / (2.0 * (n - 1))) ** 2
    lam = (4.0 / h**2) * (s[:, None] + s[None, :])
    return np.sort(lam.ravel())[:count]
