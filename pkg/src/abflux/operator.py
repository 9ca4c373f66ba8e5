"""Finite-difference magnetic Schrodinger operators on a truncated plane.

The plane is truncated to the square [-R, R]^2 with a Dirichlet wall on
the outer border. The kinetic term uses Peierls link phases: a directed
lattice edge j -> k carries

    theta_jk = coupling * integral_j^k A . dl    (midpoint rule),

and the operator acts as

    (H psi)_j = h**-2 sum_{k ~ j} (psi_j - exp(i theta_jk) psi_k) + V_j psi_j

with hbar = 1 and mass 1/2, so the kinetic prefactor is exactly 1.
Potentials are diagonal: a permeable barrier adds n on every node strictly
inside the solenoid disk, while the hard-wall variant removes those nodes
altogether (lattice Dirichlet condition on the disk). Because all gauge
content lives in the link phases, gauge transforms are exact lattice
unitaries and leave spectra invariant to solver precision.

Assembled operators are immutable; concurrent read-only use is safe.
"""

from __future__ import annotations

import io
import math
import threading
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import eigsh

from .potential import (
    BORDER_NUDGE_RTOL,
    BORDER_RTOL,
    DEFAULT_QUAD,
    QuadratureConfig,
    SolenoidSpec,
    finite_gauge_profile,
    infinite_gauge_profile,
)


class ConfigurationError(ValueError):
    """Grid/spec combination cannot realize the requested operator."""


@dataclass(frozen=True)
class Grid2D:
    """Uniform square lattice over [-R, R]^2.

    points_per_side = N nodes per axis, spacing h = 2R/(N-1); node (ix, iy)
    sits at (-R + ix h, -R + iy h) and has flat id ix * N + iy.
    """

    extent_R: float
    points_per_side: int

    def __post_init__(self):
        if not self.extent_R > 0.0:
            raise ValueError("extent_R must be positive")
        if self.points_per_side < 8:
            raise ValueError("points_per_side must be at least 8")

    @property
    def h(self) -> float:
        return 2.0 * self.extent_R / (self.points_per_side - 1)

    @property
    def node_count(self) -> int:
        return self.points_per_side**2

    @cached_property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.extent_R, self.extent_R, self.points_per_side)

    @cached_property
    def node_xy(self) -> tuple[np.ndarray, np.ndarray]:
        x, y = np.meshgrid(self.axis, self.axis, indexing="ij")
        return x, y

    @cached_property
    def node_rho(self) -> np.ndarray:
        x, y = self.node_xy
        return np.hypot(x, y)

    def node_id(self, ix, iy):
        return ix * self.points_per_side + iy

    def check_solenoid_fit(self, spec: SolenoidSpec):
        """Warn when the disk is not comfortably inside and resolved."""
        if not spec.radius_a < 0.5 * self.extent_R:
            warnings.warn(
                "solenoid radius should satisfy a < R/2 to keep the disk "
                "away from the truncation wall",
                stacklevel=2,
            )
        if not self.h < spec.radius_a / 4.0:
            warnings.warn(
                "grid spacing h >= a/4: the solenoid disk is resolved by "
                "only a few cells",
                stacklevel=2,
            )


@dataclass(frozen=True)
class BarrierSpec:
    """Barrier height n >= 0 on the disk interior, or the hard-wall marker
    (``n_value = None``), which removes the interior nodes instead."""

    n_value: float | None = None

    def __post_init__(self):
        if self.n_value is not None:
            if not (math.isfinite(self.n_value) and self.n_value >= 0.0):
                raise ValueError("barrier height must be finite and nonnegative")

    @property
    def is_hard_wall(self) -> bool:
        return self.n_value is None

    @staticmethod
    def permeable(n: float) -> "BarrierSpec":
        return BarrierSpec(float(n))


HARD_WALL = BarrierSpec(None)


def barrier_from_value(n: float) -> BarrierSpec:
    """Map a schedule value to a barrier; inf means the hard wall."""
    if math.isinf(n):
        return HARD_WALL
    return BarrierSpec.permeable(n)


@dataclass
class GaugeField:
    """Peierls phases on directed lattice edges.

    theta_x[ix, iy] is the phase of the edge (ix, iy) -> (ix+1, iy) and
    theta_y[ix, iy] of (ix, iy) -> (ix, iy+1); the reversed edge carries
    the exact negation (antisymmetry by construction).
    """

    grid: Grid2D
    half_length: float
    flux: float
    coupling: float
    theta_x: np.ndarray
    theta_y: np.ndarray

    def plaquette_phase(self, ix: int, iy: int) -> float:
        """Counterclockwise phase sum around the unit cell at (ix, iy)."""
        return (
            self.theta_x[ix, iy]
            + self.theta_y[ix + 1, iy]
            - self.theta_x[ix, iy + 1]
            - self.theta_y[ix, iy]
        )

    def loop_phase(self, ix0: int, iy0: int, ix1: int, iy1: int) -> float:
        """Counterclockwise phase sum around the lattice rectangle with
        corner nodes (ix0, iy0) and (ix1, iy1)."""
        if not (ix0 < ix1 and iy0 < iy1):
            raise ValueError("need ix0 < ix1 and iy0 < iy1")
        bottom = float(np.sum(self.theta_x[ix0:ix1, iy0]))
        right = float(np.sum(self.theta_y[ix1, iy0:iy1]))
        top = float(np.sum(self.theta_x[ix0:ix1, iy1]))
        left = float(np.sum(self.theta_y[ix0, iy0:iy1]))
        return bottom + right - top - left


def build_gauge_field(
    grid: Grid2D, spec: SolenoidSpec, quad: QuadratureConfig = DEFAULT_QUAD
) -> GaugeField:
    """Evaluate the link phases for the given solenoid.

    theta = coupling * h * (azimuthal potential at the edge midpoint)
    projected on the edge direction (midpoint rule for the line integral).
    Midpoints within BORDER_NUDGE_RTOL * a of the border circle are nudged
    radially outward to rho = a (1 + BORDER_NUDGE_RTOL) before evaluation:
    a deterministic perturbation far below the midpoint-rule error.
    """
    grid.check_solenoid_fit(spec)
    ax = grid.axis
    h = grid.h
    mid = 0.5 * (ax[:-1] + ax[1:])

    # horizontal edges: midpoint (mid[ix], ax[iy]); tangent +x
    hx, hy = np.meshgrid(mid, ax, indexing="ij")
    # vertical edges: midpoint (ax[ix], mid[iy]); tangent +y
    vx, vy = np.meshgrid(ax, mid, indexing="ij")

    if spec.flux_phi == 0.0:
        theta_x = np.zeros_like(hx)
        theta_y = np.zeros_like(vx)
        return GaugeField(grid, spec.half_length_L, 0.0, spec.coupling, theta_x, theta_y)

    def eval_profile(px, py):
        rho = np.hypot(px, py)
        near = np.abs(rho - spec.radius_a) < BORDER_NUDGE_RTOL * spec.radius_a
        rho_eval = np.where(near, spec.radius_a * (1.0 + BORDER_NUDGE_RTOL), rho)
        if math.isinf(spec.half_length_L):
            a_vals = infinite_gauge_profile(rho_eval, spec)
        else:
            flat = rho_eval.ravel()
            uniq, inverse = np.unique(flat, return_inverse=True)
            a_uniq = finite_gauge_profile(uniq, spec, quad)
            a_vals = a_uniq[inverse].reshape(rho_eval.shape)
        return rho, a_vals

    rho_h, a_h = eval_profile(hx, hy)
    rho_v, a_v = eval_profile(vx, vy)
    with np.errstate(invalid="ignore", divide="ignore"):
        tx = np.where(rho_h > 0.0, -hy / rho_h, 0.0)
        ty = np.where(rho_v > 0.0, vx / rho_v, 0.0)
    theta_x = spec.coupling * h * a_h * tx
    theta_y = spec.coupling * h * a_v * ty
    return GaugeField(
        grid, spec.half_length_L, spec.flux_phi, spec.coupling, theta_x, theta_y
    )


@dataclass
class DiscreteHamiltonian:
    """Assembled sparse operator restricted to its active nodes.

    ``active_ids`` are the flat grid ids (sorted) carrying degrees of
    freedom; everything else is a Dirichlet zero (outer wall, and the disk
    interior for hard-wall variants). The matrix is complex Hermitian with
    conjugate pairs stored explicitly.
    """

    matrix: sparse.csr_matrix
    grid: Grid2D
    spec: SolenoidSpec
    barrier: BarrierSpec
    half_length: float
    variant: str
    active_ids: np.ndarray
    _solve_lock: threading.Lock = field(
        default_factory=threading.Lock, repr=False, compare=False
    )
    _factor_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def restrict(self, full: np.ndarray) -> np.ndarray:
        """Pick out the active components of a full-grid vector."""
        return np.asarray(full, dtype=complex)[self.active_ids]

    def embed(self, sub: np.ndarray) -> np.ndarray:
        """Zero-pad an active-node vector back onto the full grid."""
        out = np.zeros(self.grid.node_count, dtype=complex)
        out[self.active_ids] = sub
        return out

    def triplet_text(self) -> str:
        """Sparse triplet text: '#'-prefixed metadata header, then one
        'row col re im' line per stored entry in CSR order."""
        coo = self.matrix.tocoo()
        buf = io.StringIO()
        barrier = "hard_wall" if self.barrier.is_hard_wall else repr(self.barrier.n_value)
        buf.write("# abflux sparse operator v1\n")
        buf.write(f"# dimension: {self.dimension}\n")
        buf.write(f"# nnz: {coo.nnz}\n")
        buf.write(f"# grid_points_per_side: {self.grid.points_per_side}\n")
        buf.write(f"# grid_extent: {self.grid.extent_R!r}\n")
        buf.write(f"# radius: {self.spec.radius_a!r}\n")
        buf.write(f"# flux: {self.spec.flux_phi!r}\n")
        buf.write(f"# coupling: {self.spec.coupling!r}\n")
        buf.write(f"# half_length: {self.half_length!r}\n")
        buf.write(f"# barrier: {barrier}\n")
        buf.write(f"# variant: {self.variant}\n")
        buf.write("# columns: row col re im\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            buf.write(f"{r} {c} {v.real!r} {v.imag!r}\n")
        return buf.getvalue()

    def save_triplets(self, path):
        with open(path, "w") as fh:
            fh.write(self.triplet_text())


def load_triplets(path) -> tuple[sparse.csr_matrix, dict]:
    """Read a triplet file back; returns (matrix, metadata dict)."""
    meta: dict = {}
    rows, cols, vals = [], [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" in body:
                    key, _, val = body.partition(":")
                    meta[key.strip()] = val.strip()
                continue
            r, c, re_s, im_s = line.split()
            rows.append(int(r))
            cols.append(int(c))
            vals.append(complex(float(re_s), float(im_s)))
    dim = int(meta["dimension"])
    mat = sparse.coo_matrix(
        (np.array(vals), (np.array(rows), np.array(cols))), shape=(dim, dim)
    ).tocsr()
    return mat, meta


def _check_gauge_matches(grid: Grid2D, gauge: GaugeField, spec: SolenoidSpec):
    if gauge.grid != grid:
        raise ValueError("gauge field was built on a different grid")
    if gauge.flux != spec.flux_phi or gauge.coupling != spec.coupling:
        raise ValueError("gauge field was built for a different solenoid spec")
    if gauge.half_length != spec.half_length_L:
        raise ValueError(
            "gauge field half-length disagrees with the spec; rebuild it"
        )


def assemble(
    grid: Grid2D, gauge: GaugeField, barrier: BarrierSpec, spec: SolenoidSpec
) -> DiscreteHamiltonian:
    """Assemble the lattice operator for one (gauge, barrier) combination.

    Active nodes are the strict interior of the box; hard-wall barriers
    additionally remove every node with rho < a (node-center membership
    test). Hermiticity is exact: each hopping entry and its conjugate are
    stored as an explicit pair.
    """
    _check_gauge_matches(grid, gauge, spec)
    n = grid.points_per_side
    h = grid.h

    ix, iy = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    box_interior = (ix > 0) & (ix < n - 1) & (iy > 0) & (iy < n - 1)
    inside_disk = grid.node_rho < spec.radius_a

    active = box_interior.copy()
    if barrier.is_hard_wall:
        if not np.any(inside_disk & box_interior):
            raise ConfigurationError(
                "hard wall requested but no grid node lies inside the disk; "
                "refine the grid"
            )
        active &= ~inside_disk
        variant = "ab" if math.isinf(spec.half_length_L) else "hard_wall"
    else:
        variant = "permeable"

    active_flat = active.ravel()
    active_ids = np.flatnonzero(active_flat)
    pos = np.full(grid.node_count, -1, dtype=np.int64)
    pos[active_ids] = np.arange(active_ids.size)

    inv_h2 = 1.0 / (h * h)
    diag = np.full(active_ids.size, 4.0 * inv_h2, dtype=complex)
    if not barrier.is_hard_wall and barrier.n_value != 0.0:
        diag[inside_disk.ravel()[active_ids]] += barrier.n_value

    rows = [np.arange(active_ids.size)]
    cols = [np.arange(active_ids.size)]
    data = [diag]

    def add_edges(id_a, id_b, theta):
        pa = pos[id_a]
        pb = pos[id_b]
        keep = (pa >= 0) & (pb >= 0)
        pa, pb, th = pa[keep], pb[keep], theta[keep]
        hop = -np.exp(1j * th) * inv_h2
        rows.append(pa)
        cols.append(pb)
        data.append(hop)
        rows.append(pb)
        cols.append(pa)
        data.append(np.conj(hop))

    # horizontal edges (ix, iy) -> (ix+1, iy)
    exi, eyi = np.meshgrid(np.arange(n - 1), np.arange(n), indexing="ij")
    add_edges(
        grid.node_id(exi, eyi).ravel(),
        grid.node_id(exi + 1, eyi).ravel(),
        gauge.theta_x.ravel(),
    )
    # vertical edges (ix, iy) -> (ix, iy+1)
    exi, eyi = np.meshgrid(np.arange(n), np.arange(n - 1), indexing="ij")
    add_edges(
        grid.node_id(exi, eyi).ravel(),
        grid.node_id(exi, eyi + 1).ravel(),
        gauge.theta_y.ravel(),
    )

    mat = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(active_ids.size, active_ids.size),
    ).tocsr()
    mat.sort_indices()
    return DiscreteHamiltonian(
        matrix=mat,
        grid=grid,
        spec=spec,
        barrier=barrier,
        half_length=spec.half_length_L,
        variant=variant,
        active_ids=active_ids,
    )


def gauge_transform(ham: DiscreteHamiltonian, chi) -> DiscreteHamiltonian:
    """Unitary conjugation H -> U* H U with U = diag(exp(i chi_j)).

    ``chi`` is either an array of phases over the active nodes or a
    callable chi(x, y) evaluated at the active node coordinates.
    Equivalently each link phase shifts by chi_k - chi_j; the diagonal is
    untouched (its conjugation cancels identically), so Hermiticity stays
    exact.
    """
    if callable(chi):
        x, y = ham.grid.node_xy
        chi_vals = np.asarray(
            chi(x.ravel()[ham.active_ids], y.ravel()[ham.active_ids]), dtype=float
        )
    else:
        chi_vals = np.asarray(chi, dtype=float)
    if chi_vals.shape != (ham.dimension,):
        raise ValueError("chi must supply one phase per active node")

    u = np.exp(1j * chi_vals)
    coo = ham.matrix.tocoo()
    upper = coo.row < coo.col
    diag = coo.row == coo.col
    ru, cu = coo.row[upper], coo.col[upper]
    du = np.conj(u[ru]) * coo.data[upper] * u[cu]
    rows = np.concatenate([coo.row[diag], ru, cu])
    cols = np.concatenate([coo.col[diag], cu, ru])
    data = np.concatenate([coo.data[diag], du, np.conj(du)])
    mat = sparse.coo_matrix(
        (data, (rows, cols)), shape=ham.matrix.shape
    ).tocsr()
    mat.sort_indices()
    return DiscreteHamiltonian(
        matrix=mat,
        grid=ham.grid,
        spec=ham.spec,
        barrier=ham.barrier,
        half_length=ham.half_length,
        variant=ham.variant,
        active_ids=ham.active_ids,
    )


def lowest_eigenvalues(ham: DiscreteHamiltonian, count: int = 20) -> np.ndarray:
    """Smallest eigenvalues by shift-invert Lanczos (deterministic start).

    The operators here are positive definite (Dirichlet box plus
    nonnegative potential), so shift-invert at zero is safe.
    """
    dim = ham.dimension
    if count >= dim - 1:
        raise ValueError("count must be well below the operator dimension")
    v0 = np.full(dim, 1.0 / math.sqrt(dim))
    vals = eigsh(
        ham.matrix, k=count, sigma=0.0, which="LM", v0=v0, return_eigenvectors=False
    )
    return np.sort(vals)
