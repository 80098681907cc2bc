"""
One-dimensional cell-centred finite-volume grid.

Fields are plain ``numpy`` arrays of length ``grid.n_cells`` sampled at the
cell centres ``x_i = (i + 1/2) dx``.  Fluxes live on the ``n_cells + 1``
faces ``x_{i-1/2} = i dx``; face ``0`` is the left boundary and face
``n_cells`` the right one.

Boundary kinds
--------------
zero_flux
    Total (diffusive + advective) flux vanishes at the boundary; population
    is conserved.
neumann
    Homogeneous Neumann data for the density only.  Advection through the
    boundary is still possible when the potential has a non-zero normal
    derivative, so mass is conserved only when that derivative vanishes.
dirichlet
    Hostile boundary, ``u = 0``.
periodic
    Wrap-around.
robin
    ``alpha * du/dn + beta * u = 0``.  With ``alpha = d`` and
    ``beta = -da/dn`` the total boundary flux vanishes, reproducing
    ``zero_flux``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError

BC_KINDS = ("zero_flux", "neumann", "dirichlet", "periodic", "robin")

_BC_ALIASES = {
    "zeroflux": "zero_flux",
    "zero-flux": "zero_flux",
    "reflecting": "zero_flux",
    "homogeneous_neumann": "neumann",
    "homogeneousneumann": "neumann",
    "homogeneous_dirichlet": "dirichlet",
    "homogeneousdirichlet": "dirichlet",
    "hostile": "dirichlet",
}


@dataclass(frozen=True)
class BoundaryCondition:
    kind: str
    alpha: float = 1.0
    beta: float | tuple = 0.0

    def __post_init__(self):
        kind = _BC_ALIASES.get(self.kind.lower(), self.kind.lower())
        if kind not in BC_KINDS:
            raise ConfigurationError(f"unknown boundary condition {self.kind!r}", key="grid.bc")
        object.__setattr__(self, "kind", kind)
        if kind == "robin" and self.alpha < 0:
            raise ConfigurationError("Robin alpha must be non-negative", key="grid.robin_alpha")
        beta = self.beta
        if np.ndim(beta) == 0:
            beta = (float(beta), float(beta))
        object.__setattr__(self, "beta", (float(beta[0]), float(beta[1])))

    @classmethod
    def zero_flux(cls):
        return cls("zero_flux")

    @classmethod
    def neumann(cls):
        return cls("neumann")

    @classmethod
    def dirichlet(cls):
        return cls("dirichlet")

    @classmethod
    def periodic(cls):
        return cls("periodic")

    @classmethod
    def robin(cls, alpha, beta):
        """``beta`` is a scalar or a ``(left, right)`` pair."""
        return cls("robin", float(alpha), beta)

    @property
    def is_periodic(self):
        return self.kind == "periodic"

    def ghost_ratios(self, dx):
        """Left/right ghost values as multiples of the adjacent interior value.

        Used for the diffusive stencil and for boundary face gradients.
        Periodic grids have no ghost cells and return ``None``.
        """
        if self.kind in ("zero_flux", "neumann"):
            return 1.0, 1.0
        if self.kind == "dirichlet":
            return -1.0, -1.0
        if self.kind == "robin":
            out = []
            for beta in self.beta:
                denom = 2.0 * self.alpha + beta * dx
                if denom == 0.0:
                    raise ConfigurationError("Robin coefficients make the ghost cell singular", key="grid.bc")
                out.append((2.0 * self.alpha - beta * dx) / denom)
            return tuple(out)
        return None


@dataclass(frozen=True)
class Grid:
    """Uniform 1-D cell-centred mesh on ``[0, length]``."""

    length: float
    n_cells: int
    bc: BoundaryCondition

    @property
    def dx(self):
        return self.length / self.n_cells

    @cached_property
    def centers(self):
        return (np.arange(self.n_cells) + 0.5) * self.dx

    @cached_property
    def faces(self):
        return np.arange(self.n_cells + 1) * self.dx

    def zeros(self):
        return np.zeros(self.n_cells)

    def with_bc(self, bc):
        return Grid(self.length, self.n_cells, bc)

    def wavenumber(self, j):
        """Wavenumber of mode index ``j`` (scalar or array)."""
        j = np.asarray(j, dtype=float)
        if self.bc.is_periodic:
            return 2.0 * np.pi * j / self.length
        return np.pi * j / self.length

    def wavenumbers(self, j_max):
        """Admissible wavenumbers ``k_j`` for mode indices ``0..j_max``."""
        j = np.arange(j_max + 1)
        if self.bc.is_periodic:
            return 2.0 * np.pi * j / self.length
        return np.pi * j / self.length


def build_grid(L, n, bc="zero_flux"):
    """Create a :class:`Grid`; ``bc`` may be a kind string or a BoundaryCondition."""
    if not np.isfinite(L) or L <= 0:
        raise ConfigurationError(f"domain length must be positive, got {L}", key="grid.L")
    if int(n) != n or n < 4:
        raise ConfigurationError(f"need an integer n >= 4 cells, got {n}", key="grid.n")
    if isinstance(bc, str):
        bc = BoundaryCondition(bc)
    return Grid(float(L), int(n), bc)


def total_mass(values, grid):
    """Midpoint quadrature of the integral of a field over the domain."""
    return grid.dx * float(np.sum(values))


def _ghosts(f, grid):
    """Left and right ghost values honouring the boundary condition."""
    rl, rr = grid.bc.ghost_ratios(grid.dx)
    return rl * f[0], rr * f[-1]


def face_gradient(f, grid):
    """Discrete gradient on the ``n + 1`` faces.

    Interior faces hold ``(f_i - f_{i-1}) / dx``.  Boundary faces use the ghost
    cell of the grid's boundary condition: mirrored for zero-flux/Neumann
    (giving zero), odd reflection for Dirichlet, the Robin ghost otherwise.
    Periodic grids give identical wrap faces.
    """
    f = np.asarray(f, dtype=float)
    dx = grid.dx
    g = np.empty(f.size + 1)
    g[1:-1] = (f[1:] - f[:-1]) / dx
    if grid.bc.is_periodic:
        g[0] = g[-1] = (f[0] - f[-1]) / dx
    else:
        left, right = _ghosts(f, grid)
        g[0] = (f[0] - left) / dx
        g[-1] = (right - f[-1]) / dx
    return g


def boundary_gradients(f, grid):
    """Gradient on the two boundary faces only (see :func:`face_gradient`)."""
    dx = grid.dx
    if grid.bc.is_periodic:
        g = (f[0] - f[-1]) / dx
        return g, g
    left, right = _ghosts(f, grid)
    return (f[0] - left) / dx, (right - f[-1]) / dx


def potential_gradient(a, grid):
    """Face gradient of an advective potential.

    Unlike :func:`face_gradient`, non-periodic boundary faces carry the
    second-order one-sided extrapolation of the potential's slope, since a
    given potential is not subject to the density's boundary condition.
    Whether that slope actually transports mass across the boundary is
    decided by the flux assembly in :mod:`cogmove.stepper`.
    """
    a = np.asarray(a, dtype=float)
    dx = grid.dx
    g = np.empty(a.size + 1)
    g[1:-1] = (a[1:] - a[:-1]) / dx
    if grid.bc.is_periodic:
        g[0] = g[-1] = (a[0] - a[-1]) / dx
    else:
        g[0] = (-2.0 * a[0] + 3.0 * a[1] - a[2]) / dx
        g[-1] = (2.0 * a[-1] - 3.0 * a[-2] + a[-3]) / dx
    return g


def boundary_value(f, grid):
    """Density value on the two boundary faces (mean of cell and ghost)."""
    if grid.bc.is_periodic:
        v = 0.5 * (f[0] + f[-1])
        return v, v
    left, right = _ghosts(f, grid)
    return 0.5 * (f[0] + left), 0.5 * (f[-1] + right)


def divergence(flux, grid):
    """Cell divergence of a face flux array."""
    return (flux[1:] - flux[:-1]) / grid.dx


def laplacian_matrix(grid):
    """Sparse cell-centred Laplacian with the grid's boundary condition."""
    n = grid.n_cells
    inv = 1.0 / grid.dx**2
    main = np.full(n, -2.0 * inv)
    off = np.full(n - 1, inv)
    mat = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    if grid.bc.is_periodic:
        mat[0, n - 1] = inv
        mat[n - 1, 0] = inv
    else:
        rl, rr = grid.bc.ghost_ratios(grid.dx)
        mat[0, 0] += rl * inv
        mat[n - 1, n - 1] += rr * inv
    return mat.tocsc()


def boundary_flux(u, grid, d, velocity_faces):
    """Outward total flux ``J.n`` through the left and right boundary.

    ``J = -d u_x + u v`` with ``v`` the face velocity.  Returns a pair; for
    ``zero_flux`` both are zero by definition, for Robin data they are
    ``u_b (d beta / alpha + v.n)`` which vanishes when ``alpha = d`` and
    ``beta = -v.n``.
    """
    if grid.bc.kind == "zero_flux":
        return 0.0, 0.0
    g = face_gradient(u, grid)
    ub_left, ub_right = boundary_value(u, grid)
    # outward normal is -x on the left, +x on the right
    left = -(-d * g[0] + ub_left * velocity_faces[0])
    right = -d * g[-1] + ub_right * velocity_faces[-1]
    return float(left), float(right)
