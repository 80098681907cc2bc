"""Advective potentials and face velocities.

A face velocity is the array of ``n_cells + 1`` drift values on cell faces;
the advective flux of a density ``u`` is ``u * velocity``.
"""

import numpy as np

from ..errors import ConfigurationError, DegenerateLandscapeError
from ..grid import potential_gradient, total_mass
from ..kernels import perceive
from .reactions import EPS_FLOOR, satisfaction, starvation_rate


def den_site_potential(grid, x0, gamma):
    if not 0.0 <= x0 <= grid.length:
        raise ConfigurationError(f"den site x0={x0} outside [0, {grid.length}]", key="model.x0")
    return gamma * np.abs(grid.centers - x0)


def static_potential(kind, grid, gamma=1.0, m=None, x0=None, u=None):
    """Static cognitive map.

    ``den_site`` gives ``gamma |x - x0|``; the map-based kinds return the
    unscaled map (``m``, ``m / mean(m)`` or ``m / u``), with ``gamma``
    applied as the advection rate by the caller.
    """
    if kind == "den_site":
        return den_site_potential(grid, grid.length / 2 if x0 is None else x0, gamma)
    if m is None:
        raise ConfigurationError(f"static map {kind!r} needs a landscape m", key="model.m")
    m = np.asarray(m, dtype=float)
    if kind == "given_map":
        return m.copy()
    if kind == "avg_density":
        mean = total_mass(m, grid) / grid.length
        if mean == 0.0:
            raise DegenerateLandscapeError("average resource density is zero")
        return m / mean
    if kind == "per_capita":
        if u is None:
            raise ConfigurationError("per-capita map needs the current density", key="model.u")
        return m / np.maximum(u, EPS_FLOOR)
    raise ConfigurationError(f"unknown static map {kind!r}", key="model.variant")


def gradient_velocity(potential, grid, rate=1.0):
    """``rate * d(potential)/dx`` on faces."""
    return rate * potential_gradient(potential, grid)


def aggregation_velocity(u, gamma, kernel, grid):
    """Per-species face velocities ``d/dx sum_j gamma_ij perceive(u_j)``.

    ``u`` is one density (with scalar ``gamma``) or a sequence of densities
    with a square ``gamma`` matrix.
    """
    if np.ndim(gamma) == 0:
        return gradient_velocity(perceive(u, kernel, grid), grid, float(gamma))
    gamma = np.asarray(gamma, dtype=float)
    n = len(u)
    if gamma.shape != (n, n):
        raise ConfigurationError(f"gamma must be {n}x{n}", key="model.gamma")
    # summing per-term gradients keeps one species bitwise equal to the scalar path
    slopes = [potential_gradient(perceive(u_j, kernel, grid), grid) for u_j in u]
    out = []
    for i in range(n):
        vel = np.zeros(grid.n_cells + 1)
        for j in range(n):
            if gamma[i, j] != 0.0:
                vel = vel + gamma[i, j] * slopes[j]
        out.append(vel)
    return out


def sda_potential(u, m, grid, x0, gamma, gamma_plus, response="step", sharpness=10.0,
                  kind="supply_demand"):
    """``rate(s) * m - gamma |x - x0|``: resource pull when hungry, den pull always."""
    s = satisfaction(kind, m, u)
    rate = starvation_rate(s, gamma_plus, response, sharpness)
    return rate * m - den_site_potential(grid, x0, gamma)


def sda_den_site_velocity(u, m, x0, gamma, gamma_plus, grid, response="step", sharpness=10.0,
                          kind="supply_demand"):
    if not 0 < gamma < gamma_plus:
        raise ConfigurationError("need 0 < gamma < gamma_plus", key="model.gamma")
    pot = sda_potential(u, m, grid, x0, gamma, gamma_plus, response, sharpness, kind)
    return gradient_velocity(pot, grid)


def delay_potential(buf, species, t, tau):
    """Field ``species`` at ``t - tau`` from the history buffer."""
    if tau < 0:
        raise ConfigurationError("delay must be non-negative", key="delay.tau")
    return buf.sample(species, t - tau)


def nonlocal_argument(kind, u, grid, buf=None, species="u", t=None, sigma=0.0, kernel_matrix=None):
    """Argument ``w`` of the growth law ``f(u, w)``.

    ``local`` -> ``u``; ``spatial_average`` -> domain mean of ``u``;
    ``temporal_delay`` -> ``u(t - sigma)``; ``kernel_delay`` ->
    ``int K(x, y) u(y, t - sigma) dy`` with ``K = 1/L`` unless a tabulated
    ``(n, n)`` kernel matrix (already multiplied by ``dx``) is supplied.
    """
    if kind == "local":
        return u
    if kind == "spatial_average":
        return np.full(grid.n_cells, total_mass(u, grid) / grid.length)
    delayed = u if (sigma == 0.0 or buf is None) else buf.sample(species, t - sigma)
    if kind == "temporal_delay":
        return delayed
    if kind == "kernel_delay":
        if kernel_matrix is None:
            return np.full(grid.n_cells, total_mass(delayed, grid) / grid.length)
        return kernel_matrix @ delayed
    raise ConfigurationError(f"unknown growth argument {kind!r}", key="model.growth")
