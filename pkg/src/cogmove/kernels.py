"""
Perceptual kernels and the nonlocal perception operator.

A kernel turns a landscape field ``a`` into what an individual at ``x``
perceives of it, ``sum_j a_j * int_{cell j} g(y - x) dy``.  Cell weights are
exact integrals of the kernel density (via its antiderivative), so the
discontinuous top hat keeps its convergence order.

On bounded grids the part of the kernel lying outside ``[0, L]`` is simply
dropped (``cutoff``) or the remaining row is rescaled to unit mass
(``cutoff_renormalized``).  Periodic grids fold every image of the kernel
back onto the circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

from .errors import ConfigurationError

SHAPES = ("delta", "tophat", "gaussian", "exponential")
BOUNDARY_MODES = ("cutoff", "cutoff_renormalized")

_SHAPE_ALIASES = {"top_hat": "tophat", "top-hat": "tophat", "exp": "exponential", "local": "delta"}
_MODE_ALIASES = {"cut_off": "cutoff", "renormalized": "cutoff_renormalized",
                 "cutoffrenormalized": "cutoff_renormalized"}

# Gaussian/exponential mass beyond this many R is below double precision.
_TAIL_RADII = 40.0


@dataclass(frozen=True)
class KernelSpec:
    shape: str = "delta"
    R: float = 0.0
    boundary_mode: str = "cutoff"

    def __post_init__(self):
        shape = _SHAPE_ALIASES.get(self.shape.lower(), self.shape.lower())
        if shape not in SHAPES:
            raise ConfigurationError(f"unknown kernel shape {self.shape!r}; choose from {SHAPES}",
                                     key="kernel.shape")
        mode = _MODE_ALIASES.get(self.boundary_mode.lower(), self.boundary_mode.lower())
        if mode not in BOUNDARY_MODES:
            raise ConfigurationError(f"unknown boundary mode {self.boundary_mode!r}",
                                     key="kernel.boundary_mode")
        R = float(self.R)
        if not np.isfinite(R) or R < 0:
            raise ConfigurationError(f"perceptual range must be >= 0, got {self.R}", key="kernel.radius")
        if shape == "delta":
            R = 0.0
        elif R == 0.0:
            raise ConfigurationError("R = 0 is only allowed for the delta kernel", key="kernel.radius")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "boundary_mode", mode)
        object.__setattr__(self, "R", R)

    @property
    def is_delta(self):
        return self.shape == "delta"

    def support(self):
        """Half-width outside which the density is numerically zero."""
        if self.shape == "tophat":
            return self.R
        return _TAIL_RADII * self.R


def kernel_density(spec, x):
    """Pointwise kernel density ``g(x)``; vectorized over ``x``."""
    if spec.is_delta:
        raise ConfigurationError("the delta kernel has no pointwise density", key="kernel.shape")
    x = np.abs(np.asarray(x, dtype=float))
    R = spec.R
    if spec.shape == "tophat":
        out = np.where(x <= R, 1.0 / (2.0 * R), 0.0)
    elif spec.shape == "gaussian":
        out = np.exp(-0.5 * (x / R) ** 2) / (math.sqrt(2.0 * math.pi) * R)
    else:
        out = np.exp(-x / R) / (2.0 * R)
    return out[()] if out.ndim == 0 else out


def kernel_cdf(spec, x):
    """Antiderivative ``int_{-inf}^x g``, used for exact cell integrals."""
    x = np.asarray(x, dtype=float)
    R = spec.R
    if spec.shape == "tophat":
        return np.clip((x + R) / (2.0 * R), 0.0, 1.0)
    if spec.shape == "gaussian":
        return ndtr(x / R)
    half = 0.5 * np.exp(-np.abs(x) / R)
    return np.where(x < 0, half, 1.0 - half)


def _cell_integrals(spec, offsets, dx):
    """Mass of the kernel over cells centred at ``offsets * dx``."""
    hi = kernel_cdf(spec, (offsets + 0.5) * dx)
    lo = kernel_cdf(spec, (offsets - 0.5) * dx)
    return hi - lo


def periodic_stencil(spec, grid):
    """Circulant first column: weight of cell ``j`` seen from cell ``0``.

    Sums the kernel over all periodic images so wide tails wrap correctly.
    """
    n, dx = grid.n_cells, grid.dx
    col = np.zeros(n)
    if spec.is_delta:
        col[0] = 1.0
        return col
    m_max = int(math.ceil(spec.support() / grid.length)) + 1
    base = np.arange(n, dtype=float)
    base[base > n // 2] -= n
    for m in range(-m_max, m_max + 1):
        col += _cell_integrals(spec, base + m * n, dx)
    return col


def _check_range(spec, grid):
    if not spec.is_delta and spec.R >= grid.length:
        raise ConfigurationError(f"perceptual range R={spec.R} must be below the domain length "
                                 f"{grid.length}", key="kernel.radius")


def kernel_weights(spec, grid):
    """Discrete perception stencil.

    Returns the ``(n, n)`` matrix ``P`` with ``(P a)_i`` the perceived value at
    cell ``i``.  Row ``i`` holds the kernel mass over each cell seen from
    ``x_i``; delta, periodic folding and boundary cut-off are all expressed
    in this one array.
    """
    _check_range(spec, grid)
    return _perception_matrix(spec, grid).copy()


@lru_cache(maxsize=64)
def _perception_matrix(spec, grid):
    n = grid.n_cells
    if spec.is_delta:
        mat = np.eye(n)
    elif grid.bc.is_periodic:
        col = periodic_stencil(spec, grid)
        idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
        mat = col[idx]
    else:
        offsets = np.arange(n)[None, :] - np.arange(n)[:, None]
        mat = _cell_integrals(spec, offsets.astype(float), grid.dx)
        if spec.boundary_mode == "cutoff_renormalized":
            mat /= mat.sum(axis=1, keepdims=True)
    mat.setflags(write=False)
    return mat


def perceive(a, spec, grid, method="auto"):
    """Perceived field ``sum_j P_ij a_j``.

    ``method`` is ``"direct"``, ``"fft"`` (periodic grids only) or ``"auto"``,
    which takes the FFT path on periodic grids with more than 256 cells.
    """
    a = np.asarray(a, dtype=float)
    if spec.is_delta:
        return a.copy()
    _check_range(spec, grid)
    if method == "auto":
        method = "fft" if grid.bc.is_periodic and grid.n_cells > 256 else "direct"
    if method == "fft":
        if not grid.bc.is_periodic:
            raise ConfigurationError("the FFT perception path needs a periodic grid", key="kernel")
        return _perceive_fft(a, spec, grid)
    if method != "direct":
        raise ConfigurationError(f"unknown perception method {method!r}", key="kernel")
    return _perception_matrix(spec, grid) @ a


@lru_cache(maxsize=64)
def _stencil_spectrum(spec, grid):
    col = periodic_stencil(spec, grid)
    # perceived_i = sum_j col[j - i] a_j, a correlation; col is even so this equals convolution
    return np.fft.rfft(col)


def _perceive_fft(a, spec, grid):
    return np.fft.irfft(np.fft.rfft(a) * _stencil_spectrum(spec, grid), n=grid.n_cells)


def fourier_symbol(spec, k):
    """Cosine transform ``int g(x) cos(kx) dx`` of the kernel on the line."""
    k = np.asarray(k, dtype=float)
    R = spec.R
    if spec.is_delta:
        out = np.ones_like(k)
    elif spec.shape == "tophat":
        out = np.sinc(k * R / np.pi)
    elif spec.shape == "gaussian":
        out = np.exp(-0.5 * (k * R) ** 2)
    else:
        out = 1.0 / (1.0 + (k * R) ** 2)
    return out[()] if out.ndim == 0 else out


def clear_cache():
    _perception_matrix.cache_clear()
    _stencil_spectrum.cache_clear()
