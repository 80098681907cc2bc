"""Lattice master-equation oracle for the drift-diffusion limit.

A walker on a 1-D lattice jumps with a symmetric displacement kernel K,
reweighted at the destination by ``w(x) = exp(sum_i beta_i a_i(x))`` and
normalized per source point.  One-step conditional moments are summed
exactly, giving the drift ``c`` and diffusion ``d`` of the limiting
advection-diffusion equation, which predicts ``c = 2 d sum_i beta_i a_i'``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, TruncationError
from .grid import build_grid
from .kernels import KernelSpec
from .models.spec import make_model
from .stepper import StepConfig, run

MASS_LOSS_TOL = 1e-12


@dataclass(frozen=True)
class LatticeKernel:
    spacing: float
    sigma: float
    tau_step: float
    offsets: np.ndarray
    weights: np.ndarray

    @property
    def half_width(self):
        return int(self.offsets[-1])

    def moment(self, p):
        return float(np.sum((self.offsets * self.spacing) ** p * self.weights))

    @property
    def diffusion_1d(self):
        return self.moment(2) / (2.0 * self.tau_step)

    @property
    def diffusion_2d_convention(self):
        return self.moment(2) / (4.0 * self.tau_step)


def lattice_kernel(sigma, spacing, tau_step, width=6.0):
    """Discrete Gaussian with standard deviation ``sigma`` cut at ``width * sigma``."""
    if not (sigma > 0 and spacing > 0 and tau_step > 0):
        raise ConfigurationError("sigma, spacing and tau_step must be positive", key="oracle.sigma")
    m = int(math.ceil(width * sigma / spacing))
    if m < 2:
        raise ConfigurationError("kernel spans fewer than two lattice sites; refine the lattice",
                                 key="oracle.spacing")
    z = np.arange(-m, m + 1)
    w = np.exp(-0.5 * (z * spacing / sigma) ** 2)
    w /= w.sum()
    # exact mirror symmetry so odd moments vanish
    w = 0.5 * (w + w[::-1])
    return LatticeKernel(float(spacing), float(sigma), float(tau_step), z, w)


def weight_field(covariates, x):
    """``exp(sum beta_i a_i(x))`` from ``[(beta_i, a_i), ...]``; ``a_i`` callable or array."""
    log_w = np.zeros_like(x)
    for beta, a in covariates:
        vals = a(x) if callable(a) else np.asarray(a, dtype=float)
        log_w = log_w + beta * vals
    return np.exp(log_w - np.max(log_w))


def _convolve(f, kernel, periodic):
    if periodic:
        m = kernel.half_width
        padded = np.concatenate([f[-m:], f, f[:m]])
        return np.convolve(padded, kernel.weights, mode="valid")
    return np.convolve(f, kernel.weights, mode="same")


def master_step(p, kernel, w, periodic=False):
    """One redistribution step ``p'(x) = sum_y K(x-y) w(x) p(y) / N(y)``."""
    p = np.asarray(p, dtype=float)
    normalizer = _convolve(w, kernel, periodic)
    return w * _convolve(p / normalizer, kernel, periodic)


def step_moments(kernel, w, i0, periodic=False, max_power=3):
    """Exact moments ``E[dx^p]``, ``p = 1..max_power``, of one step from lattice site ``i0``."""
    n = len(w)
    m = kernel.half_width
    idx = i0 + kernel.offsets
    inside = (idx >= 0) & (idx < n)
    if periodic:
        idx = idx % n
        inside[:] = True
    lost = float(kernel.weights[~inside].sum())
    if lost > MASS_LOSS_TOL:
        raise TruncationError(f"kernel support around site {i0} leaves the lattice "
                              f"(mass loss {lost:.3g}); widen the lattice")
    f = np.zeros(len(idx))
    f[inside] = kernel.weights[inside] * w[idx[inside]]
    f = f / f.sum()
    # pair each offset with its mirror so symmetric weights cancel exactly
    pos = kernel.offsets > 0
    dz = kernel.offsets[pos] * kernel.spacing
    right, left = f[pos], f[::-1][pos]
    return [float(np.sum(dz**p * (right + (-1) ** p * left))) for p in range(1, max_power + 1)]


def estimate_drift_diffusion(kernel, w, i0, periodic=False):
    """``(c_hat, d_hat)`` at site ``i0``: first moment over ``tau`` and second over ``2 tau``."""
    m1, m2, _ = step_moments(kernel, w, i0, periodic)
    return m1 / kernel.tau_step, m2 / (2.0 * kernel.tau_step)


def _derivative(a, x, spacing):
    if callable(a):
        eps = 1e-4 * spacing
        return (a(x + eps) - a(x - eps)) / (2.0 * eps)
    return np.gradient(np.asarray(a, dtype=float), spacing)


def drift_table(covariates, sigma, tau_step, length, spacing, samples=None, margin=None):
    """Compare ``c_hat / (2 d_hat)`` with ``sum beta_i a_i'`` at sample sites.

    Sites within ``margin`` (default eight kernel widths) of either end are
    excluded as the truncation zone.
    """
    kernel = lattice_kernel(sigma, spacing, tau_step)
    n = int(round(length / spacing)) + 1
    x = np.arange(n) * spacing
    w = weight_field(covariates, x)
    slope = np.zeros(n)
    for beta, a in covariates:
        slope = slope + beta * _derivative(a, x, spacing)
    margin = 8.0 * sigma if margin is None else margin
    if samples is None:
        samples = np.linspace(margin, length - margin, 41)
    rows = []
    for xs in samples:
        i0 = int(round(xs / spacing))
        c_hat, d_hat = estimate_drift_diffusion(kernel, w, i0)
        ratio = c_hat / (2.0 * d_hat)
        pred = slope[i0]
        rows.append({"x": float(x[i0]), "c_hat": c_hat, "d_hat": d_hat, "ratio": ratio,
                     "predicted": float(pred)})
    scale = max(abs(r["predicted"]) for r in rows) if rows else 0.0
    for r in rows:
        if abs(r["predicted"]) > 1e-8 * max(scale, 1e-300):
            r["rel_dev"] = abs(r["ratio"] - r["predicted"]) / abs(r["predicted"])
        else:
            r["rel_dev"] = abs(r["ratio"] - r["predicted"]) / max(scale, 1e-300)
    return kernel, rows


def master_vs_pde(covariates, sigma, tau_step, length, spacing, p0, t_final=1.0, dt=None):
    """L1 distance at ``t_final`` between the periodic master equation and
    the advection-diffusion equation with potential ``2 d sum beta_i a_i``."""
    kernel = lattice_kernel(sigma, spacing, tau_step)
    n = int(round(length / spacing))
    x = (np.arange(n) + 0.5) * spacing
    w = weight_field(covariates, x)
    p0 = np.asarray(p0(x) if callable(p0) else p0, dtype=float)
    density0 = p0 / (p0.sum() * spacing)
    p = density0 * spacing
    n_steps = int(round(t_final / tau_step))
    for _ in range(n_steps):
        p = master_step(p, kernel, w, periodic=True)
    d = kernel.diffusion_1d
    potential = np.zeros(n)
    for beta, a in covariates:
        vals = a(x) if callable(a) else np.asarray(a, dtype=float)
        potential = potential + 2.0 * d * beta * vals
    grid = build_grid(length, n, "periodic")
    model = make_model("prototype", {"d": d, "potential": potential}, KernelSpec())
    cfg = StepConfig(t_end=n_steps * tau_step, dt_max=dt or min(tau_step, 1e-3),
                     snapshot_every=n_steps * tau_step, advection="central")
    traj = run(model, grid, density0[None, :], cfg)
    u = traj.final[0]
    return {"l1": float(np.sum(np.abs(p / spacing - u)) * spacing), "d_hat": d,
            "n_steps": n_steps, "mass_master": float(p.sum())}


def verify_fokker_planck(covariates, sigma, tau_step, length=1.0, spacing=None, t_final=1.0,
                         p0=None, samples=None):
    """Drift-table comparison plus a master-versus-PDE evolution."""
    spacing = spacing or sigma / 5.0
    kernel, rows = drift_table(covariates, sigma, tau_step, length, spacing, samples)
    if p0 is None:
        def p0(x):
            return np.exp(-0.5 * ((x - 0.5 * length) / (0.1 * length)) ** 2)
    evo = master_vs_pde(covariates, sigma, tau_step, length, spacing, p0, t_final)
    return {
        "rows": rows,
        "max_rel_dev": max(r["rel_dev"] for r in rows),
        "d_hat_1d": kernel.diffusion_1d,
        "d_hat_2d_convention": kernel.diffusion_2d_convention,
        "second_moment": kernel.moment(2),
        "l1_master_vs_pde": evo["l1"],
        "t_final": t_final,
    }
