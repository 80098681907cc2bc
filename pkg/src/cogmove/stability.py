"""Linear stability of homogeneous states.

Growth rates are derived by linearizing each family about its constant
state and projecting onto a single Fourier/cosine mode.  Every formula here
is a derived construction; :func:`measure_growth_rate` is the simulation
side of the cross-check.
"""

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AnalysisUnavailableError, ConfigurationError, RootFindingError
from .grid import total_mass
from .kernels import KernelSpec, fourier_symbol
from .models.system import homogeneous_steady_state

MAX_ITER = 200


def dispersion_aggregation(d, gamma, u_star, kernel, k):
    """Growth rate ``-d k^2 + gamma u* k^2 g(k)`` of the aggregation model."""
    if not u_star > 0:
        raise ConfigurationError("u_star must be positive", key="stability.u_star")
    k = np.asarray(k, dtype=float)
    out = -d * k**2 + gamma * u_star * k**2 * fourier_symbol(kernel, k)
    return float(out) if out.ndim == 0 else out


def _newton(F, dF, lam, tol=1e-13):
    for it in range(MAX_ITER):
        f = F(lam)
        df = dF(lam)
        if df == 0:
            break
        step = f / df
        lam = lam - step
        if abs(step) <= tol * max(1.0, abs(lam)):
            return lam, it + 1
    raise RootFindingError("characteristic root did not converge",
                           {"last": complex(lam), "residual": abs(F(lam))})


def delay_characteristic_root(d1, gamma, u_star, fprime, tau, k, kernel=None, n_continuation=64,
                              full_output=False):
    """Leading root of ``lam = A + B exp(-lam tau)`` with
    ``A = -d1 k^2 + fprime`` and ``B = gamma u* k^2 g(k)``.

    The root is continued in the delay from the explicit ``tau = 0`` value
    ``A + B`` by complex Newton iteration.  A small imaginary offset on each
    predictor lets the path leave the real axis where two real roots merge.
    """
    if tau < 0:
        raise ConfigurationError("tau must be non-negative", key="delay.tau")
    kernel = kernel or KernelSpec()
    A = -d1 * k**2 + fprime
    B = gamma * u_star * k**2 * float(fourier_symbol(kernel, k))
    lam = complex(A + B)
    info = {"A": A, "B": B, "steps": 0, "branch_jumps": 0}
    if tau == 0 or B == 0:
        return (lam, info) if full_output else lam
    taus = tau * (np.arange(1, n_continuation + 1) / n_continuation) ** 2
    for s in taus:
        def F(z):
            return z - A - B * cmath.exp(-z * s)

        def dF(z):
            return 1.0 + B * s * cmath.exp(-z * s)
        guess = lam + 1e-7j * max(1.0, abs(lam))
        new, it = _newton(F, dF, guess)
        info["steps"] += it
        if abs(new - lam) > 0.5 * max(1.0, abs(lam)):
            info["branch_jumps"] += 1
        lam = complex(new.real, abs(new.imag)) if abs(new.imag) > 1e-10 else complex(new.real, 0.0)
    return (lam, info) if full_output else lam


def delay_threshold(d1, u_star, fprime, tau, k, kernel=None, gamma_hi=None, tol=1e-12):
    """Smallest advection rate ``gamma > 0`` at which mode ``k`` grows, by
    bisection on the sign of the leading root's real part."""
    kernel = kernel or KernelSpec()

    def growth(g):
        return delay_characteristic_root(d1, g, u_star, fprime, tau, k, kernel).real

    lo = 0.0
    if growth(lo) > 0:
        return 0.0
    hi = gamma_hi or 1.0
    for _ in range(200):
        if growth(hi) > 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise RootFindingError("no unstable advection rate found", {"k": k, "gamma_hi": hi})
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if growth(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def delay_instability_threshold(d1, u_star, fprime, tau, grid, j_max=32, kernel=None):
    """Advection threshold of the scalar delay model: minimum over modes ``1..j_max``."""
    ks = grid.wavenumbers(j_max)[1:]
    values = [delay_threshold(d1, u_star, fprime, tau, k, kernel) for k in ks]
    j = int(np.argmin(values))
    return values[j], j + 1


def logistic_eigenvalue(D, r, L, bc="neumann"):
    """Principal eigenvalue of the linearized logistic problem and its
    sensitivities to ``D``, ``r`` and ``L``."""
    for key, v in (("D", D), ("r", r), ("L", L)):
        if not v > 0:
            raise ConfigurationError("must be positive", key=f"stability.{key}")
    if bc in ("neumann", "zero_flux"):
        return {"mu1": -float(r), "d_mu1_dD": 0.0, "d_mu1_dr": -1.0, "d_mu1_dL": 0.0}
    if bc == "dirichlet":
        return {"mu1": -r / D + (math.pi / L) ** 2, "d_mu1_dD": r / D**2, "d_mu1_dr": -1.0 / D,
                "d_mu1_dL": -2.0 * math.pi**2 / L**3}
    raise ConfigurationError(f"unsupported boundary condition {bc!r}", key="stability.bc")


# Linearized mode matrices per family.

def _aggregation_matrix(model, k, state):
    p = model.params
    g = float(fourier_symbol(model.kernel, k))
    return np.array([[-p["d"] * k**2 + p["gamma"] * state[0] * k**2 * g]])


def _multi_matrix(model, k, state):
    p = model.params
    n = p["n_species"]
    g = float(fourier_symbol(model.kernel, k))
    A = np.asarray(p["gamma"]) * state[:n, None] * k**2 * g
    A[np.diag_indices(n)] -= np.asarray(p["d"]) * k**2
    return A


def _marks_matrix(model, k, state):
    p = model.params
    n = p["n_species"]
    g = float(fourier_symbol(model.kernel, k))
    A = np.zeros((2 * n, 2 * n))
    for i in range(n):
        A[i, i] = -p["d"][i] * k**2
        A[i, n + i] = p["gamma"][i] * state[i] * k**2 * g
        A[n + i, :n] = p["alpha"][i]
        A[n + i, n + i] = -p["mu"]
    return A


def _conflict_matrix(model, k, state):
    p = model.params
    n = p["n_species"]
    g = float(fourier_symbol(model.kernel, k))
    rho, mu, beta = np.asarray(p["rho"]), p["mu"], p["beta"]
    u, kk = state[:n], state[n:]
    lead_gain = g if p["nonlocal_conflict"] else 1.0
    A = np.zeros((2 * n, 2 * n))
    for i in range(n):
        A[i, i] = -p["d"][i] * k**2
        # repulsion from the perceived map
        A[i, n + i] = -p["gamma"][i] * u[i] * k**2 * g
        growth = u[i] * (rho[i] @ u)
        dG = u[i] * rho[i].copy()
        dG[i] += lead_gain * (rho[i] @ u)
        factor = 1.0 - kk[i] if p["variant"] == "probability" else 1.0
        A[n + i, :n] = dG * factor
        A[n + i, i] -= beta * kk[i]
        A[n + i, n + i] = -(mu + beta * u[i]) - p["epsilon"][i] * k**2
        if p["variant"] == "probability":
            A[n + i, n + i] -= growth
    return A


def _cr_matrix(model, k, state):
    p = model.params
    c, beta, alpha, death, r, K = (p[x] for x in ("c", "beta", "alpha", "death", "r", "K"))
    g = float(fourier_symbol(model.kernel, k))
    u, v = state[0], state[1]
    h = v / (alpha + v)
    hv = alpha / (alpha + v) ** 2
    has_q = p["map"] != "none"
    n = 3 if has_q else 2
    A = np.zeros((n, n))
    A[0, 0] = -p["D1"] * k**2 + c * beta * h - death
    A[0, 1] = c * beta * u * hv
    A[1, 0] = -beta * h
    A[1, 1] = -p["D2"] * k**2 + r * (1 - 2 * v / K) - beta * u * hv
    target = 2 if has_q else 1
    A[0, target] += p["gamma"] * u * k**2 * g
    if p["map"] == "linear_q":
        A[2, 1] = p["b"]
        A[2, 2] = -p["mu"]
    elif p["map"] == "bilinear_q":
        q = state[2]
        A[2, 0] = p["b"] * v - p["xi"] * q
        A[2, 1] = p["b"] * u
        A[2, 2] = -(p["mu"] + p["xi"] * u)
    return A


def _distributed_matrix(model, k, state):
    p = model.params
    if p["maturation"]:
        raise AnalysisUnavailableError("no mode matrix for the maturation pathway")
    tau, d, d3, r, gamma = model.temporal.tau, p["d"], p["d3"], p["r"], p["gamma"]
    strong = model.temporal.kind == "strong"
    n = 3 if strong else 2
    A = np.zeros((n, n))
    A[0, 0] = -d * k**2 - r * (state[0] / p["K"] if r > 0 else 0.0)
    A[0, n - 1] = gamma * state[0] * k**2
    A[1, 0] = 1.0 / tau
    A[1, 1] = -d3 * k**2 - 1.0 / tau
    if strong:
        A[2, 1] = 1.0 / tau
        A[2, 2] = -d3 * k**2 - 1.0 / tau
    return A


_MATRICES = {
    "aggregation": _aggregation_matrix,
    "multi_aggregation": _multi_matrix,
    "marks": _marks_matrix,
    "conflict_zones": _conflict_matrix,
    "consumer_resource": _cr_matrix,
    "distributed": _distributed_matrix,
}


def mode_matrix(model, k, state=None, grid=None):
    """Linearized operator of one mode about the homogeneous ``state``
    (values per field, one per row of the family's field list)."""
    if model.family not in _MATRICES:
        raise AnalysisUnavailableError(f"no mode matrix for family {model.family!r}")
    if state is None:
        if grid is None:
            raise ConfigurationError("need a grid or an explicit state", key="stability.state")
        state = homogeneous_steady_state(model, grid)[:, 0]
    return _MATRICES[model.family](model, k, np.asarray(state, dtype=float))


@dataclass
class DispersionResult:
    modes: np.ndarray
    wavenumbers: np.ndarray
    growth: np.ndarray
    flags: tuple = ("derived-construction",)
    cross_checked: bool = False
    info: dict = field(default_factory=dict)

    @property
    def unstable(self):
        return [int(j) for j, g in zip(self.modes, self.growth) if g.real > 0]

    def rows(self):
        for j, k, g in zip(self.modes, self.wavenumbers, self.growth):
            yield int(j), float(k), float(g.real), float(g.imag), bool(g.real > 0)


def _leading(eigs):
    return eigs[np.argmax(eigs.real)]


def dispersion(model, grid, j_max=64, state=None, tol=1e-12):
    """Leading growth rate of modes ``0..j_max`` about the homogeneous state."""
    modes = np.arange(0, j_max + 1)
    ks = grid.wavenumbers(j_max)
    if model.family == "discrete_delay":
        if model.params["variant"] != "scalar" or model.params["growth"] != "local":
            raise AnalysisUnavailableError("characteristic roots are implemented for the "
                                           "scalar delay model with local growth only")
        u_star = homogeneous_steady_state(model, grid)[0, 0] if state is None else state[0]
        fprime = -model.params["r"] if model.params["r"] > 0 else 0.0
        growth = np.array([delay_characteristic_root(model.params["d"], model.params["gamma"],
                                                     u_star, fprime, model.temporal.tau, k)
                           for k in ks])
    else:
        if state is None:
            state = homogeneous_steady_state(model, grid)[:, 0]
        growth = np.array([_leading(np.linalg.eigvals(mode_matrix(model, k, state))) for k in ks],
                          dtype=complex)
    growth.real[np.abs(growth.real) < tol] = 0.0
    return DispersionResult(modes, ks, growth, info={"family": model.family})


def unstable_set(model, grid, j_max=64, state=None):
    """Mode indices ``j >= 1`` whose leading growth rate is positive."""
    res = dispersion(model, grid, j_max, state)
    return {j for j in res.unstable if j > 0}


def mode_shape(grid, j):
    """Cosine eigenfunction of mode ``j``."""
    x = grid.centers
    return np.cos(float(grid.wavenumber(j)) * x)


def measure_growth_rate(model, grid, j, amplitude=1e-6, t_end=1.0, dt=1e-3, advection="central",
                        n_fit=20):
    """Growth rate of a seeded mode from a simulation of the full model.

    The homogeneous state is perturbed by ``amplitude * mode_shape`` in the
    first density and integrated with a fixed step; the rate is the slope of
    the log mode amplitude over the run.
    """
    from .stepper import Integrator, StepConfig
    from .models.system import build_system

    system = build_system(model, grid)
    state = homogeneous_steady_state(model, grid)
    shape = mode_shape(grid, j)
    state[0] = state[0] + amplitude * shape
    cfg = StepConfig(t_end=t_end, dt=dt, dt_max=dt, advection=advection)
    integ = Integrator(system, cfg)
    base = homogeneous_steady_state(model, grid)[0]
    state = integ.start(state)
    norm = total_mass(shape * shape, grid)
    times, amps = [0.0], [amplitude]
    checkpoints = np.linspace(0.0, t_end, n_fit + 1)[1:]
    for target in checkpoints:
        while integ.t < target - 1e-12:
            state, _ = integ.step(state, target)
        times.append(integ.t)
        amps.append(total_mass((state[0] - base) * shape, grid) / norm)
    amps = np.asarray(amps)
    if np.any(amps <= 0):
        raise AnalysisUnavailableError("seeded mode changed sign; growth rate is oscillatory")
    slope = np.polyfit(np.asarray(times), np.log(amps), 1)[0]
    return float(slope)
