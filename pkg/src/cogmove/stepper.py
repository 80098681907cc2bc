"""
IMEX time integration of compiled model systems.

Per step, every field is advanced by

    (I - dt D Lap + dt (decay + loss)) f_new = f + dt (-div(F) + source)

where ``F`` is the explicit advective face flux (first-order upwind by
default, central as an option), ``source``/``loss`` come from the model's
reaction split, and the implicit operator uses the grid's boundary ghost
cells.  Zero-flux boundaries carry no flux of either kind, so the update is
conservative by construction.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import ConfigurationError, DivergenceError, StepRejectedError
from .grid import boundary_gradients, boundary_value, divergence, laplacian_matrix, total_mass
from .memory import HistoryBuffer
from .models.system import build_system, initial_state

NEGATIVE_TOL = 1e-14
HISTORY_DT_FRACTION = 20.0


@dataclass
class StepConfig:
    t_end: float = 1.0
    dt: float = None
    cfl: float = 0.4
    dt_max: float = 1e-2
    snapshot_every: float = None
    advection: str = "upwind"
    reaction_safety: float = 0.5
    mass_drift_tol: float = 1e-8
    linear_tol: float = 1e-12

    def __post_init__(self):
        if not self.t_end > 0:
            raise ConfigurationError("t_end must be positive", key="stepping.t_end")
        if self.dt is not None and not self.dt > 0:
            raise ConfigurationError("dt must be positive", key="stepping.dt")
        if not 0 < self.cfl <= 1:
            raise ConfigurationError("cfl must lie in (0, 1]", key="stepping.cfl")
        if not self.dt_max > 0:
            raise ConfigurationError("dt_max must be positive", key="stepping.dt_max")
        if self.snapshot_every is None:
            self.snapshot_every = self.t_end / 100.0
        if not self.snapshot_every > 0:
            raise ConfigurationError("snapshot_every must be positive", key="stepping.snapshot_every")
        if self.advection not in ("upwind", "central"):
            raise ConfigurationError(f"unknown advection scheme {self.advection!r}",
                                     key="stepping.advection")


@dataclass
class Trajectory:
    grid: object
    fields: list
    densities: list
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    dt_history: list = field(default_factory=list)
    growth_integral: list = field(default_factory=list)
    outflow_integral: list = field(default_factory=list)
    flags: tuple = ()
    warnings: tuple = ()
    status: str = "ok"
    error: str = None

    def __len__(self):
        return len(self.times)

    @property
    def t(self):
        return np.asarray(self.times)

    def field(self, name):
        i = self.fields.index(name)
        return np.array([s[i] for s in self.states])

    @property
    def final(self):
        return self.states[-1]

    def masses(self, name):
        return np.array([total_mass(s[self.fields.index(name)], self.grid) for s in self.states])

    def minima(self, name):
        return np.array([float(np.min(s[self.fields.index(name)])) for s in self.states])

    def at(self, t):
        """State at ``t`` by linear interpolation between snapshots."""
        times = self.t
        if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
            raise ValueError(f"t={t} outside trajectory span [{times[0]}, {times[-1]}]")
        k = int(np.searchsorted(times, t, side="right")) - 1
        k = min(max(k, 0), len(times) - 1)
        if k == len(times) - 1 or times[k] == t:
            return self.states[k]
        w = (t - times[k]) / (times[k + 1] - times[k])
        return (1 - w) * self.states[k] + w * self.states[k + 1]

    def mass_drift(self):
        """Largest relative change of each density's mass over the run."""
        out = {}
        for name in self.densities:
            m = self.masses(name)
            scale = max(abs(m[0]), 1e-300)
            out[name] = float(np.max(np.abs(m - m[0])) / scale)
        return out

    def diagnostics(self):
        return {
            "n_snapshots": len(self.times),
            "n_steps": len(self.dt_history),
            "dt_min": float(min(self.dt_history)) if self.dt_history else None,
            "dt_max": float(max(self.dt_history)) if self.dt_history else None,
            "mass_drift": self.mass_drift(),
            "final_mass": {n: float(self.masses(n)[-1]) for n in self.densities},
            "min_value": {n: float(self.minima(n).min()) for n in self.fields},
            "status": self.status,
        }


class _Implicit:
    """Cached factorizations of the implicit diffusion-decay operator."""

    def __init__(self, system):
        self.system = system
        self.lap = laplacian_matrix(system.grid)
        self.eye = sp.identity(system.grid.n_cells, format="csc")
        self._cache = {}

    def solve(self, i, rhs, dt, loss=None):
        d = self.system.diffusion[i]
        kappa = self.system.decay[i]
        if d == 0.0:
            denom = 1.0 + dt * kappa
            if loss is not None:
                denom = denom + dt * loss
            return rhs / denom
        if loss is None or not np.any(loss):
            key = (i, dt)
            lu = self._cache.get(key)
            if lu is None:
                if len(self._cache) > 32:
                    self._cache.clear()
                lu = splu((self.eye * (1.0 + dt * kappa) - (dt * d) * self.lap).tocsc())
                self._cache[key] = lu
            return lu.solve(rhs)
        mat = sp.diags(1.0 + dt * (kappa + loss), format="csc") - (dt * d) * self.lap
        return splu(mat.tocsc()).solve(rhs)


def advective_flux(u, vel, grid, scheme="upwind"):
    """Face flux ``u * vel`` with the boundary treatment of the grid."""
    n = grid.n_cells
    F = np.empty(n + 1)
    left, right = u[:-1], u[1:]
    v = vel[1:-1]
    if scheme == "upwind":
        F[1:-1] = np.where(v > 0, v * left, v * right)
    else:
        F[1:-1] = 0.5 * v * (left + right)
    kind = grid.bc.kind
    if kind == "periodic":
        vb = vel[0]
        if scheme == "upwind":
            F[0] = vb * (u[-1] if vb > 0 else u[0])
        else:
            F[0] = 0.5 * vb * (u[-1] + u[0])
        F[-1] = F[0]
    elif kind in ("zero_flux", "dirichlet"):
        F[0] = F[-1] = 0.0
    elif kind == "neumann":
        F[0] = vel[0] * u[0]
        F[-1] = vel[-1] * u[-1]
    else:
        ub_left, ub_right = boundary_value(u, grid)
        F[0] = vel[0] * ub_left
        F[-1] = vel[-1] * ub_right
    return F


def _reaction_rate(system, t, state, hist, src):
    """Rough magnitude of the explicit source Jacobian diagonal."""
    delta = 1e-6
    src2, _ = system.reaction(t, state * (1.0 + delta), hist)
    scale = np.abs(state) * delta
    mask = np.abs(state) > 1e-10 * max(1.0, float(np.max(np.abs(state))))
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(src2 - src)[mask] / scale[mask]))


class Integrator:
    """Stateful stepping loop for one system."""

    def __init__(self, system, cfg, t0=0.0, initial_history=None):
        self.system = system
        self.cfg = cfg
        self.grid = system.grid
        self.t = float(t0)
        self.implicit = _Implicit(system)
        self.hist = None
        # running integrals of net reaction and boundary outflow per field
        self.growth = np.zeros(system.n_fields)
        self.outflow = np.zeros(system.n_fields)
        if system.needs_history:
            horizon = system.history_horizon * 1.05 + 2.0 * cfg.dt_max
            self.hist = HistoryBuffer(system.fields, horizon, initial_history)

    def start(self, state):
        state = np.array(state, dtype=float)
        if state.shape != (self.system.n_fields, self.grid.n_cells):
            raise ConfigurationError(f"state has shape {state.shape}, expected "
                                     f"{(self.system.n_fields, self.grid.n_cells)}", key="initial")
        if self.hist is not None:
            self.hist.append(self.t, state)
        return state

    def choose_dt(self, vel, src, state):
        cfg = self.cfg
        vmax = max((float(np.max(np.abs(v))) for v in vel.values()), default=0.0)
        dx = self.grid.dx
        if cfg.dt is not None:
            if vmax * cfg.dt > dx:
                raise StepRejectedError(f"fixed dt={cfg.dt} violates the advective CFL bound "
                                        f"dx/max|v| = {dx / vmax:.3g}")
            return cfg.dt
        bound = cfg.dt_max
        if vmax > 0:
            bound = min(bound, cfg.cfl * dx / vmax)
        if src is not None:
            rate = _reaction_rate(self.system, self.t, state, self.hist, src)
            if rate > 0:
                bound = min(bound, cfg.reaction_safety / rate)
        if np.isfinite(self.system.min_delay):
            bound = min(bound, self.system.min_delay / HISTORY_DT_FRACTION)
        k = max(0, math.ceil(math.log2(cfg.dt_max / bound) - 1e-12))
        return cfg.dt_max / 2.0**k

    def step(self, state, t_stop=None):
        """Advance one step (never past ``t_stop``); returns the new state."""
        system, grid = self.system, self.grid
        vel = system.velocity(self.t, state, self.hist)
        if system.reaction is not None:
            src, loss = system.reaction(self.t, state, self.hist)
        else:
            src, loss = None, None
        dt = self.choose_dt(vel, src, state)
        if t_stop is not None and self.t + dt > t_stop - 1e-12 * max(1.0, abs(t_stop)):
            dt = t_stop - self.t
        new = np.empty_like(state)
        for i in range(system.n_fields):
            rhs = state[i].copy()
            out = 0.0
            if i in vel:
                F = advective_flux(state[i], vel[i], grid, self.cfg.advection)
                rhs -= dt * divergence(F, grid)
                out += F[-1] - F[0]
            if src is not None:
                rhs += dt * src[i]
            li = None if loss is None else loss[i]
            new[i] = self.implicit.solve(i, rhs, dt, li)
            d = system.diffusion[i]
            if d != 0.0 and not grid.bc.is_periodic:
                g_left, g_right = boundary_gradients(new[i], grid)
                out -= d * (g_right - g_left)
            self.outflow[i] += dt * out
            rate = system.decay[i] if li is None else system.decay[i] + li
            net = -rate * new[i]
            if src is not None:
                net = net + src[i]
            self.growth[i] += dt * total_mass(net, grid)
        self.t = t_stop if (t_stop is not None and abs(self.t + dt - t_stop) < 1e-12 * max(1.0, abs(t_stop))) \
            else self.t + dt
        self._check(new, dt)
        if self.hist is not None:
            self.hist.append(self.t, new)
        return new, dt

    def _check(self, state, dt):
        if not np.all(np.isfinite(state)):
            bad = [self.system.fields[i] for i in range(len(state)) if not np.all(np.isfinite(state[i]))]
            raise DivergenceError(f"non-finite values at t={self.t:.6g} in {bad}",
                                  {"t": self.t, "dt": dt, "fields": bad})
        for i, name in enumerate(self.system.fields):
            if self.system.positive[i]:
                lo = float(np.min(state[i]))
                if lo < -NEGATIVE_TOL:
                    raise DivergenceError(
                        f"negative undershoot {lo:.3g} in {name} at t={self.t:.6g}",
                        {"t": self.t, "dt": dt, "field": name, "min": lo,
                         "argmin": int(np.argmin(state[i]))})


def step(system, state, dt, t=0.0, hist=None, advection="upwind"):
    """One fixed IMEX step of size ``dt`` from time ``t``."""
    cfg = StepConfig(t_end=max(dt, 1e-300), dt=dt, dt_max=dt, advection=advection)
    integ = Integrator(system, cfg, t0=t)
    if hist is not None:
        integ.hist = hist
    elif system.needs_history:
        integ.start(state)
    new, _ = integ.step(np.asarray(state, dtype=float))
    return new


def run(model, grid, u0=None, cfg=None, system=None, noise=0.0, seed=0, initial_history=None):
    """Integrate ``model`` on ``grid`` from ``u0`` to ``cfg.t_end``.

    ``u0`` is a full ``(n_fields, n_cells)`` state, a dict of field arrays
    overriding the family default, or ``None``.  Divergence stops the run
    and is recorded on the returned trajectory before the error propagates
    as ``exc.trajectory``.
    """
    cfg = cfg or StepConfig()
    system = system or build_system(model, grid)
    if u0 is None or isinstance(u0, dict):
        state = initial_state(model, grid, system, u0, noise, seed)
    else:
        state = np.array(u0, dtype=float)
        if state.ndim == 1:
            state = state[None, :]
    integ = Integrator(system, cfg, 0.0, initial_history)
    state = integ.start(state)
    traj = Trajectory(grid, list(system.fields), list(system.densities),
                      flags=system.flags, warnings=system.warnings)
    traj.times.append(0.0)
    traj.states.append(state.copy())
    traj.growth_integral.append(integ.growth.copy())
    traj.outflow_integral.append(integ.outflow.copy())
    n_snap = max(1, int(round(cfg.t_end / cfg.snapshot_every)))
    targets = [min(cfg.t_end, (k + 1) * cfg.snapshot_every) for k in range(n_snap)]
    if targets[-1] < cfg.t_end:
        targets.append(cfg.t_end)
    try:
        for target in targets:
            while integ.t < target - 1e-12 * max(1.0, target):
                state, dt = integ.step(state, target)
                traj.dt_history.append(dt)
            traj.times.append(float(target))
            traj.states.append(state.copy())
            traj.growth_integral.append(integ.growth.copy())
            traj.outflow_integral.append(integ.outflow.copy())
    except DivergenceError as exc:
        traj.status = "diverged"
        traj.error = str(exc)
        exc.trajectory = traj
        raise
    return traj


def steady_state_local_limit(m, gamma, d, grid):
    """Normalized ``exp(gamma m / d)``: the zero-flux steady state of the
    local resource-following equation."""
    m = np.asarray(m, dtype=float)
    w = np.exp(gamma * (m - np.max(m)) / d)
    return w / total_mass(w, grid)


@dataclass
class AttractorVerdict:
    kind: str
    period: float = None
    detail: dict = field(default_factory=dict)

    def as_dict(self):
        return {"kind": self.kind, "period": self.period, **self.detail}


def first_moment_probe(traj, name=None):
    """Mass-weighted mean position of a density, per snapshot."""
    name = name or traj.densities[0]
    x = traj.grid.centers
    u = traj.field(name)
    mass = u.sum(axis=1)
    return (u @ x) / np.where(mass == 0, 1.0, mass)


def _refined_maxima(t, y):
    idx = [k for k in range(1, len(y) - 1) if y[k] > y[k - 1] and y[k] >= y[k + 1]]
    out = []
    for k in idx:
        y0, y1, y2 = y[k - 1], y[k], y[k + 1]
        denom = y0 - 2.0 * y1 + y2
        shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
        h = t[k + 1] - t[k] if shift >= 0 else t[k] - t[k - 1]
        out.append((t[k] + shift * h, y1 - 0.25 * (y0 - y2) * shift))
    return out


def classify_probe(t, y, tol=1e-6, period_tol=0.01):
    """Periodic verdict for a scalar signal from its successive maxima."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    spread = float(np.ptp(y)) if len(y) else 0.0
    if spread <= tol:
        return AttractorVerdict("steady", detail={"probe_range": spread})
    peaks = _refined_maxima(t, y)
    if len(peaks) >= 3:
        pt = np.array([p[0] for p in peaks])
        pv = np.array([p[1] for p in peaks])
        periods = np.diff(pt)
        amp_ok = np.ptp(pv) <= max(tol, 1e-3 * spread)
        per_ok = np.ptp(periods) <= period_tol * np.mean(periods)
        if amp_ok and per_ok:
            return AttractorVerdict("periodic", float(np.mean(periods)),
                                    {"n_maxima": len(peaks), "amplitude": spread})
    return AttractorVerdict("undetermined", detail={"n_maxima": len(peaks)})


def detect_attractor(traj, tail_fraction=0.5, tol=1e-6):
    """Steady, periodic (with period) or undetermined, judged on the tail."""
    n = len(traj.times)
    start = min(n - 1, int(math.floor((1.0 - tail_fraction) * n)))
    tail = traj.states[start:]
    last = tail[-1]
    change = max(float(np.max(np.abs(s - last))) for s in tail)
    if change <= tol:
        return AttractorVerdict("steady", detail={"tail_change": change})
    probe = first_moment_probe(traj)[start:]
    verdict = classify_probe(traj.t[start:], probe, tol)
    if verdict.kind == "steady":
        verdict = AttractorVerdict("undetermined", detail={"tail_change": change})
    verdict.detail["tail_change"] = change
    return verdict
