"""Success measures over trajectories and parameter sweeps over them.

Space integrals use the midpoint rule of the grid; time integrals use the
trapezoid rule over snapshot times, with window endpoints interpolated
linearly when they fall between snapshots.
"""

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .errors import CogmoveError, MeasureUndefinedError, WindowError
from .grid import total_mass
from .models.system import landscape_function
from .stepper import detect_attractor

M_FLOOR = 1e-12
DEFAULT_TRANSIENT_FRACTION = 0.5


@dataclass
class MeasureReport:
    kind: str
    value: float
    window: tuple
    params: dict = field(default_factory=dict)

    def as_dict(self):
        return {"kind": self.kind, "value": self.value, "window": list(self.window), **self.params}


def _resource(m, grid):
    """Normalize a resource argument to ``t -> array``."""
    if m is None:
        raise MeasureUndefinedError("a resource density is required")
    if callable(m):
        try:
            out = m(0.0)
            if np.shape(out) == (grid.n_cells,):
                return m
        except TypeError:
            pass
    return landscape_function(m, grid, key="measure.m")


def resolve_window(traj, t_prime=None, t_max=None):
    """Validated ``(t_prime, t_max)``; defaults to the second half of the run."""
    t0, t_end = traj.times[0], traj.times[-1]
    if t_max is None:
        t_max = t_end
    if t_prime is None:
        t_prime = t0 + DEFAULT_TRANSIENT_FRACTION * (t_end - t0)
    tol = 1e-12 * max(1.0, abs(t_end))
    if not t_prime < t_max:
        raise WindowError(f"empty window: t_prime={t_prime} >= t_max={t_max}")
    if t_prime < t0 - tol or t_max > t_end + tol:
        raise WindowError(f"window [{t_prime}, {t_max}] outside trajectory span [{t0}, {t_end}]")
    return float(t_prime), float(t_max)


def _window_nodes(traj, t_prime, t_max):
    inner = [k for k, t in enumerate(traj.times) if t_prime < t < t_max]
    nodes = [t_prime] + [float(traj.times[k]) for k in inner] + [t_max]
    states = [traj.at(t_prime)] + [traj.states[k] for k in inner] + [traj.at(t_max)]
    return np.asarray(nodes), states


def _species_index(traj, species):
    return traj.fields.index(species or traj.densities[0])


def foraging_success(traj, m, t_prime=None, t_max=None, species=None):
    """Space-time integral of density times resource over the window."""
    t_prime, t_max = resolve_window(traj, t_prime, t_max)
    res = _resource(m, traj.grid)
    i = _species_index(traj, species)
    nodes, states = _window_nodes(traj, t_prime, t_max)
    vals = [total_mass(s[i] * res(t), traj.grid) for t, s in zip(nodes, states)]
    return float(trapezoid(vals, nodes))


def modified_foraging_success(traj, m, T=None, t_start=None, species=None):
    """Time average over one period of the domain-averaged ratio ``u / m``.

    ``T`` defaults to the detected period; a steady attractor is scored on
    its final snapshot.  The window is ``[t_start, t_start + T]`` and ends at
    the final snapshot by default.
    """
    grid = traj.grid
    res = _resource(m, grid)
    i = _species_index(traj, species)
    if T is None:
        verdict = detect_attractor(traj)
        if verdict.kind == "steady":
            t = traj.times[-1]
            return _ratio(traj.states[-1][i], res(t), grid, t)
        if verdict.kind != "periodic":
            raise MeasureUndefinedError("modified foraging success needs a periodic or steady "
                                        "attractor; none was detected")
        T = verdict.period
    if t_start is None:
        t_start = traj.times[-1] - T
    t_prime, t_max = resolve_window(traj, t_start, t_start + T)
    nodes, states = _window_nodes(traj, t_prime, t_max)
    vals = [_ratio(s[i], res(t), grid, t) for t, s in zip(nodes, states)]
    return float(trapezoid(vals, nodes) / T)


def _ratio(u, m, grid, t):
    if np.min(m) < M_FLOOR:
        raise MeasureUndefinedError(f"resource density falls below {M_FLOOR} at t={t}; "
                                    "the per-resource measure needs m > 0")
    return total_mass(u / m, grid) / grid.length


def net_growth(traj, f=None, t_prime=None, t_max=None, species=None):
    """Space-time integral of the net reaction over the window.

    With ``f(x, t, u)`` the integral is taken by quadrature over snapshots.
    Without it the stepper's own running integral is used, which satisfies
    the discrete mass balance to round-off.
    """
    t_prime, t_max = resolve_window(traj, t_prime, t_max)
    i = _species_index(traj, species)
    if f is None:
        if not traj.growth_integral:
            raise MeasureUndefinedError("trajectory carries no recorded reaction integral")
        g = np.array([row[i] for row in traj.growth_integral])
        return float(np.interp(t_max, traj.t, g) - np.interp(t_prime, traj.t, g))
    x = traj.grid.centers
    nodes, states = _window_nodes(traj, t_prime, t_max)
    vals = [total_mass(np.broadcast_to(f(x, t, s[i]), x.shape), traj.grid)
            for t, s in zip(nodes, states)]
    return float(trapezoid(vals, nodes))


def mass_balance(traj, t_prime=None, t_max=None, species=None):
    """Mass change, recorded net growth and boundary outflow over a window.

    ``residual = mass_change - (growth - outflow)`` is zero up to round-off
    for the stepper's scheme.
    """
    t_prime, t_max = resolve_window(traj, t_prime, t_max)
    i = _species_index(traj, species)
    t = traj.t
    mass = np.array([total_mass(s[i], traj.grid) for s in traj.states])
    out = np.array([row[i] for row in traj.outflow_integral])
    dm = float(np.interp(t_max, t, mass) - np.interp(t_prime, t, mass))
    growth = net_growth(traj, None, t_prime, t_max, traj.fields[i])
    outflow = float(np.interp(t_max, t, out) - np.interp(t_prime, t, out))
    return {"mass_change": dm, "net_growth": growth, "outflow": outflow,
            "residual": dm - (growth - outflow)}


def measure_report(kind, traj, m=None, t_prime=None, t_max=None, T=None, species=None, f=None):
    """Compute one measure and echo its window and defaults."""
    params = {"species": species or traj.densities[0]}
    if kind == "foraging_success":
        window = resolve_window(traj, t_prime, t_max)
        params["t_prime_default"] = t_prime is None
        value = foraging_success(traj, m, *window, species)
    elif kind == "modified_foraging_success":
        value = modified_foraging_success(traj, m, T, t_prime, species)
        window = (t_prime, T)
    elif kind == "net_growth":
        window = resolve_window(traj, t_prime, t_max)
        params["t_prime_default"] = t_prime is None
        value = net_growth(traj, f, *window, species)
    else:
        raise MeasureUndefinedError(f"unknown measure {kind!r}")
    return MeasureReport(kind, value, tuple(window), params)


@dataclass
class SweepTable:
    names: list
    rows: list = field(default_factory=list)

    def values(self):
        return np.array([r["value"] if r["status"] == "ok" else np.nan for r in self.rows])

    def slice(self, name, fixed=None):
        """Rows varying only ``name``, others pinned to ``fixed`` (default: first value)."""
        fixed = dict(fixed or {})
        for other in self.names:
            if other != name and other not in fixed:
                fixed[other] = self.rows[0]["params"][other]
        return [r for r in self.rows
                if all(r["params"][k] == v for k, v in fixed.items() if k != name)]

    def interior_maxima(self, name, fixed=None):
        """Parameter values of ``name`` where the measure has a strict interior maximum."""
        rows = self.slice(name, fixed)
        vals = [r["value"] if r["status"] == "ok" else np.nan for r in rows]
        out = []
        for j in range(1, len(rows) - 1):
            if vals[j] > vals[j - 1] and vals[j] > vals[j + 1]:
                out.append(rows[j]["params"][name])
        return out


def sweep_plan(grid_spec):
    """Cartesian product of ``{name: values}`` in insertion order."""
    names = list(grid_spec)
    return names, [dict(zip(names, combo)) for combo in itertools.product(*grid_spec.values())]


def _thread_count():
    try:
        return max(1, int(os.environ.get("COGMOVE_THREADS", "1")))
    except ValueError:
        return 1


def sweep(grid_spec, evaluate, workers=None):
    """Evaluate every cell of a parameter grid.

    ``evaluate(params)`` returns a number or a dict with at least
    ``value``.  Failures are recorded per cell and the sweep continues.
    Rows are returned in plan order whatever the worker count.
    """
    names, cells = sweep_plan(grid_spec)
    workers = workers or _thread_count()

    def one(params):
        try:
            out = evaluate(dict(params))
        except (CogmoveError, ArithmeticError, ValueError) as exc:
            return {"params": params, "value": None, "status": "failed",
                    "error": f"{type(exc).__name__}: {exc}"}
        if not isinstance(out, dict):
            out = {"value": out}
        return {"params": params, "status": "ok", **out}

    if workers > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, cells))
    else:
        rows = [one(c) for c in cells]
    return SweepTable(names, rows)
