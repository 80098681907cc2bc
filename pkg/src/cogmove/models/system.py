"""Compile a ModelSpec into the right-hand side consumed by the stepper.

Each field obeys

    f_t = D f_xx - (f * velocity)_x + source - (decay + loss) * f

with ``D`` and ``decay`` constant per field, and ``velocity``, ``source``
and the non-negative ``loss`` rate evaluated from the current state (and
history, for memory families).  The stepper treats diffusion, decay and loss
implicitly and everything else explicitly.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import AnalysisUnavailableError, ConfigurationError
from ..grid import total_mass
from ..kernels import perceive
from ..memory import HistoryBuffer, TemporalKernelSpec, direct_distributed_convolution
from . import reactions as rx
from .potentials import (
    aggregation_velocity,
    den_site_potential,
    gradient_velocity,
    nonlocal_argument,
    sda_potential,
    static_potential,
)


@dataclass
class SystemRHS:
    grid: object
    fields: list
    diffusion: np.ndarray
    decay: np.ndarray
    densities: list
    velocity: object
    reaction: object = None
    positive: np.ndarray = None
    history_horizon: float = 0.0
    min_delay: float = np.inf
    has_reaction: bool = False
    landscape: object = None
    flags: tuple = ()
    warnings: tuple = ()
    info: dict = field(default_factory=dict)

    @property
    def n_fields(self):
        return len(self.fields)

    @property
    def needs_history(self):
        return self.history_horizon > 0

    def index(self, name):
        return self.fields.index(name)

    def evaluate(self, t, state, hist=None):
        """Explicit tendency ``source - loss*f`` plus velocities, for diagnostics."""
        vel = self.velocity(t, state, hist)
        if self.reaction is None:
            return vel, np.zeros_like(state)
        src, loss = self.reaction(t, state, hist)
        out = src.copy()
        if loss is not None:
            out -= loss * state
        out -= self.decay[:, None] * state
        return vel, out


def landscape_function(value, grid, key="model.m"):
    """``t -> array`` from a callable ``f(x, t)``, an array, or a scalar."""
    if value is None:
        return None
    if callable(value):
        x = grid.centers

        def m(t):
            return np.broadcast_to(np.asarray(value(x, t), dtype=float), x.shape).copy()
        return m
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(grid.n_cells, float(arr))
    if arr.shape != (grid.n_cells,):
        raise ConfigurationError(f"landscape has shape {arr.shape}, grid has {grid.n_cells} cells",
                                 key=key)
    return lambda t: arr


def _zeros_loss(state):
    return np.zeros_like(state)


def build_system(model, grid):
    builder = _BUILDERS[model.family]
    system = builder(model, model.params, grid)
    system.flags = tuple(model.flags)
    system.warnings = tuple(model.warnings)
    if system.positive is None:
        system.positive = np.array([f in system.densities for f in system.fields])
    return system


def _scalar(grid, d, velocity, **kw):
    return SystemRHS(grid, ["u"], np.array([float(d)]), np.zeros(1), ["u"], velocity, **kw)


def _b_prototype(model, p, grid):
    pot = landscape_function(p["potential"], grid, "model.potential")
    return _scalar(grid, p["d"], lambda t, s, h: {0: gradient_velocity(pot(t), grid)},
                   landscape=pot)


def _b_foraging(model, p, grid):
    m = landscape_function(p["m"], grid)
    kernel, gamma = model.kernel, p["gamma"]
    return _scalar(grid, p["d"],
                   lambda t, s, h: {0: gradient_velocity(perceive(m(t), kernel, grid), grid, gamma)},
                   landscape=m)


def _b_static(model, p, grid):
    variant, gamma, kernel = p["variant"], p["gamma"], model.kernel
    x0 = grid.length / 2 if p["x0"] is None else p["x0"]
    m = landscape_function(p["m"], grid)
    if variant == "den_site":
        pot = den_site_potential(grid, x0, gamma)
        vel = gradient_velocity(pot, grid, -1.0)
        return _scalar(grid, p["d"], lambda t, s, h: {0: vel}, landscape=m)

    def velocity(t, s, h):
        a = static_potential(variant, grid, gamma, m(t), x0, s[0])
        return {0: gradient_velocity(perceive(a, kernel, grid), grid, gamma)}
    return _scalar(grid, p["d"], velocity, landscape=m)


def _b_aggregation(model, p, grid):
    kernel, gamma = model.kernel, p["gamma"]
    return _scalar(grid, p["d"], lambda t, s, h: {0: aggregation_velocity(s[0], gamma, kernel, grid)})


def _names(prefix, n):
    return [f"{prefix}{i + 1}" for i in range(n)]


def _b_multi(model, p, grid):
    n, kernel, gamma = p["n_species"], model.kernel, p["gamma"]
    names = _names("u", n)

    def velocity(t, s, h):
        vels = aggregation_velocity(list(s[:n]), gamma, kernel, grid)
        return dict(enumerate(vels))
    return SystemRHS(grid, names, np.asarray(p["d"], float), np.zeros(n), names, velocity)


def _b_marks(model, p, grid):
    n, kernel = p["n_species"], model.kernel
    gamma, alpha, mu = p["gamma"], p["alpha"], p["mu"]
    fields = _names("u", n) + _names("p", n)
    diffusion = np.concatenate([p["d"], np.zeros(n)])
    decay = np.concatenate([np.zeros(n), np.full(n, mu)])

    def velocity(t, s, h):
        return {i: gradient_velocity(perceive(s[n + i], kernel, grid), grid, gamma[i])
                for i in range(n)}

    def reaction(t, s, h):
        src = np.zeros_like(s)
        for i in range(n):
            # decay applied implicitly, so only the deposit enters here
            src[n + i] = rx.marks_rhs(np.zeros(grid.n_cells), s[:n], alpha[i], 0.0)
        return src, None

    positive = np.array([True] * n + [bool(np.all(alpha >= 0))] * n)
    return SystemRHS(grid, fields, diffusion, decay, _names("u", n), velocity, reaction,
                     positive=positive, has_reaction=False)


def _b_conflict(model, p, grid):
    n, kernel = p["n_species"], model.kernel
    gamma, rho, mu, beta = p["gamma"], p["rho"], p["mu"], p["beta"]
    variant, nonlocal_flag = p["variant"], p["nonlocal_conflict"]
    fields = _names("u", n) + _names("k", n)
    diffusion = np.concatenate([p["d"], p["epsilon"]])
    decay = np.concatenate([np.zeros(n), np.full(n, mu)])

    def velocity(t, s, h):
        # positive gamma_i moves species i away from remembered conflict
        return {i: gradient_velocity(perceive(s[n + i], kernel, grid), grid, -gamma[i])
                for i in range(n)}

    def reaction(t, s, h):
        src = np.zeros_like(s)
        loss = np.zeros_like(s)
        u = s[:n]
        for i in range(n):
            lead = perceive(u[i], kernel, grid) if nonlocal_flag else None
            growth = rx.conflict_growth(u, i, rho, lead)
            src[n + i] = growth
            loss[n + i] = beta * u[i]
            if variant == "probability":
                loss[n + i] += growth
        return src, loss

    return SystemRHS(grid, fields, diffusion, decay, _names("u", n), velocity, reaction,
                     positive=np.ones(2 * n, bool), has_reaction=False,
                     info={"variant": variant})


def _holling_split(u, v, c, beta, alpha, death, r, K):
    """Source/loss split of the Holling-II consumer-resource kinetics."""
    h = rx.holling(v, alpha)
    return (c * beta * h * u, np.full_like(u, death)), (r * v, r * v / K + beta * u / np.maximum(alpha + v, 1e-300))


def _b_cr(model, p, grid):
    kernel, gamma, kind = model.kernel, p["gamma"], p["map"]
    c, beta, alpha, death, r, K = (p[k] for k in ("c", "beta", "alpha", "death", "r", "K"))
    has_q = kind != "none"
    fields = ["u", "v"] + (["q"] if has_q else [])
    diffusion = np.array([p["D1"], p["D2"]] + ([0.0] if has_q else []))
    decay = np.array([0.0, 0.0] + ([p["mu"]] if has_q else []))
    target = 2 if has_q else 1

    def velocity(t, s, h):
        return {0: gradient_velocity(perceive(s[target], kernel, grid), grid, gamma)}

    def reaction(t, s, h):
        u, v = s[0], s[1]
        (su, lu), (sv, lv) = _holling_split(u, v, c, beta, alpha, death, r, K)
        src = np.zeros_like(s)
        loss = np.zeros_like(s)
        src[0], loss[0], src[1], loss[1] = su, lu, sv, lv
        if kind == "linear_q":
            src[2] = p["b"] * v
        elif kind == "bilinear_q":
            src[2] = p["b"] * u * v
            loss[2] = p["xi"] * u
        return src, loss

    return SystemRHS(grid, fields, diffusion, decay, ["u", "v"], velocity, reaction,
                     positive=np.ones(len(fields), bool), has_reaction=True)


def _b_delay(model, p, grid):
    tau = model.temporal.tau
    variant = p["variant"]
    if variant == "scalar":
        gamma, r, K, growth, sigma = p["gamma"], p["r"], p["K"], p["growth"], p["sigma"]

        def velocity(t, s, h):
            return {0: gradient_velocity(h.sample(0, t - tau), grid, gamma)}

        def reaction(t, s, h):
            u = s[0]
            w = nonlocal_argument(growth, u, grid, h, 0, t, sigma)
            return (r * s).copy(), (r * np.asarray(w) / K)[None, :]

        horizon = max(tau, sigma)
        return SystemRHS(grid, ["u"], np.array([p["d"]]), np.zeros(1), ["u"], velocity,
                         reaction if r > 0 else None, history_horizon=horizon,
                         min_delay=min(tau, sigma) if sigma > 0 else tau, has_reaction=r > 0)
    if variant == "consumer_resource":
        d21 = p["d21"]
        c, beta, alpha, death, r, K = (p[k] for k in ("c", "beta", "alpha", "death", "r", "K"))

        def velocity(t, s, h):
            return {0: gradient_velocity(h.sample(1, t - tau), grid, d21)}

        def reaction(t, s, h):
            (su, lu), (sv, lv) = _holling_split(s[0], s[1], c, beta, alpha, death, r, K)
            return np.array([su, sv]), np.array([lu, lv])

        return SystemRHS(grid, ["u", "v"], np.array([p["d22"], p["d11"]]), np.zeros(2), ["u", "v"],
                         velocity, reaction, positive=np.ones(2, bool), history_horizon=tau,
                         min_delay=tau, has_reaction=True)
    D = np.array([[p["D11"], p["D12"]], [p["D21"], p["D22"]]])
    a, b, g = p["lv_alpha"], p["lv_beta"], p["lv_gamma"]

    def velocity(t, s, h):
        lagged = h.sample_all(t - tau)
        # positive D_ij is repulsion from the lagged field
        return {i: gradient_velocity(D[i, 0] * lagged[0] + D[i, 1] * lagged[1], grid, -1.0)
                for i in range(2)}

    def reaction(t, s, h):
        u, v = s
        return np.array([u, g * v]), np.array([u + a * v, g * (b * u + v)])

    return SystemRHS(grid, ["u", "v"], np.array([p["D1"], p["D2"]]), np.zeros(2), ["u", "v"],
                     velocity, reaction, positive=np.ones(2, bool), history_horizon=tau,
                     min_delay=tau, has_reaction=True)


def _b_distributed(model, p, grid):
    temporal = model.temporal
    tau, gamma, d, d3, r, K = temporal.tau, p["gamma"], p["d"], p["d3"], p["r"], p["K"]
    strong = temporal.kind == "strong"

    if p["method"] == "augmented":
        fields = ["u", "v1", "v2"] if strong else ["u", "v"]
        nf = len(fields)
        diffusion = np.array([d] + [d3] * (nf - 1))
        decay = np.array([0.0] + [1.0 / tau] * (nf - 1))

        def velocity(t, s, h):
            return {0: gradient_velocity(s[-1], grid, gamma)}

        def reaction(t, s, h):
            src = np.zeros_like(s)
            loss = np.zeros_like(s)
            src[0], loss[0] = r * s[0], r * s[0] / K
            src[1] = s[0] / tau
            if strong:
                src[2] = s[1] / tau
            return src, loss

        return SystemRHS(grid, fields, diffusion, decay, ["u"], velocity, reaction,
                         positive=np.ones(nf, bool), has_reaction=r > 0,
                         info={"augmented": True, "tau": tau, "d3": d3})

    mat = TemporalKernelSpec(p["maturation_kind"], p["maturation_tau"],
                             temporal.horizon_multiplier) if p["maturation"] else None

    def velocity(t, s, h):
        v = direct_distributed_convolution(h, temporal, d3, grid, 0, t)
        if mat is not None:
            return {0: gradient_velocity(v, grid, -p["d2"])}
        return {0: gradient_velocity(v, grid, gamma)}

    def reaction(t, s, h):
        w = s[0]
        if mat is not None:
            w = direct_distributed_convolution(h, mat, d3, grid, 0, t)
        return (r * s).copy(), (r * np.asarray(w) / K)[None, :]

    horizon = temporal.horizon if mat is None else max(temporal.horizon, mat.horizon)
    min_delay = tau if mat is None else min(tau, mat.tau)
    return SystemRHS(grid, ["u"], np.array([d]), np.zeros(1), ["u"], velocity,
                     reaction if r > 0 else None, history_horizon=horizon, min_delay=min_delay,
                     has_reaction=r > 0, info={"augmented": False})


def _b_short_long(model, p, grid):
    kernel = model.kernel
    m = landscape_function(p["m"], grid)
    a_s = landscape_function(p["a_s"], grid, "model.a_s") or m
    a_l = landscape_function(p["a_l"], grid, "model.a_l") or m
    c1, c2 = p["c1"], p["c2"]

    def velocity(t, s, h):
        a = rx.combined_map(s[1], s[2], c1, c2)
        return {0: gradient_velocity(perceive(a, kernel, grid), grid)}

    def reaction(t, s, h):
        src = np.zeros_like(s)
        src[1] = p["alpha_s"] * a_s(t)
        src[2] = p["alpha_l"] * a_l(t)
        return src, None

    return SystemRHS(grid, ["u", "m_s", "m_l"], np.array([p["d"], 0.0, 0.0]),
                     np.array([0.0, p["beta_s"], p["beta_l"]]), ["u"], velocity, reaction,
                     positive=np.array([True, False, False]), landscape=m)


def _b_sda(model, p, grid):
    m = landscape_function(p["m"], grid)
    x0 = grid.length / 2 if p["x0"] is None else p["x0"]

    def velocity(t, s, h):
        pot = sda_potential(s[0], m(t), grid, x0, p["gamma"], p["gamma_plus"], p["response"],
                            p["sharpness"], p["satisfaction"])
        return {0: gradient_velocity(pot, grid)}

    return _scalar(grid, p["d"], velocity, landscape=m)


_BUILDERS = {
    "prototype": _b_prototype,
    "perception_foraging": _b_foraging,
    "static_map": _b_static,
    "aggregation": _b_aggregation,
    "multi_aggregation": _b_multi,
    "marks": _b_marks,
    "conflict_zones": _b_conflict,
    "consumer_resource": _b_cr,
    "discrete_delay": _b_delay,
    "distributed": _b_distributed,
    "short_long": _b_short_long,
    "starvation_den_site": _b_sda,
}


def homogeneous_steady_state(model, grid, u_bar=None):
    """Spatially constant steady state as a ``(n_fields, n_cells)`` array.

    Reactionless families are conserving, so the density level ``u_bar``
    (default ``1/L``) is free.  Landscape-driven families have no constant
    state in general and raise :class:`AnalysisUnavailableError`.
    """
    p = model.params
    fam = model.family
    u_bar = 1.0 / grid.length if u_bar is None else float(u_bar)
    n = grid.n_cells

    def rows(values):
        return np.array([np.full(n, float(v)) for v in values])

    if fam in ("aggregation",):
        return rows([u_bar])
    if fam == "multi_aggregation":
        return rows([u_bar] * p["n_species"])
    if fam == "marks":
        k = p["n_species"]
        u = np.full(k, u_bar)
        return rows(list(u) + list(rx.marks_steady_state(p["alpha"], p["mu"], u)))
    if fam == "conflict_zones":
        k = p["n_species"]
        u = np.full(k, u_bar)
        if p["mu"] + p["beta"] * u_bar <= 0:
            raise AnalysisUnavailableError("conflict map has no steady state with mu = beta = 0")
        ks = [rx.conflict_steady_state(u[i] * (p["rho"][i] @ u), p["mu"], p["beta"], u[i], p["variant"])
              for i in range(k)]
        return rows(list(u) + ks)
    if fam in ("consumer_resource",) or (fam == "discrete_delay" and p["variant"] == "consumer_resource"):
        st = rx.consumer_resource_steady_state(p["c"], p["beta"], p["alpha"], p["death"], p["r"], p["K"])
        if st is None:
            raise AnalysisUnavailableError("no positive consumer-resource coexistence state")
        u, v = st
        if fam == "discrete_delay" or p["map"] == "none":
            return rows([u, v])
        q = p["b"] * v / p["mu"] if p["map"] == "linear_q" else p["b"] * u * v / (p["mu"] + p["xi"] * u)
        return rows([u, v, q])
    if fam == "discrete_delay":
        if p["variant"] == "scalar":
            return rows([p["K"] if p["r"] > 0 else u_bar])
        st = rx.lotka_volterra_coexistence(p["lv_alpha"], p["lv_beta"])
        if st is None:
            raise AnalysisUnavailableError("no weak-competition coexistence state")
        return rows(st)
    if fam == "distributed":
        u = p["K"] if p["r"] > 0 else u_bar
        if p["method"] == "augmented":
            return rows([u] * (3 if model.temporal.kind == "strong" else 2))
        return rows([u])
    raise AnalysisUnavailableError(f"family {fam!r} has no landscape-free homogeneous state")


def initial_state(model, grid, system=None, u0=None, noise=0.0, seed=0):
    """Default initial data: the homogeneous state if one exists, otherwise
    uniform densities ``1/L`` with zero maps.  ``u0`` maps field names to
    arrays that override the default.  ``noise`` adds a seeded relative
    perturbation to density fields, preserving their mass."""
    system = system or build_system(model, grid)
    try:
        state = homogeneous_steady_state(model, grid)
    except AnalysisUnavailableError:
        state = np.zeros((system.n_fields, grid.n_cells))
        for name in system.densities:
            state[system.index(name)] = 1.0 / grid.length
    for name, value in (u0 or {}).items():
        if name not in system.fields:
            raise ConfigurationError(f"no field named {name!r}; fields are {system.fields}",
                                     key=f"initial.{name}")
        state[system.index(name)] = np.broadcast_to(np.asarray(value, dtype=float), (grid.n_cells,))
    if noise:
        rng = np.random.default_rng(seed)
        for name in system.densities:
            i = system.index(name)
            mass = total_mass(state[i], grid)
            state[i] = state[i] * (1.0 + noise * rng.standard_normal(grid.n_cells))
            state[i] = np.maximum(state[i], 0.0)
            if mass > 0:
                state[i] *= mass / total_mass(state[i], grid)
    if system.info.get("augmented"):
        state = _augmented_initial(model, grid, system, state)
    return state


def _augmented_initial(model, grid, system, state):
    """Auxiliary fields from the memory convolution of a constant past."""
    tau, d3 = system.info["tau"], system.info["d3"]
    weak = TemporalKernelSpec("weak", tau, model.temporal.horizon_multiplier)
    buf = HistoryBuffer(["u"], weak.horizon)
    buf.append(0.0, state[0])
    v1 = direct_distributed_convolution(buf, weak, d3, grid, 0)
    state = state.copy()
    state[1] = v1
    if model.temporal.kind == "strong":
        strong = TemporalKernelSpec("strong", tau, model.temporal.horizon_multiplier)
        state[2] = direct_distributed_convolution(buf, strong, d3, grid, 0)
    return state
