"""
Temporal memory: delay kernels, the history buffer, and the space-time
memory convolution

    v(x, t) = int_0^inf  weight(s) * [exp(s d3 Laplacian) u(., t - s)](x)  ds

evaluated either directly from stored history (``direct_distributed_convolution``)
or through auxiliary diffusion-relaxation fields (``augment_distributed``).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import ConfigurationError, HistoryLookupError, HorizonError

TEMPORAL_KINDS = ("none", "discrete", "weak", "strong")

DEFAULT_HORIZON_MULTIPLIER = 20.0
TAIL_TOLERANCE = 1e-6
MODE_CUTOFF = 1e-14


@dataclass(frozen=True)
class TemporalKernelSpec:
    kind: str = "none"
    tau: float = 0.0
    horizon_multiplier: float = DEFAULT_HORIZON_MULTIPLIER

    def __post_init__(self):
        kind = self.kind.lower()
        if kind in ("discretedelay", "discrete_delay"):
            kind = "discrete"
        if kind not in TEMPORAL_KINDS:
            raise ConfigurationError(f"unknown temporal kernel {self.kind!r}", key="delay.kind")
        object.__setattr__(self, "kind", kind)
        if kind != "none" and not (self.tau > 0):
            raise ConfigurationError(f"tau must be positive, got {self.tau}", key="delay.tau")
        if self.horizon_multiplier <= 0:
            raise ConfigurationError("horizon multiplier must be positive",
                                     key="delay.horizon_multiplier")

    @property
    def horizon(self):
        if self.kind == "discrete":
            return self.tau
        if self.kind in ("weak", "strong"):
            return self.horizon_multiplier * self.tau
        return 0.0


def temporal_density(spec, t):
    """Weak ``exp(-t/tau)/tau`` or strong ``t exp(-t/tau)/tau^2`` weight."""
    if spec.kind not in ("weak", "strong"):
        raise ConfigurationError(f"{spec.kind!r} kernel has no pointwise density", key="delay.kind")
    t = np.asarray(t, dtype=float)
    tau = spec.tau
    out = np.exp(-t / tau) / tau
    if spec.kind == "strong":
        out = out * t / tau
    out = np.where(t < 0, 0.0, out)
    return out[()] if out.ndim == 0 else out


def tail_mass(spec, horizon):
    """Kernel mass beyond ``horizon``."""
    z = horizon / spec.tau
    if spec.kind == "weak":
        return math.exp(-z)
    if spec.kind == "strong":
        return (1.0 + z) * math.exp(-z)
    raise ConfigurationError(f"{spec.kind!r} kernel has no tail", key="delay.kind")


class HistoryBuffer:
    """Time-ordered snapshots of every field, with linear interpolation.

    ``initial_history`` is ``None`` (constant continuation of the first
    snapshot) or a callable ``t -> (n_fields, n_cells)`` array for ``t`` at or
    before the start time.  Snapshots older than ``now - horizon`` are pruned,
    keeping one bracketing point.
    """

    def __init__(self, fields, horizon, initial_history=None):
        self.fields = list(fields)
        self._index = {name: i for i, name in enumerate(self.fields)}
        self.horizon = float(horizon)
        self.initial_history = initial_history
        self.times = []
        self.states = []
        self.t_start = None
        self._first = None

    def __len__(self):
        return len(self.times)

    @property
    def now(self):
        return self.times[-1] if self.times else None

    def field_index(self, species):
        if isinstance(species, (int, np.integer)):
            return int(species)
        try:
            return self._index[species]
        except KeyError:
            raise ConfigurationError(f"no field named {species!r} in history", key="delay.target") from None

    def append(self, t, state):
        state = np.array(state, dtype=float, copy=True)
        if state.ndim == 1:
            state = state[None, :]
        if self.times:
            if t <= self.times[-1]:
                raise ValueError(f"snapshot time {t} not after {self.times[-1]}")
        else:
            self.t_start = float(t)
            self._first = state
        self.times.append(float(t))
        self.states.append(state)
        self._prune()

    def _prune(self):
        cutoff = self.times[-1] - self.horizon
        # keep the last snapshot at or before the cutoff for interpolation
        k = bisect.bisect_right(self.times, cutoff) - 1
        if k > 0:
            del self.times[:k]
            del self.states[:k]

    def initial_state(self, t):
        if self.initial_history is None:
            return self._first
        out = np.asarray(self.initial_history(t), dtype=float)
        return out if out.ndim == 2 else out[None, :]

    def sample_all(self, t_query):
        if not self.times:
            raise HistoryLookupError("history buffer is empty")
        now = self.times[-1]
        if t_query > now + 1e-12 * max(1.0, abs(now)):
            raise HistoryLookupError(f"history query at t={t_query} is after the current time {now}")
        if t_query <= self.t_start:
            return self.initial_state(t_query)
        if t_query < self.times[0]:
            raise HistoryLookupError(f"history query at t={t_query} is older than the retained horizon")
        k = bisect.bisect_right(self.times, t_query) - 1
        if k >= len(self.times) - 1:
            return self.states[-1]
        t0, t1 = self.times[k], self.times[k + 1]
        w = (t_query - t0) / (t1 - t0)
        return (1.0 - w) * self.states[k] + w * self.states[k + 1]

    def sample(self, species, t_query):
        """Field ``species`` at ``t_query`` (interpolated, or initial history)."""
        return self.sample_all(t_query)[self.field_index(species)].copy()


def history_sample(buf, species, t_query):
    return buf.sample(species, t_query)


def _moment_integrals(z, p_max=2):
    """``int_0^1 theta^p exp(-z theta) d theta`` for p = 0..p_max, elementwise in z."""
    z = np.asarray(z, dtype=float)
    out = np.empty((p_max + 1,) + z.shape)
    small = z < 0.5
    zs = z[small]
    for p in range(p_max + 1):
        term = np.ones_like(zs)
        acc = term / (p + 1)
        for k in range(1, 16):
            term = term * (-zs) / k
            acc = acc + term / (k + p + 1)
        out[p][small] = acc
    zl = z[~small]
    e = np.exp(-zl)
    out[0][~small] = -np.expm1(-zl) / zl
    if p_max >= 1:
        out[1][~small] = (1.0 - (1.0 + zl) * e) / zl**2
    if p_max >= 2:
        out[2][~small] = (2.0 - (zl * zl + 2.0 * zl + 2.0) * e) / zl**3
    return out


def _interval_weights(spec, lam, s0, h):
    """Exact weights ``(w_left, w_right)`` of ``int_{s0}^{s0+h} K(s) e^{-lam s} f(s) ds``
    for ``f`` linear on the interval, per mode ``lam``."""
    tau = spec.tau
    c = 1.0 / tau + lam
    h = np.asarray(h, dtype=float)
    if h.ndim == 2 and h.shape[1] == 1 and np.ndim(c) == 2:
        # interval widths repeat (step sizes); moments depend only on c * h
        widths, inverse = np.unique(h[:, 0], return_inverse=True)
        m = _moment_integrals(c * widths[:, None])[:, inverse]
    else:
        m = _moment_integrals(c * h)
    scale = np.exp(-c * s0) * h / tau
    if spec.kind == "weak":
        right = m[1]
        left = m[0] - m[1]
    else:
        # extra factor s/tau = (s0 + h theta)/tau
        a, b = s0 / tau, h / tau
        right = a * m[1] + b * m[2]
        left = a * (m[0] - m[1]) + b * (m[1] - m[2])
    return scale * left, scale * right


def _tail_weight(spec, lam, a):
    """``int_a^inf K(s) e^{-lam s} ds`` per mode."""
    tau = spec.tau
    c = 1.0 / tau + lam
    if spec.kind == "weak":
        return np.exp(-c * a) / (tau * c)
    return np.exp(-c * a) * (a / c + 1.0 / c**2) / tau**2


def _accumulate(spec, lam, lags, coefs):
    """Sum of exact interval weights over consecutive ``lags`` rows of ``coefs``."""
    if len(lags) < 2:
        return np.zeros(coefs.shape[1:], dtype=coefs.dtype)
    wl, wr = _interval_weights(spec, lam[None, :], lags[:-1, None], np.diff(lags)[:, None])
    return np.sum(wl * coefs[:-1] + wr * coefs[1:], axis=0)


def mode_eigenvalues(grid):
    """Continuous Laplacian eigenvalues for the grid's cosine/Fourier basis."""
    n, L = grid.n_cells, grid.length
    if grid.bc.is_periodic:
        j = np.fft.rfftfreq(n, d=1.0 / n)
        return (2.0 * np.pi * j / L) ** 2
    return (np.pi * np.arange(n) / L) ** 2


def _forward(f, grid):
    if grid.bc.is_periodic:
        return np.fft.rfft(f, axis=-1)
    return scipy.fft.dct(f, type=2, norm="ortho", axis=-1)


def _inverse(c, grid):
    if grid.bc.is_periodic:
        return np.fft.irfft(c, n=grid.n_cells, axis=-1)
    return scipy.fft.idct(c, type=2, norm="ortho", axis=-1)


def mode_gain(spec, lam):
    """Total weight ``int K(s) e^{-lam s} ds`` of a heat mode."""
    g = 1.0 / (1.0 + spec.tau * lam)
    return g if spec.kind == "weak" else g * g


def direct_distributed_convolution(buf, spec, d3, grid, species="u", t=None):
    """Space-time memory field of ``species`` at time ``t`` (default: now).

    Expands the heat semigroup in the Laplacian eigenmodes of the grid
    (cosines for zero-flux/Neumann, Fourier modes for periodic) and
    integrates the piecewise-linear history exactly against
    ``K(s) exp(-d3 lambda_j s)`` on each snapshot interval.  History older
    than the start time is taken from the buffer's initial history.
    """
    if spec.kind not in ("weak", "strong"):
        raise ConfigurationError("direct convolution needs a weak or strong kernel", key="delay.kind")
    if grid.bc.kind not in ("zero_flux", "neumann", "periodic"):
        raise ConfigurationError("direct convolution needs a zero-flux, Neumann or periodic grid",
                                 key="grid.bc")
    if tail_mass(spec, buf.horizon) > TAIL_TOLERANCE:
        raise HorizonError(f"history horizon {buf.horizon} leaves kernel tail mass "
                           f"{tail_mass(spec, buf.horizon):.3g} > {TAIL_TOLERANCE}")
    if t is None:
        t = buf.now
    idx = buf.field_index(species)
    lam = d3 * mode_eigenvalues(grid)
    keep = mode_gain(spec, lam) >= MODE_CUTOFF
    lam_k = lam[keep]

    t_start = buf.t_start
    # nodes newest first: t, then stored snapshot times strictly before t
    k_end = bisect.bisect_left(buf.times, t - 1e-12)
    past = [buf.states[k][idx] for k in range(k_end - 1, -1, -1)]
    values = np.array([buf.sample(idx, t)] + past)
    lags = t - np.concatenate([[t], np.asarray(buf.times[:k_end])[::-1]])
    acc = _accumulate(spec, lam_k, lags, _forward(values, grid)[:, keep])
    a = lags[-1]
    pruned = buf.times[0] > t_start

    # history before the start time
    if pruned:
        pass  # older history lies beyond the horizon; its weight is below the tail tolerance
    elif buf.initial_history is None:
        acc += _tail_weight(spec, lam_k, a) * _forward(buf.sample(idx, t_start), grid)[keep]
    else:
        span = buf.horizon - a
        if span > 0:
            n_pts = max(2, int(math.ceil(span / (spec.tau / 200.0))) + 1)
            pre_lags = np.linspace(a, buf.horizon, n_pts)
            values = np.array([buf.sample(idx, t - s) for s in pre_lags])
            acc += _accumulate(spec, lam_k, pre_lags, _forward(values, grid)[:, keep])

    full = np.zeros(lam.shape, dtype=acc.dtype)
    full[keep] = acc
    return _inverse(full, grid)


def augment_distributed(model):
    """Replace a weak/strong memory kernel by auxiliary relaxation fields.

    Weak kernels add ``v`` with ``v_t = d3 v_xx + (u - v)/tau``; strong kernels
    add the chain ``v1 -> v2`` and advect on ``v2``.  The chain is the
    standard linear-chain construction and is marked ``derived-construction``.
    """
    from .models.spec import augment_model

    return augment_model(model)
