"""Pointwise kinetics and cognitive-map source terms. All functions are
elementwise over numpy arrays and have no grid dependence."""

import numpy as np

from ..errors import ConfigurationError, DegenerateLandscapeError

EPS_FLOOR = 1e-12
_DIV_FLOOR = 1e-300


def logistic(u, r, K=1.0, w=None):
    """``r u (1 - w/K)`` with ``w = u`` unless a nonlocal/delayed argument is given."""
    if w is None:
        w = u
    return r * u * (1.0 - w / K)


def marks_rhs(p_i, u, alpha_row, mu):
    """Foreign-mark source for species ``i``: ``sum_j alpha_ij u_j - mu p_i``.

    ``u`` is a sequence of densities; self-marks enter only through a
    non-zero diagonal entry of ``alpha_row``.
    """
    out = -mu * np.asarray(p_i, dtype=float)
    for a_ij, u_j in zip(alpha_row, u):
        if a_ij != 0.0:
            out = out + a_ij * u_j
    return out


def marks_steady_state(alpha, mu, u_star):
    alpha = np.asarray(alpha, dtype=float)
    if mu <= 0:
        raise ConfigurationError("mark steady state needs mu > 0", key="model.mu")
    return alpha @ np.asarray(u_star, dtype=float) / mu


def conflict_growth(u, i, rho, perceived_ui=None):
    """Encounter term ``u_i sum_j rho_ij u_j`` (leading factor optionally perceived)."""
    lead = u[i] if perceived_ui is None else perceived_ui
    total = np.zeros_like(np.asarray(u[i], dtype=float))
    for j, u_j in enumerate(u):
        if rho[i][j] != 0.0:
            total = total + rho[i][j] * u_j
    return lead * total


def conflict_map_rhs(k_i, u, i, rho, mu, beta, variant="magnitude", perceived_ui=None):
    """Conflict-zone map source (smearing diffusion is handled by the stepper).

    Magnitude: ``G - (mu + beta u_i) k_i``; probability: ``G (1 - k_i) - (mu + beta u_i) k_i``.
    """
    growth = conflict_growth(u, i, rho, perceived_ui)
    loss = (mu + beta * u[i]) * k_i
    if variant == "probability":
        return growth * (1.0 - k_i) - loss
    if variant != "magnitude":
        raise ConfigurationError(f"unknown conflict variant {variant!r}", key="model.variant")
    return growth - loss


def conflict_steady_state(rho_sum_c2, mu, beta, c, variant="magnitude"):
    """Homogeneous map level for constant densities, ``rho_sum_c2 = c * sum_j rho_ij c_j``."""
    if variant == "probability":
        return rho_sum_c2 / (rho_sum_c2 + mu + beta * c)
    return rho_sum_c2 / (mu + beta * c)


def holling(v, alpha):
    return v / np.maximum(alpha + v, _DIV_FLOOR)


def consumer_resource_rhs(u, v, c, beta, alpha, death, r, K):
    """Holling-II consumer ``f`` and logistic resource ``g``."""
    uptake = beta * u * holling(v, alpha)
    f = c * uptake - death * u
    g = r * v * (1.0 - v / K) - uptake
    return f, g


def consumer_resource_steady_state(c, beta, alpha, death, r, K):
    """Coexistence state ``(u*, v*)``; requires ``c beta > death`` and ``v* < K``."""
    if c * beta <= death:
        return None
    v = alpha * death / (c * beta - death)
    if v >= K:
        return None
    u = r * (1.0 - v / K) * (alpha + v) / beta
    return u, v


def map_q_rhs(q, u, v, b, mu, xi=0.0, kind="linear_q"):
    """Resource-memory map: ``b v - mu q`` or ``b u v - (mu + xi u) q``."""
    if kind == "linear_q":
        return b * v - mu * q
    if kind == "bilinear_q":
        return b * u * v - (mu + xi * u) * q
    raise ConfigurationError(f"unknown map kind {kind!r}", key="model.map")


def lotka_volterra_competition(u, v, alpha, beta, gamma):
    f = u * (1.0 - u - alpha * v)
    g = gamma * v * (1.0 - beta * u - v)
    return f, g


def lotka_volterra_coexistence(alpha, beta):
    det = 1.0 - alpha * beta
    if det <= 0:
        return None
    u, v = (1.0 - alpha) / det, (1.0 - beta) / det
    if u <= 0 or v <= 0:
        return None
    return u, v


def short_long_rhs(m_s, m_l, a_s, a_l, alpha_s, alpha_l, beta_s, beta_l):
    return alpha_s * a_s - beta_s * m_s, alpha_l * a_l - beta_l * m_l


def combined_map(m_s, m_l, c1, c2):
    return c1 * m_s + c2 * m_l


def satisfaction(kind, m, u, L=None):
    """``m / u`` (supply over demand) or ``m / mean(m)`` (relative to average)."""
    m = np.asarray(m, dtype=float)
    if kind == "supply_demand":
        return m / np.maximum(np.asarray(u, dtype=float), EPS_FLOOR)
    if kind == "relative_average":
        mean = float(np.mean(m))
        if mean == 0.0:
            raise DegenerateLandscapeError("landscape average is zero")
        return m / mean
    raise ConfigurationError(f"unknown satisfaction kind {kind!r}", key="model.satisfaction")


def step_response(s, high, low):
    """``high`` where ``s < 1``; ``low`` where ``s >= 1``."""
    return np.where(np.asarray(s) < 1.0, high, low)


def smooth_response(s, high, low, sharpness):
    w = 0.5 * (1.0 + np.tanh(0.5 * sharpness * (1.0 - np.asarray(s))))
    return low + (high - low) * w


def starvation_rate(s, gamma_plus, response="step", sharpness=10.0):
    """Advection rate toward resources: on (``gamma_plus``) when hungry, off when satisfied."""
    if response == "step":
        return step_response(s, gamma_plus, 0.0)
    if response == "smooth":
        return smooth_response(s, gamma_plus, 0.0, sharpness)
    raise ConfigurationError(f"unknown response {response!r}", key="model.response")


def diffusion_response(s, d_plus, d_minus, response="step", sharpness=10.0):
    """Satisfaction-dependent motility, bounded between ``d_minus`` and ``d_plus``."""
    if not 0 < d_minus <= d_plus:
        raise ConfigurationError("need 0 < d_minus <= d_plus", key="model.d_minus")
    if response == "step":
        return step_response(s, d_plus, d_minus)
    return smooth_response(s, d_plus, d_minus, sharpness)
