import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cogmove import ConfigurationError, HistoryBuffer, KernelSpec, TemporalKernelSpec, build_grid, make_model
from cogmove.grid import potential_gradient
from cogmove.models import (aggregation_velocity, build_system, combined_map, conflict_map_rhs,
                            consumer_resource_rhs, delay_potential, den_site_potential,
                            homogeneous_steady_state, lotka_volterra_competition, map_q_rhs, marks_rhs,
                            nonlocal_argument, satisfaction, sda_den_site_velocity, short_long_rhs)
from cogmove.models.potentials import static_potential

G8 = build_grid(1.0, 8, "zero_flux")


def test_unknown_family_suggests():
    with pytest.raises(ConfigurationError, match="aggregation"):
        make_model("agregation")


def test_missing_required_key_has_path():
    with pytest.raises(ConfigurationError, match="model.m"):
        make_model("perception_foraging", {"d": 1.0})


def test_conflict_requires_symmetric_rho():
    with pytest.raises(ConfigurationError, match="symmetr"):
        make_model("conflict_zones", {"rho": [[0, 1], [2, 0]]})


def test_starvation_rates_ordered():
    with pytest.raises(ConfigurationError):
        make_model("starvation_den_site", {"gamma": 2.0, "gamma_plus": 1.0, "m": 1.0})


def test_short_long_ordering_is_a_warning():
    model = make_model("short_long", {"m": 1.0, "alpha_s": 0.1, "alpha_l": 0.5})
    assert any("alpha_l" in w for w in model.warnings)


def test_marks_algebra():
    u = [np.full(4, 1.0), np.full(4, 2.0)]
    alpha = [1.5, 0.5]
    p_star = (1.5 * 1.0 + 0.5 * 2.0) / 0.25
    np.testing.assert_allclose(marks_rhs(np.full(4, p_star), u, alpha, 0.25), 0.0, atol=1e-14)
    assert np.all(marks_rhs(np.ones(4), u, [0.0, 0.0], 0.0) == 0.0)
    assert np.all(marks_rhs(np.zeros(4), [np.zeros(4), np.ones(4)], [0.0, 2.0], 1.0) == 2.0)


@pytest.mark.parametrize("c, rho, mu, beta", [(1.0, 1.0, 0.1, 1.0), (0.3, 2.0, 0.5, 0.2)])
def test_conflict_algebra(c, rho, mu, beta):
    u = [np.full(3, c), np.full(3, c)]
    R = [[0.0, rho], [rho, 0.0]]
    k_mag = rho * c**2 / (mu + beta * c)
    k_prob = rho * c**2 / (rho * c**2 + mu + beta * c)
    np.testing.assert_allclose(conflict_map_rhs(np.full(3, k_mag), u, 0, R, mu, beta), 0.0, atol=1e-14)
    np.testing.assert_allclose(conflict_map_rhs(np.full(3, k_prob), u, 0, R, mu, beta, "probability"),
                               0.0, atol=1e-14)
    zero = [[0.0, 0.0], [0.0, 0.0]]
    assert np.all(conflict_map_rhs(np.zeros(3), u, 0, zero, mu, beta) == 0.0)


def test_consumer_resource_algebra():
    f, g = consumer_resource_rhs(0.5, 1.0, c=1, beta=2, alpha=1, death=1, r=1, K=2)
    assert abs(f) < 1e-15 and abs(g) < 1e-15
    f, g = consumer_resource_rhs(0.0, 2.0, c=1, beta=2, alpha=1, death=1, r=1, K=2)
    assert f == 0.0 and g == 0.0
    assert map_q_rhs(3.0 / 0.5, 0.0, 3.0, 1.0, 0.5) == 0.0


def test_lotka_volterra_algebra():
    f, g = lotka_volterra_competition(2 / 3, 2 / 3, 0.5, 0.5, 1.3)
    assert abs(f) < 1e-15 and abs(g) < 1e-15
    assert lotka_volterra_competition(1.0, 0.0, 0.5, 0.5, 1.0) == (0.0, 0.0)
    assert lotka_volterra_competition(0.0, 0.0, 0.5, 0.5, 1.0) == (0.0, 0.0)


def test_short_long_algebra():
    a = 3.0
    rs, rl = short_long_rhs(2.0 * a / 4.0, 0.5 * a / 0.2, a, a, 2.0, 0.5, 4.0, 0.2)
    assert abs(rs) < 1e-15 and abs(rl) < 1e-15
    assert short_long_rhs(0.0, 0.0, 0.0, 0.0, 2.0, 0.5, 4.0, 0.2) == (0.0, 0.0)
    np.testing.assert_array_equal(combined_map(np.array([1.0]), np.array([3.0]), -1.0, 1.0), [2.0])


STEADY_CASES = [
    ("marks", {"alpha": [[1.0, 0.5], [0.3, 2.0]], "mu": 0.5}, None),
    ("conflict_zones", {"rho": [[0, 1], [1, 0]], "beta": 1.0, "mu": 0.1}, None),
    ("conflict_zones", {"rho": [[0, 1], [1, 0]], "beta": 1.0, "mu": 0.1, "variant": "probability"}, None),
    ("consumer_resource", {}, None),
    ("consumer_resource", {"map": "linear_q"}, None),
    ("consumer_resource", {"map": "bilinear_q", "xi": 0.5}, None),
    ("discrete_delay", {"variant": "consumer_resource"}, TemporalKernelSpec("discrete", 0.5)),
    ("discrete_delay", {"variant": "competition"}, TemporalKernelSpec("discrete", 0.5)),
    ("discrete_delay", {"variant": "scalar", "r": 1.0}, TemporalKernelSpec("discrete", 0.5)),
    ("aggregation", {}, None),
]


def rhs_at_steady_state(family, params, temporal):
    # periodic so the cutoff kernel sees a uniform field everywhere
    g = build_grid(1.0, 16, "periodic")
    model = make_model(family, params, KernelSpec("gaussian", 0.1), temporal)
    system = build_system(model, g)
    state = homogeneous_steady_state(model, g)
    hist = None
    if system.needs_history:
        hist = HistoryBuffer(system.fields, 2 * system.history_horizon)
        hist.append(0.0, state)
    vel, out = system.evaluate(0.0, state, hist)
    return state, vel, out


@pytest.mark.parametrize("family, params, temporal", STEADY_CASES)
def test_homogeneous_states_zero_the_rhs(family, params, temporal):
    state, vel, out = rhs_at_steady_state(family, params, temporal)
    assert np.max(np.abs(out)) <= 1e-12
    for v in vel.values():
        assert np.max(np.abs(v)) <= 1e-12


def test_tabulated_values_match_hand_algebra():
    state, _, _ = rhs_at_steady_state(*STEADY_CASES[0])
    np.testing.assert_allclose(state[2:, 0], [3.0, 4.6], rtol=1e-14)
    state, _, _ = rhs_at_steady_state(*STEADY_CASES[3])
    np.testing.assert_allclose(state[:, 0], [0.5, 1.0], rtol=1e-14)
    state, _, _ = rhs_at_steady_state(*STEADY_CASES[7])
    np.testing.assert_allclose(state[:, 0], [2 / 3, 2 / 3], rtol=1e-14)


nonneg = arrays(float, 6, elements=st.floats(0, 20))


@settings(max_examples=100, deadline=None)
@given(nonneg, nonneg, nonneg, st.floats(0, 5), st.floats(0, 5), st.floats(0.01, 0.99))
def test_marks_and_magnitude_maps_stay_nonnegative(u1, u2, k, mu, beta, frac):
    dt = frac / (mu + beta * max(u1.max(), u2.max()) + 1e-12)
    p_new = k + dt * marks_rhs(k, [u1, u2], [0.7, 1.3], mu)
    assert np.all(p_new >= 0)
    k_new = k + dt * conflict_map_rhs(k, [u1, u2], 0, [[0, 1], [1, 0]], mu, beta)
    assert np.all(k_new >= -1e-12)


@settings(max_examples=100, deadline=None)
@given(nonneg, nonneg, arrays(float, 6, elements=st.floats(0, 1)), st.floats(0, 5), st.floats(0, 5),
       st.floats(0.01, 0.99))
def test_probability_map_stays_in_unit_interval(u1, u2, k, mu, beta, frac):
    # the encounter rate joins the decay bound: at k = 0 one step adds dt * u1 * u2
    encounter = float(np.max(u1 * u2))
    dt = frac / (mu + beta * u1.max() + encounter + 1e-12)
    k_new = k + dt * conflict_map_rhs(k, [u1, u2], 0, [[0, 1], [1, 0]], mu, beta, "probability")
    assert np.all(k_new >= -1e-12) and np.all(k_new <= 1 + 1e-12)


@settings(max_examples=50, deadline=None)
@given(arrays(float, 8, elements=st.floats(0, 10)), st.floats(-5, 5))
def test_aggregation_velocity_linear_in_gamma(u, gamma):
    spec = KernelSpec("gaussian", 0.2)
    np.testing.assert_array_equal(aggregation_velocity(u, -gamma, spec, G8),
                                  -aggregation_velocity(u, gamma, spec, G8))


def test_aggregation_velocity_trivial_cases():
    spec = KernelSpec("gaussian", 0.2)
    assert np.all(aggregation_velocity(np.full(8, 2.0), 1.0, spec, build_grid(1.0, 8, "periodic")) == 0)
    assert np.all(aggregation_velocity(np.sin(G8.centers), 0.0, spec, G8) == 0)


def test_mirror_species_have_antisymmetric_velocities():
    g = build_grid(1.0, 32, "zero_flux")
    x = g.centers
    left, right = np.exp(-((x - 0.3) ** 2) / 0.01), np.exp(-((x - 0.7) ** 2) / 0.01)
    v1, v2 = aggregation_velocity([left, right], [[0.0, 1.0], [-1.0, 0.0]], KernelSpec("gaussian", 0.1), g)
    np.testing.assert_allclose(v1, v2[::-1], atol=1e-14)


def test_one_species_matrix_matches_scalar_bitwise():
    g = build_grid(1.0, 64)
    spec = KernelSpec("exponential", 0.05)
    u = np.random.default_rng(3).uniform(0.5, 1.5, 64)
    single = build_system(make_model("aggregation", {"gamma": 0.7, "d": 0.2}, spec), g)
    multi = build_system(make_model("multi_aggregation", {"n_species": 1, "gamma": [[0.7]], "d": 0.2},
                                    spec), g)
    a = single.velocity(0.0, u[None, :], None)[0]
    b = multi.velocity(0.0, u[None, :], None)[0]
    assert np.array_equal(a, b)


def test_static_maps():
    g = build_grid(1.0, 16)
    grad = potential_gradient(den_site_potential(g, 0.5, 1.0), g)
    np.testing.assert_allclose(grad[1:8], -1.0, rtol=1e-12)
    np.testing.assert_allclose(grad[9:-1], 1.0, rtol=1e-12)
    np.testing.assert_allclose(static_potential("avg_density", g, m=np.full(16, 3.0)), 1.0, rtol=1e-15)
    u = np.linspace(1, 2, 16)
    np.testing.assert_allclose(static_potential("per_capita", g, m=u, u=u), 1.0, rtol=1e-15)


def test_satisfaction_examples():
    u = np.linspace(0.5, 2, 8)
    np.testing.assert_allclose(satisfaction("supply_demand", u, u), 1.0)
    np.testing.assert_allclose(satisfaction("supply_demand", 2 * u, u), 2.0)
    np.testing.assert_allclose(satisfaction("relative_average", np.full(8, 4.0), u), 1.0)


def test_sda_velocities():
    g = G8
    x0, gamma, gamma_plus = 0.5, 0.3, 1.0
    den = potential_gradient(-den_site_potential(g, x0, gamma), g)
    satisfied = sda_den_site_velocity(np.ones(8), np.full(8, 2.0), x0, gamma, gamma_plus, g)
    np.testing.assert_allclose(satisfied, den, atol=1e-15)
    hungry = sda_den_site_velocity(np.ones(8), np.full(8, 0.5), x0, gamma, gamma_plus, g)
    np.testing.assert_allclose(hungry, den, atol=1e-14)
    # hungry on the left half only, where m rises toward x = 0
    m = np.array([0.9, 0.8, 0.7, 0.6, 3.0, 3.0, 3.0, 3.0])
    vel = sda_den_site_velocity(np.ones(8), m, x0, gamma, gamma_plus, g)
    dx = g.dx
    for face in (1, 2, 3):
        expected = gamma_plus * (m[face] - m[face - 1]) / dx + den[face]
        assert vel[face] == pytest.approx(expected, rel=1e-12)
    np.testing.assert_allclose(vel[5:8], den[5:8], atol=1e-14)


def test_delay_potential():
    buf = HistoryBuffer(["u"], 5.0)
    mode = np.cos(np.pi * G8.centers)
    omega, tau = 1.3, 0.4
    for t in np.arange(0, 3.0001, 1e-3):
        buf.append(float(t), np.cos(omega * t) * mode)
    np.testing.assert_allclose(delay_potential(buf, "u", 3.0, tau), np.cos(omega * 2.6) * mode, atol=1e-6)
    np.testing.assert_array_equal(delay_potential(buf, "u", 3.0, 0.0), buf.sample("u", 3.0))
    with pytest.raises(ConfigurationError):
        delay_potential(buf, "u", 3.0, -1.0)


def test_nonlocal_arguments():
    u = np.full(8, 1.7)
    for kind in ("local", "spatial_average", "temporal_delay", "kernel_delay"):
        np.testing.assert_allclose(nonlocal_argument(kind, u, G8), 1.7)
    s = np.sin(2 * np.pi * G8.centers) + 0.4
    np.testing.assert_allclose(nonlocal_argument("spatial_average", s, G8), 0.4, atol=1e-15)
    np.testing.assert_array_equal(nonlocal_argument("kernel_delay", s, G8),
                                  nonlocal_argument("spatial_average", s, G8))
