import numpy as np
import pytest
from scipy.integrate import solve_ivp

from cogmove import (DivergenceError, KernelSpec, StepConfig, StepRejectedError, Trajectory,
                     TemporalKernelSpec, build_grid, detect_attractor, make_model, run)
from cogmove.grid import total_mass
from cogmove.stepper import advective_flux, classify_probe, steady_state_local_limit

from conftest import conserving_models


def flat(x, t=0.0):
    return np.zeros_like(x)


def gaussian_state(grid, center, width):
    u = np.exp(-((grid.centers - center) ** 2) / (2 * width**2))
    return u / total_mass(u, grid)


def moments(u, grid):
    x = grid.centers
    mass = total_mass(u, grid)
    mean = total_mass(x * u, grid) / mass
    return mean, total_mass((x - mean) ** 2 * u, grid) / mass


def test_heat_variance_grows_at_twice_diffusivity():
    g = build_grid(1.0, 400, "periodic")
    d, t_end = 1e-3, 1.0
    u0 = gaussian_state(g, 0.5, 0.04)
    traj = run(make_model("prototype", {"d": d, "potential": flat}), g, u0,
               StepConfig(t_end=t_end, dt_max=1e-3))
    _, v0 = moments(u0, g)
    _, v1 = moments(traj.final[0], g)
    assert v1 - v0 == pytest.approx(2 * d * t_end, rel=1e-6)


def test_zero_state_stays_zero():
    g = build_grid(1.0, 32)
    traj = run(make_model("aggregation", {"d": 0.1, "gamma": 1.0}, KernelSpec("gaussian", 0.1)), g,
               np.zeros((1, 32)), StepConfig(t_end=0.5))
    assert np.all(traj.final == 0.0)


def test_constant_velocity_translates_the_mean():
    g = build_grid(1.0, 400)
    speed = 0.2
    u0 = gaussian_state(g, 0.3, 0.03)
    model = make_model("prototype", {"d": 1e-5, "potential": lambda x, t: speed * x})
    traj = run(model, g, u0, StepConfig(t_end=1.0, dt_max=1e-3))
    mean, _ = moments(traj.final[0], g)
    assert mean == pytest.approx(0.3 + speed, abs=1e-6)


def test_uniform_resource_keeps_uniform_density():
    g = build_grid(1.0, 64, "periodic")
    model = make_model("perception_foraging", {"d": 0.1, "gamma": 2.0, "m": 3.0}, KernelSpec("gaussian", 0.1))
    traj = run(model, g, np.full((1, 64), 1.0), StepConfig(t_end=1.0))
    np.testing.assert_allclose(traj.final, 1.0, atol=1e-14)


def test_foraging_relaxes_to_local_limit():
    errors = []
    for n in (64, 128):
        g = build_grid(1.0, n)
        m = np.exp(-((g.centers - 0.5) ** 2) / 0.02)
        model = make_model("perception_foraging", {"d": 0.1, "gamma": 0.2, "m": m})
        traj = run(model, g, np.full((1, n), 1.0), StepConfig(t_end=20.0, advection="central"))
        assert detect_attractor(traj).kind == "steady"
        errors.append(np.max(np.abs(traj.final[0] - steady_state_local_limit(m, 0.2, 0.1, g))))
    # remaining gap is the second-order spatial error of the central scheme
    assert errors[0] < 1e-2
    assert errors[0] / errors[1] > 3.5


def test_logistic_growth_matches_ode():
    g = build_grid(1.0, 16, "periodic")
    model = make_model("distributed", {"d": 0.1, "gamma": 0.0, "r": 1.0, "K": 1.0},
                       KernelSpec(), TemporalKernelSpec("weak", 0.5))
    traj = run(model, g, {"u": np.full(16, 0.1)}, StepConfig(t_end=6.0, dt_max=1e-3, snapshot_every=1.0))
    ref = solve_ivp(lambda t, u: u * (1 - u), (0, 6), [0.1], rtol=1e-12, atol=1e-14, t_eval=traj.t)
    np.testing.assert_allclose(traj.field("u")[:, 0], ref.y[0], atol=5e-4)
    assert np.ptp(traj.final[0]) < 1e-12


def test_fixed_dt_violating_cfl_is_rejected():
    g = build_grid(1.0, 10)
    model = make_model("prototype", {"d": 1e-9, "potential": lambda x, t: 50.0 * x})
    with pytest.raises(StepRejectedError):
        run(model, g, np.ones((1, 10)), StepConfig(t_end=0.1, dt=0.01))


def test_central_scheme_undershoot_diverges():
    g = build_grid(1.0, 50)
    u0 = np.zeros((1, 50))
    u0[0, 25] = 1.0
    model = make_model("prototype", {"d": 1e-9, "potential": lambda x, t: x})
    with pytest.raises(DivergenceError) as info:
        run(model, g, u0, StepConfig(t_end=0.1, dt=0.01, advection="central"))
    assert info.value.trajectory.status == "diverged"


def test_mirror_symmetry_is_preserved():
    g = build_grid(1.0, 100)
    x = g.centers
    m = lambda x, t: 1 + np.cos(2 * np.pi * (x - 0.5))
    u0 = 1 + 0.3 * np.cos(6 * np.pi * (x - 0.5))
    model = make_model("perception_foraging", {"d": 0.01, "gamma": 0.05, "m": m}, KernelSpec("gaussian", 0.1))
    traj = run(model, g, u0[None, :], StepConfig(t_end=1.0, dt=1e-3))
    u = traj.final[0]
    np.testing.assert_allclose(u, u[::-1], rtol=1e-12, atol=0)


def test_dirichlet_loses_mass_monotonically():
    g = build_grid(1.0, 64, "dirichlet")
    traj = run(make_model("prototype", {"d": 0.1, "potential": flat}), g, np.ones((1, 64)),
               StepConfig(t_end=0.5, snapshot_every=0.01))
    mass = traj.masses("u")
    assert np.all(np.diff(mass) < 0)
    assert np.min(traj.field("u")) >= 0


@pytest.mark.parametrize("bc", ["zero_flux", "periodic"])
@pytest.mark.parametrize("family", sorted(conserving_models()))
def test_short_runs_conserve_mass(family, bc):
    model = conserving_models()[family]
    g = build_grid(1.0, 64, bc)
    traj = run(model, g, None, StepConfig(t_end=0.05, dt=5e-4), noise=0.1, seed=1)
    assert max(traj.mass_drift().values()) <= 1e-12


def test_upwind_flux_examples():
    g = build_grid(1.0, 4, "zero_flux")
    u = np.array([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_array_equal(advective_flux(u, np.array([0, 1, 1, 1, 0.0]), g), [0, 1, 2, 3, 0])
    np.testing.assert_array_equal(advective_flux(u, np.array([0, -1, -1, -1, 0.0]), g), [0, -2, -3, -4, 0])
    np.testing.assert_array_equal(advective_flux(u, np.array([0, 2, 2, 2, 0.0]), g, "central"), [0, 3, 5, 7, 0])


def synthetic(signal, times):
    g = build_grid(1.0, 20)
    x = g.centers
    traj = Trajectory(g, ["u"], ["u"])
    for t in times:
        traj.times.append(float(t))
        traj.states.append(signal(x, t)[None, :])
    return traj


def test_attractor_detection():
    t = np.linspace(0, 50, 2001)
    steady = detect_attractor(synthetic(lambda x, t: 1 + 0 * x, t))
    assert steady.kind == "steady"
    periodic = detect_attractor(synthetic(lambda x, t: 1 + 0.5 * np.sin(2 * np.pi * t / 5) * x, t))
    assert periodic.kind == "periodic"
    assert periodic.period == pytest.approx(5.0, rel=1e-3)
    drift = detect_attractor(synthetic(lambda x, t: 1 + 0.01 * t * x, t))
    assert drift.kind == "undetermined"


def test_probe_needs_stable_amplitude():
    t = np.linspace(0, 50, 2001)
    assert classify_probe(t, np.exp(0.05 * t) * np.sin(t)).kind == "undetermined"
