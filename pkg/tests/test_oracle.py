import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cogmove.errors import ConfigurationError, TruncationError
from cogmove.oracle import (drift_table, estimate_drift_diffusion, lattice_kernel, master_step,
                            master_vs_pde, step_moments, verify_fokker_planck, weight_field)

SPACING = 0.01
KERNEL = lattice_kernel(0.05, SPACING, 0.01)
X = np.arange(201) * SPACING


def linear(x):
    return x


def test_kernel_invariants():
    assert KERNEL.weights.sum() == pytest.approx(1.0, abs=1e-15)
    assert abs(np.sum(KERNEL.offsets * KERNEL.weights)) < 1e-15
    assert np.array_equal(KERNEL.weights, KERNEL.weights[::-1])
    with pytest.raises(ConfigurationError):
        lattice_kernel(0.05, 0.5, 0.01)
    with pytest.raises(ConfigurationError):
        lattice_kernel(-1.0, 0.01, 0.01)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=201, max_size=201), st.floats(-3, 3))
def test_master_step_conserves_probability(values, beta):
    p = np.asarray(values) + 1e-3
    p /= p.sum()
    out = master_step(p, KERNEL, weight_field([(beta, linear)], X), periodic=True)
    assert out.sum() == pytest.approx(1.0, abs=1e-13)
    assert np.all(out >= 0)


def test_master_step_examples():
    p = np.zeros(201)
    p[100] = 1.0
    flat = master_step(p, KERNEL, np.ones(201))
    m = KERNEL.half_width
    np.testing.assert_allclose(flat[100 - m:100 + m + 1], KERNEL.weights, atol=1e-16)
    assert np.sum(X * flat) == pytest.approx(X[100], abs=1e-14)
    tilted = master_step(p, KERNEL, weight_field([(2.0, linear)], X))
    assert np.sum(X * tilted) > X[100]


def test_moments_at_zero_bias():
    w = np.ones(201)
    c_hat, d_hat = estimate_drift_diffusion(KERNEL, w, 100)
    assert c_hat == 0.0
    assert d_hat == pytest.approx(KERNEL.moment(2) / (2 * KERNEL.tau_step), rel=1e-12)
    assert d_hat == pytest.approx(0.05**2 / (2 * 0.01), rel=1e-3)
    assert KERNEL.diffusion_2d_convention == pytest.approx(d_hat / 2)


def test_truncation_is_reported():
    with pytest.raises(TruncationError):
        step_moments(KERNEL, np.ones(201), 5)


def test_linear_covariate_drift():
    kernel, rows = drift_table([(0.3, linear)], 0.05, 0.01, 2.0, SPACING)
    for r in rows:
        assert r["c_hat"] == pytest.approx(2 * r["d_hat"] * 0.3, rel=0.02)


def test_quadratic_covariate_drift():
    _, rows = drift_table([(0.5, lambda x: (x - 1.0) ** 2 / 2)], 0.05, 0.01, 2.0, SPACING)
    big = [r for r in rows if abs(r["predicted"]) > 0.05]
    assert big and max(r["rel_dev"] for r in big) < 0.02


def test_mixed_covariates_add():
    covs = [(0.3, linear), (-0.4, np.sin)]
    _, rows = drift_table(covs, 0.05, 0.01, 2.0, SPACING)
    for r in rows:
        expected = 0.3 - 0.4 * np.cos(r["x"])
        assert r["ratio"] == pytest.approx(expected, rel=0.02, abs=1e-3)


def test_drift_error_converges_with_kernel_width():
    samples = [0.8, 1.0, 1.2]
    cov = [(1.0, lambda x: np.sin(2 * x))]
    errs = []
    for sigma in (0.08, 0.04, 0.02):
        _, rows = drift_table(cov, sigma, 0.01, 2.0, sigma / 8, samples)
        errs.append(max(abs(r["ratio"] - r["predicted"]) for r in rows))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.0)


def test_skew_vanishes_faster_than_variance():
    ratios = []
    for sigma in (0.08, 0.04, 0.02):
        kernel = lattice_kernel(sigma, sigma / 8, sigma**2)
        x = np.arange(801) * sigma / 8
        _, m2, m3 = step_moments(kernel, weight_field([(1.0, linear)], x), 400)
        ratios.append(abs(m3) / m2)
    assert ratios[0] > ratios[1] > ratios[2]


def test_master_equation_matches_diffusion_pde():
    out = master_vs_pde([(0.0, linear)], 0.05, 0.01, 2.0, SPACING,
                        lambda x: np.exp(-0.5 * ((x - 1.0) / 0.2) ** 2))
    assert out["l1"] <= 1e-2
    assert out["mass_master"] == pytest.approx(1.0, abs=1e-12)


def test_report_fields():
    rep = verify_fokker_planck([(0.3, linear)], 0.05, 0.01, 2.0, SPACING, t_final=0.2)
    assert rep["max_rel_dev"] < 0.02
    assert rep["d_hat_2d_convention"] == pytest.approx(rep["d_hat_1d"] / 2)
    assert {"x", "c_hat", "d_hat", "ratio", "predicted", "rel_dev"} <= set(rep["rows"][0])
