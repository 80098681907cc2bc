import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cogmove import ConfigurationError, build_grid, total_mass
from cogmove.grid import BoundaryCondition, divergence, face_gradient, laplacian_matrix


def test_periodic_grid_geometry():
    g = build_grid(1.0, 4, "periodic")
    assert g.dx == 0.25
    np.testing.assert_array_equal(g.centers, [0.125, 0.375, 0.625, 0.875])


def test_zero_flux_spacing():
    g = build_grid(math.pi, 128, "zero_flux")
    assert g.dx == math.pi / 128


@pytest.mark.parametrize("L, n", [(-1.0, 8), (0.0, 8), (1.0, 2), (1.0, 7.5)])
def test_invalid_grid(L, n):
    with pytest.raises(ConfigurationError):
        build_grid(L, n)


def test_total_mass_examples():
    assert total_mass(np.full(16, 3.0), build_grid(2.0, 16)) == pytest.approx(6.0, abs=1e-14)
    assert total_mass(np.array([1.0, 2.0, 3.0, 4.0]), build_grid(1.0, 4)) == 2.5


def test_normalized_density_has_unit_mass():
    g = build_grid(1.0, 100)
    u = np.exp(-((g.centers - 0.3) ** 2) / 0.01)
    u /= total_mass(u, g)
    assert abs(total_mass(u, g) - 1.0) <= 1e-12


def test_face_gradient_constant_and_linear():
    g = build_grid(1.0, 16, "zero_flux")
    assert np.all(face_gradient(np.full(16, 2.5), g)[1:-1] == 0.0)
    p = build_grid(1.0, 16, "periodic")
    grad = face_gradient(p.centers, p)
    np.testing.assert_allclose(grad[1:-1], 1.0, rtol=1e-12)
    # wrap faces see the jump from x_{n-1} back to x_0
    assert grad[0] == grad[-1]


def test_face_gradient_second_order():
    errors = []
    ns = [64, 128, 256, 512]
    for n in ns:
        g = build_grid(1.0, n, "periodic")
        faces = np.arange(n + 1) * g.dx
        grad = face_gradient(np.sin(2 * np.pi * g.centers), g)
        errors.append(np.max(np.abs(grad - 2 * np.pi * np.cos(2 * np.pi * faces))))
    slope = -np.polyfit(np.log(ns), np.log(errors), 1)[0]
    assert abs(slope - 2.0) <= 0.1


@settings(max_examples=50, deadline=None)
@given(arrays(float, 12, elements=st.floats(-10, 10)), arrays(float, 12, elements=st.floats(-10, 10)),
       st.floats(-3, 3), st.floats(-3, 3),
       st.sampled_from(["zero_flux", "periodic", "dirichlet", "neumann"]))
def test_face_gradient_is_linear(f, h, a, b, bc):
    g = build_grid(1.0, 12, bc)
    lhs = face_gradient(a * f + b * h, g)
    rhs = a * face_gradient(f, g) + b * face_gradient(h, g)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(arrays(float, 20, elements=st.floats(0, 5)), arrays(float, 21, elements=st.floats(-5, 5)))
def test_conservative_update_preserves_mass(u, flux):
    g = build_grid(1.0, 20, "zero_flux")
    flux[0] = flux[-1] = 0.0
    new = u - 1e-3 * divergence(flux, g)
    scale = max(total_mass(np.abs(u), g), 1e-300)
    assert abs(total_mass(new, g) - total_mass(u, g)) <= 1e-12 * max(scale, 1.0)


def test_laplacian_annihilates_constants_on_conserving_grids():
    for bc in ("zero_flux", "neumann", "periodic"):
        g = build_grid(1.0, 10, bc)
        assert np.max(np.abs(laplacian_matrix(g) @ np.ones(10))) < 1e-10


def test_robin_takes_a_pair_of_coefficients():
    bc = BoundaryCondition.robin(1.0, (0.5, 2.0))
    g = build_grid(1.0, 8, bc)
    left, right = g.bc.ghost_ratios(g.dx)
    assert left != right
