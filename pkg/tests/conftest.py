import numpy as np
import pytest

from cogmove import KernelSpec, TemporalKernelSpec, build_grid, make_model


def bump(center, width):
    def m(x, t=0.0):
        return 1.0 + np.exp(-((x - center) ** 2) / (2.0 * width**2))
    return m


def conserving_models():
    """One configuration per family whose density fields have no reaction."""
    gauss = KernelSpec("gaussian", 0.05)
    m = bump(0.4, 0.1)
    return {
        "prototype": make_model("prototype", {"d": 0.01, "potential": lambda x, t: 0.02 * np.sin(6 * x)}),
        "perception_foraging": make_model("perception_foraging", {"d": 0.01, "gamma": 0.02, "m": m}, gauss),
        "static_map": make_model("static_map", {"variant": "den_site", "d": 0.01, "gamma": 0.02,
                                                "x0": 0.3}, gauss),
        "aggregation": make_model("aggregation", {"d": 0.01, "gamma": 0.005}, gauss),
        "multi_aggregation": make_model("multi_aggregation",
                                        {"d": 0.01, "gamma": [[0.005, -0.002], [0.003, 0.004]]}, gauss),
        "marks": make_model("marks", {"alpha": [[1.0, 0.0], [0.0, 1.0]], "gamma": 0.01, "d": 0.01}, gauss),
        "conflict_zones": make_model("conflict_zones", {"rho": [[0, 1], [1, 0]], "beta": 1.0, "mu": 0.1,
                                                        "gamma": 0.01, "d": 0.01}, gauss),
        "discrete_delay": make_model("discrete_delay", {"variant": "scalar", "d": 0.01, "gamma": 0.005,
                                                        "r": 0.0}, gauss,
                                     TemporalKernelSpec("discrete", 0.05)),
        "distributed": make_model("distributed", {"d": 0.01, "gamma": 0.005, "method": "augmented"},
                                  KernelSpec(), TemporalKernelSpec("weak", 0.1)),
        "short_long": make_model("short_long", {"d": 0.01, "m": m, "c1": -0.01, "c2": 0.01}, gauss),
        "starvation_den_site": make_model("starvation_den_site", {"d": 0.01, "gamma": 0.02,
                                                                  "gamma_plus": 0.05, "x0": 0.5, "m": m,
                                                                  "response": "smooth", "sharpness": 4.0},
                                          gauss),
    }


@pytest.fixture
def small_grid():
    return build_grid(1.0, 64, "zero_flux")
