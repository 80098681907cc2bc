# %% [markdown]
# # When does a uniform population break up?
#
# Linearising about a constant density gives a growth rate per Fourier mode.
# Here the formula is checked against a seeded simulation. We then look at two
# consequences: conflict zones pattern at ever finer scales as perception
# sharpens, and a delayed response does not move the instability threshold.

# %% Setup
import math

import numpy as np

from cogmove import KernelSpec, build_grid, make_model
from cogmove.stability import (delay_instability_threshold, dispersion_aggregation, measure_growth_rate,
                               unstable_set)

# %% Aggregation: formula against simulation
grid = build_grid(2 * np.pi, 256, "periodic")
gamma = 2 * np.pi * math.exp(0.5)
model = make_model("aggregation", {"d": 1.0, "gamma": gamma}, KernelSpec("gaussian", 0.5))
for j in (1, 2, 3):
    predicted = dispersion_aggregation(1.0, gamma, 1 / (2 * np.pi), model.kernel, float(j))
    measured = measure_growth_rate(model, grid, j, t_end=1.0, dt=1e-4)
    print(f"mode {j}: predicted {predicted:+.4f}  measured {measured:+.4f}")

# %% Conflict zones: the unstable band widens as R shrinks
grid = build_grid(1.0, 256)
params = {"rho": [[0, 1], [1, 0]], "beta": 1.0, "mu": 0.1, "gamma": 5.0, "d": 0.01}
for R in (0.2, 0.1, 0.05, 0.025, 0.0125):
    modes = unstable_set(make_model("conflict_zones", params, KernelSpec("gaussian", R)), grid, 200)
    print(f"R={R:<7} highest unstable mode {max(modes)}")

# %% A discrete delay leaves the threshold unchanged
grid = build_grid(2 * np.pi, 64, "periodic")
for tau in (0.1, 1.0, 10.0):
    gamma_star, mode = delay_instability_threshold(1.0, 1.0, -0.5, tau, grid, 8, KernelSpec("gaussian", 0.3))
    print(f"tau={tau:<5} threshold gamma*={gamma_star:.10f} (critical mode {mode})")
