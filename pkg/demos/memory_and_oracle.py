# %% [markdown]
# # Memory kernels and the lattice oracle
#
# A population that follows a fading memory of its own past density can be
# simulated two ways: by convolving a stored history with the weak kernel
# e^{-t/tau}/tau, or by carrying the memory as an extra diffusing field. The
# two routes must agree. Separately, a lattice walker that weights its
# destinations by exp(beta a(x)) should drift at 2 d beta a'(x).

# %% Setup
import numpy as np

from cogmove import KernelSpec, StepConfig, TemporalKernelSpec, build_grid, make_model, run
from cogmove.models import augment_model
from cogmove.oracle import drift_table

# %% History convolution against the augmented system
grid = build_grid(1.0, 64)
u0 = {"u": 1 + 0.5 * np.cos(np.pi * grid.centers)}
direct = make_model("distributed", {"d": 0.1, "gamma": 0.08, "d3": 0.02, "method": "quadrature"},
                    KernelSpec(), TemporalKernelSpec("weak", 0.5))
cfg = StepConfig(t_end=2.0, snapshot_every=0.1, dt_max=0.0025)
a = run(direct, grid, u0, cfg)
b = run(augment_model(direct), grid, u0, cfg)
for t, sa, sb in list(zip(a.times, a.states, b.states))[::5]:
    print(f"t={t:4.1f}  max |u_direct - u_augmented| = {np.max(np.abs(sa[0] - sb[0])):.2e}")

# %% Drift of the weighted lattice walker
kernel, rows = drift_table([(0.5, lambda x: (x - 1.0) ** 2 / 2)], sigma=0.05, tau_step=0.01, length=2.0,
                           spacing=0.01, samples=[0.5, 0.8, 1.2, 1.5])
print(f"d_hat = {kernel.diffusion_1d:.4f}")
for r in rows:
    print(f"x={r['x']:.2f}  c_hat/(2 d_hat) = {r['ratio']:+.5f}  beta a'(x) = {r['predicted']:+.5f}")
