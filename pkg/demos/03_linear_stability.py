"""
Linear stability about equilibrium
==================================

Plane-wave perturbations exp(i(omega t - k.x)) of a global equilibrium
never grow: every frequency has Im(omega) >= 0.  Exactly five modes,
the conserved density, momentum and energy, stay undamped as k -> 0.
"""

# %%
import numpy as np

from relmoments import analysis
from relmoments.frame_kinematics import FluidState

k = analysis.k_grid(1e-2, 1e2, 30, [(0, 0, 1), (1, 1, 0)])

# %%
for M in (2, 3, 4):
    for u in ((0, 0, 0), (0.4, 0.0, 0.3)):
        scan = analysis.stability_scan(M, FluidState(1.0, u, 1.0), k, tau=0.5)
        print(f"M = {M}, u = {u}: min Im(omega) = {scan.min_imag:+.2e}, "
              f"undamped modes at small k = {scan.zero_modes_at_rest}")

# %%
# The relaxation operator is negative semi-definite in the symmetric
# variables, which is the mechanism behind the damping above.
top, asym = analysis.relaxation_symmetric_form(3, FluidState(1.0, (0, 0, 0), 0.5), 1.0)
print(f"largest eigenvalue {top:.1e}, asymmetry {asym:.1e}")
