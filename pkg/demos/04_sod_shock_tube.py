"""
Relativistic Sod shock tube
===========================

A quasi-one-dimensional Riemann problem solved with the reduced moment
system.  Left: n = 1, theta = 0.6.  Right: n = 0.125, theta = 0.48.
The relaxation time is tied to the local mean free path via a Knudsen
number; smaller Knudsen numbers approach ideal relativistic hydrodynamics.
"""

# %%
import numpy as np

from relmoments import quasi1d

cfg = quasi1d.sod_config(M=3, cells=200, t_end=0.3, knudsen=0.01)
res = quasi1d.run(cfg)
W = res.final.W
print(f"{res.steps} steps, {len(quasi1d.admissibility_violations(cfg.M, W))} inadmissible cells")

# %%
# Columns of W: n, u, theta, Pi, then the longitudinal heat-flux and higher moments.
x = res.final.x
for i in range(0, cfg.cells, 20):
    print(f"x = {x[i]:.3f}  n = {W[i, 0]:.4f}  u = {W[i, 1]:+.4f}  theta = {W[i, 2]:.4f}  Pi = {W[i, 3]:+.2e}")

# %%
# Conservation of particle number, energy and momentum including boundary flux.
d0 = quasi1d.conserved_densities(cfg.M, quasi1d.initial_state(cfg).W)
d1 = quasi1d.conserved_densities(cfg.M, W)
dx = res.final.dx
for key, flux in (("N0", "N"), ("T00", "T0"), ("T03", "T3")):
    drift = d1[key].sum() * dx + res.boundary_flux[flux] - d0[key].sum() * dx
    print(f"{key}: drift {drift:+.2e}")
