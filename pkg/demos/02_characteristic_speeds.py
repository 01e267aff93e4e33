"""
Hyperbolicity and characteristic speeds
=======================================

The moment system B^a dW/dx^a = S has real characteristic speeds for every
admissible state.  Here we compute them for a moving, non-equilibrium state
and watch the largest speed approach the speed of light as M grows.
"""

# %%
import numpy as np

from relmoments import analysis, basis
from relmoments.frame_kinematics import FluidState

state = FluidState(1.0, (0.3, 0.0, 0.2), 0.8)
nhat = np.array([0.0, 0.0, 1.0])

# %%
# W holds (n, u, theta, Pi, heat flux, higher moments).  We perturb the
# non-equilibrium entries and certify hyperbolicity order by order.
rng = np.random.default_rng(0)
for M in range(1, 7):
    W = np.zeros(basis.n_moments(M))
    W[:5] = [state.n, *state.u, state.theta]
    W[5:] = 0.01 * rng.standard_normal(len(W) - 5)
    rep = analysis.certify_hyperbolic(M, state, W, nhat)
    print(f"M = {M}: {len(W):4d} moments, max |lambda| = {rep.max_abs:.6f}, "
          f"diagonalizable to {rep.diagonalizability_residual:.1e}")

# %%
# At M = 1 in the rest frame the fastest speed is the ideal-gas sound speed.
for theta in (0.01, 1.0, 100.0):
    s = FluidState(1.0, (0, 0, 0), theta)
    W = np.array([1.0, 0, 0, 0, theta])
    lam = analysis.certify_hyperbolic(1, s, W, nhat).eigenvalues.max()
    print(f"theta = {theta:6g}: lambda_max = {lam:.6f}, sound speed = {analysis.rhd_sound_speed(theta):.6f}")
