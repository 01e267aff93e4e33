"""
Orthogonal polynomial families of the relativistic equilibrium
==============================================================

Each angular degree ell carries a family of polynomials in the particle
energy E, orthonormal against the Juttner-weighted measure on [1, inf).
This walk-through builds a family, checks orthonormality with an
independent quadrature, and shows the non-relativistic limit.
"""

# %%
import numpy as np
from scipy import integrate

from relmoments import orthopoly
from relmoments.special_functions import bessel_k, g_ratio

zeta = 2.0  # inverse temperature m c^2 / (k T)

# %%
# The recurrence coefficients come from exact moments evaluated in
# extended precision, then rounded to doubles.
fam = orthopoly.family(1, zeta, 5)
print("ell = 1, zeta = 2")
print("  a_k:", np.array2string(np.asarray(fam.a), precision=6))
print("  b_k:", np.array2string(np.asarray(fam.b), precision=6))

# %%
# Orthonormality, checked against a plain adaptive integral.
def inner(i, j):
    f = lambda x: orthopoly.weight(1, zeta, x) * orthopoly.eval_poly(fam, i, x) * orthopoly.eval_poly(fam, j, x)
    return integrate.quad(f, 1, np.inf, limit=200)[0]

G = np.array([[inner(i, j) for j in range(4)] for i in range(4)])
print("max |Gram - I| =", np.abs(G - np.eye(4)).max())

# %%
# Families of neighbouring degree are linked by short cross recurrences.
lower = orthopoly.family(0, zeta, 6)
x = np.linspace(1.0, 6.0, 7)
for name, r in orthopoly.recurrence_residuals(fam, lower, 2, x).items():
    print(f"  {name:18s} residual {np.max(r):.1e}")

# %%
# The mean energy ratio G = K3/K2 interpolates between the cold (1 + 5/(2 zeta))
# and ultra-relativistic (4 / zeta) limits.
for z in (0.01, 1.0, 100.0):
    print(f"zeta = {z:6g}: G = {g_ratio(z):.6f}, K2 = {bessel_k(2, z):.4e}")
