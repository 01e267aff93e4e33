"""Weighted polynomial basis P~_{k,m}^(l) = g0 P_k^(l)(E; zeta) (E^2-1)^(l/2) Y_{l,m}(y, phi).

g0 = zeta exp(-zeta E) / (4 pi K_2(zeta)).  The inner product is
<f, h> = int f h / g0 d^3p / p^0, and the basis is orthonormal under it.

Storage order is degree-major: groups of equal l + k ascending, inside a group
l ascending, then m ascending.  Block order (l, then m, then k) is used for
assembling the recurrence matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import linalg, special

from . import harmonics, orthopoly
from .frame_kinematics import FluidState, internal_to_p, p_to_internal

__all__ = [
    "n_moments",
    "degree_order",
    "block_order",
    "permutation",
    "index_map",
    "QuadratureRule",
    "quadrature_rule",
    "reduced_basis",
    "eval_basis",
    "g0",
    "gram",
    "project",
    "project_reduced",
    "equilibrium_coefficients",
    "moments_from_coefficients",
]


def n_moments(M: int) -> int:
    """Number of basis functions with l + k <= M: sum_l (2l+1)(M+1-l)."""
    return sum((2 * ell + 1) * (M + 1 - ell) for ell in range(M + 1))


@lru_cache(maxsize=None)
def degree_order(M: int) -> tuple:
    """Tuple of (l, m, k) in degree-major order."""
    out = []
    for d in range(M + 1):
        for ell in range(d + 1):
            for m in range(-ell, ell + 1):
                out.append((ell, m, d - ell))
    return tuple(out)


@lru_cache(maxsize=None)
def block_order(M: int) -> tuple:
    out = []
    for ell in range(M + 1):
        for m in range(-ell, ell + 1):
            for k in range(M - ell + 1):
                out.append((ell, m, k))
    return tuple(out)


@lru_cache(maxsize=None)
def index_map(M: int) -> dict:
    """(l, m, k) -> position in degree-major order."""
    return {idx: i for i, idx in enumerate(degree_order(M))}


def permutation(M: int) -> np.ndarray:
    """Permutation matrix P with P @ (block-ordered vector) = degree-ordered vector."""
    pos = index_map(M)
    N = n_moments(M)
    P = np.zeros((N, N))
    for j, idx in enumerate(block_order(M)):
        P[pos[idx], j] = 1.0
    return P


def g0(E, zeta: float):
    """Normalized equilibrium weight exp(-zeta E) zeta / (4 pi K_2(zeta))."""
    E = np.asarray(E, dtype=float)
    return zeta * np.exp(-zeta * (E - 1.0)) / (4.0 * np.pi * special.kve(2, zeta))


def reduced_basis(M: int, zeta: float, E, y, phi, K_extra: int = 0) -> np.ndarray:
    """phi_i = P~_i / g0 at the given internal coordinates, rows in degree-major order.

    ``K_extra`` enlarges the basis to order M + K_extra (used for derivatives).
    """
    Mt = M + K_extra
    E = np.asarray(E, dtype=float)
    y = np.asarray(y, dtype=float)
    phi = np.asarray(phi, dtype=float)
    Y = harmonics.all_Y(Mt, y, phi)
    rho = np.sqrt(np.clip(E * E - 1.0, 0.0, None))
    order = degree_order(Mt)
    out = np.empty((len(order),) + np.broadcast(E, y, phi).shape)
    polys = {}
    for ell in range(Mt + 1):
        fam = orthopoly.family(ell, zeta, max(Mt - ell, 1))
        polys[ell] = orthopoly.eval_all(fam, Mt - ell, E) * rho**ell
    for i, (ell, m, k) in enumerate(order):
        out[i] = polys[ell][k] * Y[ell, m + Mt]
    return out


def eval_basis(M: int, state: FluidState, p3) -> np.ndarray:
    """All basis functions at momenta p3 (..., 3); shape (N_M, ...)."""
    E, y, phi = p_to_internal(p3, state.velocity)
    return g0(E, state.zeta) * reduced_basis(M, state.zeta, E, y, phi)


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Tensor rule on (E, y, phi) for integrals of g0 times polynomials.

    sum_i weights_i * q(E_i, y_i, phi_i) = int g0 q d^3p/p^0 exactly when q is a
    polynomial in p of modest degree.
    """

    state: FluidState
    E: np.ndarray
    y: np.ndarray
    phi: np.ndarray
    weights: np.ndarray

    @property
    def momenta(self) -> np.ndarray:
        return internal_to_p(self.E, self.y, self.phi, self.state.velocity)

    @property
    def p4(self) -> np.ndarray:
        p = self.momenta
        p0 = np.sqrt(1.0 + np.sum(p * p, axis=-1))
        return np.concatenate([p0[:, None], p], axis=1)


def quadrature_rule(state: FluidState, degree: int) -> QuadratureRule:
    """Exact for polynomial integrands of total degree <= degree (times g0).

    Gauss nodes of the l = 0 family in E, Gauss-Legendre in y, uniform in phi.
    """
    nE = degree // 2 + 2
    ny = degree // 2 + 2
    nphi = degree + 2
    fam = orthopoly.family(0, state.zeta, nE + 1)
    J = fam.jacobi(nE)
    xE, V = linalg.eigh(J)
    wE = fam.mu0 * V[0] ** 2
    xy, wy = np.polynomial.legendre.leggauss(ny)
    xp = 2 * np.pi * np.arange(nphi) / nphi
    wp = np.full(nphi, 2 * np.pi / nphi)
    E, y, phi = np.meshgrid(xE, xy, xp, indexing="ij")
    w = (wE[:, None, None] * wy[None, :, None] * wp[None, None, :]) / (4.0 * np.pi)
    return QuadratureRule(state, E.ravel(), y.ravel(), phi.ravel(), w.ravel())


def gram(M: int, state: FluidState, weight_fn=None, rule: QuadratureRule | None = None) -> np.ndarray:
    """<w P~_i, P~_j> for the degree-major basis; ``weight_fn`` maps p4 (n, 4) -> (n,)."""
    rule = rule or quadrature_rule(state, 2 * M + 4)
    phi_b = reduced_basis(M, state.zeta, rule.E, rule.y, rule.phi)
    w = rule.weights if weight_fn is None else rule.weights * weight_fn(rule.p4)
    return (phi_b * w) @ phi_b.T


def project_reduced(M: int, state: FluidState, values, rule: QuadratureRule) -> np.ndarray:
    """Coefficients of a function given by F/g0 at the nodes of ``rule``."""
    phi_b = reduced_basis(M, state.zeta, rule.E, rule.y, rule.phi)
    return phi_b @ (rule.weights * values)


def project(fn, state: FluidState, M: int, degree: int | None = None) -> np.ndarray:
    """Coefficients f_i = <fn, P~_i> for a callable fn(p3) -> values.

    Exact when fn / g0 is a polynomial of degree <= ``degree`` - M.
    """
    rule = quadrature_rule(state, degree if degree is not None else 2 * M + 4)
    vals = fn(rule.momenta) / g0(rule.E, state.zeta)
    return project_reduced(M, state, vals, rule)


def equilibrium_coefficients(state: FluidState, M: int) -> np.ndarray:
    """Coefficients of n g0: only the first entry, n / c_0^(0) = n sqrt(G - 4/zeta), is nonzero."""
    f = np.zeros(n_moments(M))
    f[0] = state.n * np.sqrt(orthopoly.family(0, state.zeta, 2).mu0)
    return f


def moments_from_coefficients(f, state: FluidState, M: int):
    """N^alpha and T^{alpha beta} of sum_i f_i P~_i (exact quadrature)."""
    rule = quadrature_rule(state, M + 4)
    phi_b = reduced_basis(M, state.zeta, rule.E, rule.y, rule.phi)
    F = np.asarray(f) @ phi_b
    p4 = rule.p4
    wF = rule.weights * F
    N = p4.T @ wF
    T = (p4 * wF[:, None]).T @ p4
    return N, T
