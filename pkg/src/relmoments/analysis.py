"""Numerical certification of hyperbolicity, linear stability and Lorentz covariance."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import basis, quasi1d
from .frame_kinematics import FluidState, InadmissibleError
from .moment_assembly import FamilySet, build_D, build_M, source_jacobian
from .special_functions import g_ratio, g_ratio_derivative

__all__ = [
    "HyperbolicityReport",
    "StabilityScan",
    "certify_hyperbolic",
    "definiteness_margins",
    "stability_scan",
    "k_grid",
    "relaxation_symmetric_form",
    "covariance_residual",
    "rhd_sound_speed",
]


@dataclass(frozen=True, eq=False)
class HyperbolicityReport:
    direction: np.ndarray
    eigenvalues: np.ndarray
    max_abs: float
    diagonalizability_residual: float
    reconstruction_residual: float
    min_gap: float

    @property
    def strictly_hyperbolic(self) -> bool:
        return self.min_gap > 1e-8

    @property
    def certified(self) -> bool:
        return self.max_abs < 1.0 and self.diagonalizability_residual < 1e-10


def _inv_sqrt(M0):
    w, V = linalg.eigh(M0)
    if not w.min() > 0:
        raise InadmissibleError("M^0 is not positive definite")
    return (V / np.sqrt(w)) @ V.T


def certify_hyperbolic(M: int, state: FluidState, W, nhat, fs: FamilySet | None = None) -> HyperbolicityReport:
    """Eigen-structure of B(n) = (B^0)^-1 sum_i n_i B^i through its symmetric form.

    B(n) = D^-1 (M^0)^-1 (sum_i n_i M^i) D is similar to the symmetric matrix
    S = (M^0)^-1/2 (sum_i n_i M^i) (M^0)^-1/2, whose eigenvalues are real and whose
    eigenvectors V are orthonormal; D^-1 (M^0)^-1/2 V then diagonalizes B(n).
    """
    nhat = np.asarray(nhat, dtype=float)
    if nhat.shape != (3,) or abs(np.linalg.norm(nhat) - 1.0) > 1e-12:
        raise ValueError("direction must be a unit 3-vector")
    fs = fs or FamilySet.exact(M, state.zeta)
    Ma = build_M(M, state, fs)
    D = build_D(M, state, W, fs)
    R = _inv_sqrt(Ma[0])
    Mn = np.einsum("i,iab->ab", nhat, Ma[1:])
    S = R @ Mn @ R
    S = 0.5 * (S + S.T)
    lam, V = linalg.eigh(S)
    orth = float(np.abs(V.T @ V - np.eye(len(lam))).max())
    X = np.linalg.solve(D, R @ V)
    B = np.linalg.solve(D, np.linalg.solve(Ma[0], Mn @ D))
    recon = float(np.abs(B @ X - X * lam).max() / max(1.0, np.abs(B).max()))
    gaps = np.diff(lam)
    return HyperbolicityReport(nhat, lam, float(np.abs(lam).max()), orth, recon, float(gaps.min()) if len(gaps) else np.inf)


def definiteness_margins(M: int, state: FluidState, nhat, lam: float = 1.0 + 1e-6, fs: FamilySet | None = None):
    """(min eig of lam M^0 - M_n, max eig of -lam M^0 - M_n); the first must be > 0, the second < 0."""
    fs = fs or FamilySet.exact(M, state.zeta)
    Ma = build_M(M, state, fs)
    Mn = np.einsum("i,iab->ab", np.asarray(nhat, dtype=float), Ma[1:])
    return float(linalg.eigvalsh(lam * Ma[0] - Mn).min()), float(linalg.eigvalsh(-lam * Ma[0] - Mn).max())


@dataclass(frozen=True, eq=False)
class StabilityScan:
    k: np.ndarray
    omegas: np.ndarray
    min_imag: float
    zero_modes_at_rest: int


def k_grid(k_min: float = 1e-2, k_max: float = 1e2, n: int = 40, directions=None) -> np.ndarray:
    """Wave vectors |k| in logspace(k_min, k_max, n) along each direction (rows normalized)."""
    if directions is None:
        directions = [(1, 0, 0), (0, 0, 1), (1, 1, 1)]
    dirs = np.asarray(directions, dtype=float)
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    mags = np.logspace(np.log10(k_min), np.log10(k_max), n)
    return (mags[None, :, None] * dirs[:, None, :]).reshape(-1, 3)


def stability_scan(M: int, state: FluidState, k_vectors, tau: float, fs: FamilySet | None = None) -> StabilityScan:
    """Dispersion relation of the system linearized at the equilibrium of ``state``.

    With Q = -(1/tau) U_a M^a D~^W D^-1, plane waves exp(i(omega t - k.x)) of the
    coefficients f = D W solve det(i omega M^0 - i k_j M^j - Q) = 0, so
    omega = eig((M^0)^-1 (k_j M^j - i Q)).  The same omega solve the pencil in W
    with B^a = M^a D and Q D in place of Q.
    """
    if not tau > 0:
        raise ValueError("relaxation time must be positive")
    fs = fs or FamilySet.exact(M, state.zeta)
    Ma = build_M(M, state, fs)
    Q = source_jacobian(M, state, tau, fs)
    k = np.atleast_2d(np.asarray(k_vectors, dtype=float))
    M0inv = np.linalg.inv(Ma[0])
    omegas = np.array([np.linalg.eigvals(M0inv @ (np.einsum("j,jab->ab", kv, Ma[1:]) - 1j * Q)) for kv in k])
    w0 = np.linalg.eigvals(M0inv @ (-1j * Q))
    zero = int(np.sum(np.abs(w0) < 1e-9 / tau))
    return StabilityScan(k, omegas, float(omegas.imag.min()), zero)


def relaxation_symmetric_form(M: int, state: FluidState, tau: float, fs: FamilySet | None = None):
    """(max eigenvalue, asymmetry) of (M^0)^-1/2 Q (M^0)^-1/2 at equilibrium."""
    fs = fs or FamilySet.exact(M, state.zeta)
    Ma = build_M(M, state, fs)
    R = _inv_sqrt(Ma[0])
    Qh = R @ source_jacobian(M, state, tau, fs) @ R
    asym = float(np.abs(Qh - Qh.T).max())
    return float(linalg.eigvalsh(0.5 * (Qh + Qh.T)).max()), asym


def _boost_reduced(Wr, v):
    out = np.array(Wr, dtype=float, copy=True)
    out[..., 1] = (out[..., 1] - v) / (1.0 - out[..., 1] * v)
    return out


def covariance_residual(M: int, v: float, Wr, dW_dt, dW_dx, tau: float = 1.0) -> float:
    """Two-sided check that the quasi-1D system keeps its form under an x^3 boost.

    The fields W(t, x) are described at one event by W, dW/dt, dW/dx.  In the
    boosted frame (t' = g (t - v x), x' = g (x - v t)) the velocity transforms
    relativistically and every other entry is a scalar, so
    dW'/dt' = J (g dW/dt + g v dW/dx), dW'/dx' = J (g v dW/dt + g dW/dx),
    with J the Jacobian of the velocity map.  Both sides of
    B^0 dW/dt + B^3 dW/dx - S are evaluated and their difference returned,
    relative to the size of the terms.
    """
    if not abs(v) < 1:
        raise ValueError("boost speed must satisfy |v| < 1")
    Wr = np.asarray(Wr, dtype=float)
    dW_dt = np.asarray(dW_dt, dtype=float)
    dW_dx = np.asarray(dW_dx, dtype=float)
    g = 1.0 / np.sqrt(1.0 - v * v)
    Wp = _boost_reduced(Wr, v)
    J = np.eye(len(Wr))
    J[1, 1] = (1.0 - v * v) / (1.0 - Wr[1] * v) ** 2
    dt_p = J @ (g * dW_dt + g * v * dW_dx)
    dx_p = J @ (g * v * dW_dt + g * dW_dx)
    both = quasi1d.reduce(M, np.stack([Wr, Wp]), tau, fs=FamilySet.exact(max(M, 2), 1.0 / Wr[2]).tile(2))
    lhs = both.B0[0] @ dW_dt + both.B3[0] @ dW_dx - both.source(Wr[None])[0]
    rhs = both.B0[1] @ dt_p + both.B3[1] @ dx_p - both.source(Wp[None])[0]
    scale = max(np.abs(both.B0[0] @ dW_dt).max(), np.abs(both.B3[0] @ dW_dx).max(), 1e-300)
    return float(np.abs(lhs - rhs).max() / scale)


def rhd_sound_speed(theta: float) -> float:
    """Sound speed of the Synge gas: c_s^2 = theta (c_v + 1) / (G c_v), c_v = de/dtheta per particle."""
    z = 1.0 / theta
    cv = -(z**2) * g_ratio_derivative(z) - 1.0
    return float(np.sqrt(theta * (cv + 1.0) / (g_ratio(z) * cv)))


def n_zero_modes_expected() -> int:
    return 5


def random_admissible_state(rng, M: int, amplitude: float = 0.05, speed: float = 0.8):
    """A random (FluidState, W) with bulk pressure above -n theta and small higher moments."""
    n = float(rng.uniform(0.2, 3.0))
    theta = float(np.exp(rng.uniform(np.log(0.05), np.log(5.0))))
    d = rng.standard_normal(3)
    u = tuple(speed * rng.uniform() ** (1 / 3) * d / np.linalg.norm(d))
    st = FluidState(n, u, theta)
    W = np.zeros(basis.n_moments(M))
    W[:5] = [n, *u, theta]
    if M >= 2:
        W[5:] = amplitude * n * rng.standard_normal(len(W) - 5)
        W[5] = max(W[5], -0.5 * n * theta)
    return st, W
