"""Minkowski kinematics in units m = c = 1, metric diag(1, -1, -1, -1).

Covers the fluid 4-velocity, the spatial tetrad orthogonal to it, the
momentum <-> (E, y, phi) change of variables, boosts along x^3, and recovery
of (n, u, theta, Pi) from the particle 4-flow N and energy-momentum tensor T
in the Landau-Lifshitz frame.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .special_functions import g_ratio, theta_from_energy_ratio

__all__ = [
    "METRIC",
    "InadmissibleError",
    "FluidState",
    "tetrad",
    "tetrad_derivative",
    "p_to_internal",
    "internal_to_p",
    "boost_matrix",
    "boost_1d",
    "equilibrium_moments",
    "recover_state",
]

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])


class InadmissibleError(ValueError):
    """Raised when a state or a set of moments violates admissibility."""


@dataclass(frozen=True)
class FluidState:
    n: float
    u: tuple
    theta: float

    def __post_init__(self):
        u = tuple(float(v) for v in np.broadcast_to(np.asarray(self.u, dtype=float), (3,)))
        object.__setattr__(self, "u", u)
        if not (np.isfinite(self.n) and self.n > 0):
            raise InadmissibleError("number density must be positive")
        if not (np.isfinite(self.theta) and self.theta > 0):
            raise InadmissibleError("temperature must be positive")
        if not np.sum(np.square(u)) < 1.0:
            raise InadmissibleError("speed must be below the speed of light")

    @property
    def zeta(self) -> float:
        return 1.0 / self.theta

    @property
    def velocity(self) -> np.ndarray:
        return np.array(self.u)

    @property
    def gamma(self) -> float:
        return 1.0 / np.sqrt(1.0 - np.dot(self.u, self.u))

    @property
    def U(self) -> np.ndarray:
        g = self.gamma
        return np.concatenate([[g], g * self.velocity])


def _four_velocity(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    s = np.dot(u, u)
    if not s < 1.0:
        raise InadmissibleError("speed must be below the speed of light")
    g = 1.0 / np.sqrt(1.0 - s)
    return np.concatenate([[g], g * u])


def tetrad(u) -> np.ndarray:
    """Spatial triad n[c, alpha] with n_c^0 = U^c, n_c^j = delta_cj + U^c U^j / (U^0 + 1)."""
    U = _four_velocity(u)
    Us = U[1:]
    n = np.empty((3, 4))
    n[:, 0] = Us
    n[:, 1:] = np.eye(3) + np.outer(Us, Us) / (U[0] + 1.0)
    return n


def tetrad_derivative(u):
    """(dU[i, alpha], dn[i, c, alpha]): derivatives of U and the triad w.r.t. u_i."""
    U = _four_velocity(u)
    g = U[0]
    u = np.asarray(u, dtype=float)
    dU = np.empty((3, 4))
    # dU^alpha/du_i = g^2 u_i U^alpha + g delta_{i alpha}
    dU[:] = (g * g) * u[:, None] * U[None, :]
    dU[:, 1:] += g * np.eye(3)
    Us = U[1:]
    dn = np.empty((3, 3, 4))
    for i in range(3):
        dUs = dU[i, 1:]
        dn[i, :, 0] = dUs
        dn[i, :, 1:] = (np.outer(dUs, Us) + np.outer(Us, dUs)) / (g + 1.0) - np.outer(Us, Us) * dU[i, 0] / (g + 1.0) ** 2
    return dU, dn


def p_to_internal(p3, u):
    """Momentum (..., 3) -> (E, y, phi) relative to the fluid velocity u.

    (sqrt(1-y^2) cos phi, sqrt(1-y^2) sin phi, y) = -(E^2 - 1)^(-1/2) n_c^alpha p_alpha;
    in the rest frame this is the direction of p.  At E = 1 we return y = 1, phi = 0.
    """
    p3 = np.asarray(p3, dtype=float)
    U = _four_velocity(u)
    n = tetrad(u)
    p0 = np.sqrt(1.0 + np.sum(p3 * p3, axis=-1))
    E = U[0] * p0 - p3 @ U[1:]
    v = -(n[:, 0][None, :] * p0[..., None] if np.ndim(p0) else n[:, 0] * p0) + p3 @ n[:, 1:].T
    rho = np.sqrt(np.sum(v * v, axis=-1))
    safe = rho > 0
    with np.errstate(invalid="ignore", divide="ignore"):
        y = np.where(safe, v[..., 2] / np.where(safe, rho, 1.0), 1.0)
    y = np.clip(y, -1.0, 1.0)
    phi = np.mod(np.arctan2(v[..., 1], v[..., 0]), 2 * np.pi)
    phi = np.where(safe, phi, 0.0)
    return E, y, phi


def internal_to_p(E, y, phi, u) -> np.ndarray:
    """Inverse of ``p_to_internal``: p^alpha = U^alpha E + sqrt(E^2-1) l^alpha, spatial part returned."""
    E, y, phi = np.broadcast_arrays(*(np.asarray(t, dtype=float) for t in (E, y, phi)))
    U = _four_velocity(u)
    n = tetrad(u)
    s = np.sqrt(np.clip(1.0 - y * y, 0.0, None))
    l = np.stack([s * np.cos(phi), s * np.sin(phi), y], axis=-1)
    rho = np.sqrt(np.clip(E * E - 1.0, 0.0, None))
    p4 = U[None, :] * E.reshape(-1, 1) + rho.reshape(-1, 1) * (l.reshape(-1, 3) @ n)
    return p4[:, 1:].reshape(E.shape + (3,))


def boost_matrix(v: float) -> np.ndarray:
    """Lorentz boost along x^3: t' = gamma (t - v x3), x3' = gamma (x3 - v t)."""
    if not abs(v) < 1.0:
        raise ValueError("boost speed must satisfy |v| < 1")
    g = 1.0 / np.sqrt(1.0 - v * v)
    L = np.eye(4)
    L[0, 0] = L[3, 3] = g
    L[0, 3] = L[3, 0] = -g * v
    return L


def boost_1d(v: float, vec):
    """Apply the x^3 boost to contravariant 4-vectors (..., 4)."""
    return np.asarray(vec, dtype=float) @ boost_matrix(v).T


def equilibrium_moments(n, u, theta, Pi=0.0):
    """N^alpha and T^{alpha beta} for a Juttner-like state with bulk pressure Pi."""
    U = _four_velocity(u)
    eps = n * (g_ratio(1.0 / theta) - theta)
    P = n * theta + Pi
    N = n * U
    T = (eps + P) * np.outer(U, U) - P * METRIC
    return N, T


def recover_state(N, T, timelike_tol: float = 1e-12):
    """Landau-frame recovery: returns (FluidState, epsilon, Pi).

    Solves T^{ab} U_b = eps U^a via the eigenvectors of T g, keeps the unique
    timelike one, then n = U_a N^a, theta from G(1/theta) - theta = eps/n,
    and Pi = (eps - T^a_a)/3 - n theta.
    """
    N = np.asarray(N, dtype=float)
    T = np.asarray(T, dtype=float)
    if not np.all(np.isfinite(T)) or not np.all(np.isfinite(N)):
        raise InadmissibleError("moments must be finite")
    Ts = 0.5 * (T + T.T)
    try:
        np.linalg.cholesky(Ts)
    except np.linalg.LinAlgError:
        raise InadmissibleError("energy-momentum tensor is not positive definite") from None
    w, V = np.linalg.eig(Ts @ METRIC)
    best = None
    for k in range(4):
        if abs(w[k].imag) > 1e-10 * max(1.0, abs(w[k].real)):
            continue
        v = V[:, k].real
        norm = v @ METRIC @ v
        if norm > timelike_tol * (v @ v):
            if best is not None:
                raise InadmissibleError("more than one timelike eigenvector")
            best = (w[k].real, v / np.sqrt(norm))
    if best is None:
        raise InadmissibleError("no timelike eigenvector (Landau frame undefined)")
    eps, U = best
    if U[0] < 0:
        U = -U
    # renormalize so that U^0 = sqrt(1 + |U|^2) exactly
    U[0] = np.sqrt(1.0 + U[1:] @ U[1:])
    n = U @ METRIC @ N
    if not n > 0:
        raise InadmissibleError("number density is not positive")
    if not eps > n:
        raise InadmissibleError("energy per particle must exceed the rest mass")
    try:
        theta = theta_from_energy_ratio(eps / n)
    except ArithmeticError as exc:
        raise InadmissibleError(str(exc)) from None
    trace = np.einsum("ab,ab->", T, METRIC)
    Pi = (eps - trace) / 3.0 - n * theta
    state = FluidState(float(n), tuple(U[1:] / U[0]), float(theta))
    return state, float(eps), float(Pi)
