"""Quasi-1D reduction (u_1 = u_2 = 0, only m = 0 modes) and a finite-volume solver.

The reduced state per cell is W' = (n, u, theta, Pi, f~_0, then the m = 0
coefficients of degree >= 2 in degree-major order); its length is
(M+1)(M+2)/2.  All assembly is vectorized over cells.

The scheme is first-order: a central difference of the quasilinear form with
Lax-Friedrichs dissipation scaled by the local spectral radius, followed by
exact integration of the source linearized at frozen coefficients.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import linalg

from . import basis
from .frame_kinematics import InadmissibleError
from .moment_assembly import (
    FamilySet,
    boost_generators,
    dw_batch,
    dw_theta_batch,
    recurrence_operators,
    temperature_generator,
)

__all__ = [
    "n_reduced",
    "reduced_indices",
    "full_positions",
    "embed",
    "ReducedSystem",
    "reduce",
    "conserved_densities",
    "Quasi1DState",
    "SolverConfig",
    "PositivityError",
    "CFLError",
    "step",
    "run",
    "sod_config",
    "load_config",
    "write_snapshot",
]


class PositivityError(InadmissibleError):
    """A cell left the admissible set."""


class CFLError(ValueError):
    """The time step violates the CFL bound."""


def n_reduced(M: int) -> int:
    return (M + 1) * (M + 2) // 2


@lru_cache(maxsize=None)
def reduced_indices(M: int) -> tuple:
    """(l, 0, k) basis labels kept by the reduction, degree-major."""
    return tuple(idx for idx in basis.degree_order(M) if idx[1] == 0)


@lru_cache(maxsize=None)
def full_positions(M: int) -> tuple:
    """Positions in the full state vector of the reduced state entries.

    They coincide with the positions of the retained basis functions, except
    that u_3 sits where the (l=1, m=0, k=0) coefficient would and the first
    five slots are (n, u_1, u_2, u_3, theta).
    """
    if M == 1:
        return (0, 3, 4)
    pos = basis.index_map(M)
    head = (0, 3, 4, 5, 7)
    tail = tuple(pos[idx] for idx in reduced_indices(M) if pos[idx] >= 9)
    return head + tail


@lru_cache(maxsize=None)
def _basis_positions(M: int) -> np.ndarray:
    pos = basis.index_map(M)
    return np.array([pos[idx] for idx in reduced_indices(M)])


def embed(M: int, Wr) -> np.ndarray:
    """Full state vector(s) with zero transverse velocity and m != 0 modes."""
    Wr = np.asarray(Wr, dtype=float)
    out = np.zeros(Wr.shape[:-1] + (basis.n_moments(M),))
    out[..., list(full_positions(M))] = Wr
    return out


@dataclass(frozen=True, eq=False)
class ReducedSystem:
    """Reduced matrices per cell: arrays of shape (cells, N', N') or (cells, N')."""

    M0: np.ndarray
    M3: np.ndarray
    D: np.ndarray
    B0: np.ndarray
    B3: np.ndarray
    R: np.ndarray
    A0: np.ndarray
    A3: np.ndarray
    fs: FamilySet | None = None

    def source(self, Wr) -> np.ndarray:
        return np.einsum("cij,cj->ci", self.R, Wr)

    def speeds(self) -> np.ndarray:
        """Eigenvalues of M0^-1 M3 per cell via the symmetric form (cells, N')."""
        L = np.linalg.cholesky(self.M0)
        Li = np.linalg.inv(L)
        S = Li @ self.M3 @ np.swapaxes(Li, -1, -2)
        return np.linalg.eigvalsh(0.5 * (S + np.swapaxes(S, -1, -2)))


def _check_reduced(M, Wr):
    Wr = np.atleast_2d(np.asarray(Wr, dtype=float))
    if Wr.shape[-1] != n_reduced(M):
        raise ValueError(f"reduced state must have length {n_reduced(M)}")
    return Wr


def admissibility_violations(M: int, Wr) -> np.ndarray:
    """Indices of cells violating n > 0, theta > 0, |u| < 1, Pi > -n theta."""
    Wr = np.atleast_2d(Wr)
    bad = ~np.all(np.isfinite(Wr), axis=1)
    bad |= ~(Wr[:, 0] > 0) | ~(Wr[:, 2] > 0) | ~(np.abs(Wr[:, 1]) < 1)
    if M >= 2:
        bad |= ~(Wr[:, 3] > -Wr[:, 0] * Wr[:, 2])
    return np.nonzero(bad)[0]


def reduce(M: int, Wr, tau=1.0, fs: FamilySet | None = None, n_nodes: int = 120) -> ReducedSystem:
    """Assemble the reduced system for a batch of reduced states (cells, N').

    ``tau`` may be a scalar or one value per cell.  Coefficients come from
    the vectorized quadrature route unless ``fs`` is given.
    """
    Wr = _check_reduced(M, Wr)
    bad = admissibility_violations(M, Wr)
    if len(bad):
        raise InadmissibleError(f"inadmissible reduced state in cell {int(bad[0])}")
    tau = np.broadcast_to(np.asarray(tau, dtype=float), (len(Wr),))
    if not np.all(tau > 0):
        raise ValueError("relaxation time must be positive")
    u, theta = Wr[:, 1], Wr[:, 2]
    fs = fs or family_set(M, theta, n_nodes)
    idx = reduced_indices(M)
    A0, A = recurrence_operators(M, fs, idx)
    A3 = A[2]
    g = 1.0 / np.sqrt(1.0 - u * u)
    U0, U3 = g, g * u
    M0 = U0[:, None, None] * A0 + U3[:, None, None] * A3
    M3 = U3[:, None, None] * A0 + U0[:, None, None] * A3
    D, DW = _reduced_D(M, fs, Wr)
    DWt = DW.copy()
    DWt[:, 0, 0] = 0.0
    R = -(A0 @ DWt) / tau[:, None, None]
    return ReducedSystem(M0, M3, D, M0 @ D, M3 @ D, R, A0, A3, fs)


def family_set(M: int, theta, n_nodes: int = 120) -> FamilySet:
    """Per-cell coefficients deep enough for the order-M system and the conserved densities."""
    return FamilySet.batched(max(M, 2), 1.0 / np.asarray(theta, dtype=float), n_nodes)


def _reduced_D(M: int, fs: FamilySet, Wr):
    """(D, D^W) of the reduced system per cell."""
    u = Wr[:, 1]
    g2 = 1.0 / (1.0 - u * u)
    idx = reduced_indices(M)
    rows = _basis_positions(M)
    cols = list(full_positions(M))
    DW = dw_batch(M, fs)[:, rows][:, :, cols]
    f = np.einsum("cij,cj->ci", DW, Wr)
    D = DW.copy()
    dDW = dw_theta_batch(M, fs)[:, rows][:, :, cols]
    D[:, :, 2] += np.einsum("cij,cj->ci", dDW, Wr)
    D[:, :, 2] += np.einsum("cij,cj->ci", temperature_generator(M, fs, idx), f)
    # a boost along x^3 rotates nothing; dU/du . n_3 = -(U^0)^2
    Kz = boost_generators(M, fs, idx)[2]
    D[:, :, 1] -= g2[:, None] * np.einsum("cij,cj->ci", Kz, f)
    return D, DW


def _density_vectors(fs: FamilySet, u):
    """Row vectors r with density = r . f over the degree <= 2 labels (cells, 5, 6).

    Products M^a M^b e_0 have degree <= 2, so order-2 operators are exact here.
    """
    A0, A = recurrence_operators(2, fs, reduced_indices(2))
    g = 1.0 / np.sqrt(1.0 - u * u)
    U0, U3 = g, g * u
    M0 = U0[:, None, None] * A0 + U3[:, None, None] * A[2]
    M3 = U3[:, None, None] * A0 + U0[:, None, None] * A[2]
    v0 = M0[:, :, 0]
    v3 = M3[:, :, 0]
    rows = [v0, v3, np.einsum("cij,cj->ci", M0, v0), np.einsum("cij,cj->ci", M0, v3), np.einsum("cij,cj->ci", M3, v3)]
    c0 = fs.c[0][:, 0]
    return np.stack(rows, axis=1) / c0[:, None, None]


DENSITY_NAMES = ("N0", "N3", "T00", "T03", "T33")


def _low_state(M, Wr):
    """The first six reduced entries (n, u, theta, Pi, f~_0, f_200), zero padded for M = 1."""
    out = np.zeros((len(Wr), 6))
    k = min(6, Wr.shape[1])
    out[:, :k] = Wr[:, :k]
    return out


def _density_array(M: int, Wr, fs: FamilySet | None = None, n_nodes: int = 120):
    Wr = _check_reduced(M, Wr)
    fs = fs or family_set(M, Wr[:, 2], n_nodes)
    rows = _basis_positions(2)
    cols = list(full_positions(2))
    DW = dw_batch(2, fs)[:, rows][:, :, cols]
    f = np.einsum("cij,cj->ci", DW, _low_state(M, Wr))
    return np.einsum("cai,ci->ca", _density_vectors(fs, Wr[:, 1]), f), fs


def conserved_densities(M: int, Wr, n_nodes: int = 120) -> dict:
    """(N^0, N^3, T^00, T^03, T^33) per cell, computed exactly from the coefficients.

    Uses <p^a g0, f> = e_0^T M^a f / c_0^(0) and
    <p^a p^b g0, f> = (M^a M^b e_0)^T f / c_0^(0); only degrees <= 2 contribute.
    """
    dens, _ = _density_array(M, Wr, n_nodes=n_nodes)
    return {k: dens[:, i] for i, k in enumerate(DENSITY_NAMES)}


def _density_jacobian(M: int, fs: FamilySet, Wr):
    """d(N^0, T^00, T^03)/d(n, u, theta) per cell: density rows times D."""
    r = _density_vectors(fs, Wr[:, 1])[:, [0, 2, 3]]
    D, _ = _reduced_D(M, fs, Wr)
    nlow = min(6, n_reduced(M))
    return np.einsum("cai,cij->caj", r[:, :, :nlow], D[:, :nlow, :3])


@dataclass
class Quasi1DState:
    """Cell states on a uniform grid."""

    M: int
    x: np.ndarray
    W: np.ndarray
    t: float = 0.0

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])


def equilibrium_row(M: int, n: float, u: float, theta: float) -> np.ndarray:
    w = np.zeros(n_reduced(M))
    w[:3] = [n, u, theta]
    return w


def _ghosts(W, bc):
    if bc == "periodic":
        return W[-1:], W[:1]
    if bc == "outflow":
        return W[:1], W[-1:]
    raise ValueError("boundary condition must be 'outflow' or 'periodic'")


def _conservative_target(M, W, fs, dt, dx, bc, lam):
    """(N^0, T^00, T^03) after one Rusanov step of the conservation laws."""
    dens, _ = _density_array(M, W, fs)
    C = dens[:, [0, 2, 3]]
    F = dens[:, [1, 3, 4]]
    Cg = np.concatenate([_ghosts(C, bc)[0], C, _ghosts(C, bc)[1]])
    Fg = np.concatenate([_ghosts(F, bc)[0], F, _ghosts(F, bc)[1]])
    lg, lr = _ghosts(lam, bc)
    a_face = np.maximum(np.concatenate([lg, lam]), np.concatenate([lam, lr]))
    flux = 0.5 * (Fg[:-1] + Fg[1:]) - 0.5 * a_face[:, None] * (Cg[1:] - Cg[:-1])
    return C - dt / dx * (flux[1:] - flux[:-1])


def _refit(M, Wn, target, iters: int = 2):
    """Newton correction of (n, u, theta) so the densities hit ``target``."""
    Wc = Wn.copy()
    for _ in range(iters):
        dens_c, fs = _density_array(M, Wc)
        res = target - dens_c[:, [0, 2, 3]]
        J = _density_jacobian(M, fs, Wc)
        Wc[:, :3] += np.linalg.solve(J, res[..., None])[..., 0]
    return Wc


def _relax(sys: ReducedSystem, W, dt):
    """Exact solution of dW/dt = B0^-1 R W over dt with frozen matrices."""
    G = np.linalg.solve(sys.B0, sys.R)
    return np.einsum("cij,cj->ci", linalg.expm(dt * G), W)


def step(
    state: Quasi1DState,
    dt: float,
    tau=1.0,
    bc: str = "outflow",
    cfl_max: float = 0.5,
    system: ReducedSystem | None = None,
    conservative: bool = True,
    midpoint: bool = True,
) -> Quasi1DState:
    """Advance one time step; raises CFLError or PositivityError (naming the cell).

    With ``conservative`` the densities N^0, T^00, T^03 are advanced by a
    Rusanov flux and (n, u, theta) are refitted to them by Newton iteration,
    so that particle number, energy and momentum are conserved up to boundary
    fluxes.  The remaining components keep the quasilinear update.

    Transport uses the matrices assembled at the start of the step (``system``
    may pass them in to avoid reassembly).  Relaxation is integrated exactly with
    frozen matrices; with ``midpoint`` they are frozen at the half-step state,
    which makes the relaxation substep second order in dt.
    """
    M, W = state.M, state.W
    dx = state.dx
    sys = system or reduce(M, W, tau(W) if callable(tau) else tau)
    fs = sys.fs
    lam = np.max(np.abs(sys.speeds()), axis=1)
    if not dt * np.max(lam) <= cfl_max * dx * (1 + 1e-12):
        raise CFLError(f"dt = {dt} exceeds the CFL bound {cfl_max} dx / max|lambda|")
    gl, gr = _ghosts(W, bc)
    Wg = np.concatenate([gl, W, gr])
    lg, lr = _ghosts(lam, bc)
    lam_g = np.concatenate([lg, lam, lr])
    a_face = np.maximum(lam_g[:-1], lam_g[1:])
    jump = Wg[1:] - Wg[:-1]
    A = np.linalg.solve(sys.B0, sys.B3)
    central = 0.5 * (jump[1:] + jump[:-1])
    diss = 0.5 * (a_face[1:, None] * jump[1:] - a_face[:-1, None] * jump[:-1])
    Wn = W - dt / dx * np.einsum("cij,cj->ci", A, central) + dt / dx * diss
    if conservative:
        target = _conservative_target(M, W, fs, dt, dx, bc, lam)
    bad = admissibility_violations(M, Wn)
    if len(bad):
        raise PositivityError(f"cell {int(bad[0])} inadmissible after transport at t = {state.t + dt}")
    if midpoint:
        # exponential midpoint: freeze the relaxation matrices at the half-step state
        Wh = _relax(sys, Wn, 0.5 * dt)
        if len(admissibility_violations(M, Wh)) == 0:
            Wn = _relax(reduce(M, Wh, tau(Wh) if callable(tau) else tau), Wn, dt)
        else:
            Wn = _relax(sys, Wn, dt)
    else:
        Wn = _relax(sys, Wn, dt)
    if conservative:
        Wn = _refit(M, Wn, target)
    bad = admissibility_violations(M, Wn)
    if len(bad):
        raise PositivityError(f"cell {int(bad[0])} inadmissible after relaxation at t = {state.t + dt}")
    return Quasi1DState(M, state.x, Wn, state.t + dt)


@dataclass
class SolverConfig:
    """Run configuration; ``left_state``/``right_state`` are (n, u, theta)."""

    M: int = 2
    cells: int = 400
    x_range: tuple = (0.0, 1.0)
    cfl: float = 0.4
    tau: float | None = None
    knudsen: float | None = 0.01
    t_end: float = 0.4
    snapshot_every: int = 0
    left_state: tuple = (1.0, 0.0, 0.6)
    right_state: tuple = (0.125, 0.0, 0.48)
    bc: str = "outflow"

    def validate(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError("M must be a positive integer")
        if int(self.cells) != self.cells or self.cells < 3:
            raise ValueError("cells must be an integer >= 3")
        if not (0 < self.cfl <= 0.5):
            raise ValueError("cfl must lie in (0, 0.5]")
        if (self.tau is None) == (self.knudsen is None):
            raise ValueError("give exactly one of tau and knudsen")
        if (self.tau is not None and not self.tau > 0) or (self.knudsen is not None and not self.knudsen > 0):
            raise ValueError("tau / knudsen must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not self.x_range[1] > self.x_range[0]:
            raise ValueError("x_range must be increasing")
        if self.bc not in ("outflow", "periodic"):
            raise ValueError("bc must be 'outflow' or 'periodic'")
        for s in (self.left_state, self.right_state):
            if len(s) != 3 or not (s[0] > 0 and abs(s[1]) < 1 and s[2] > 0):
                raise InadmissibleError("initial states need n > 0, |u| < 1, theta > 0")
        return self

    def relaxation_time(self):
        if self.tau is not None:
            return float(self.tau)
        kn = float(self.knudsen)
        return lambda W: kn / W[:, 0]


def load_config(path) -> SolverConfig:
    data = json.loads(Path(path).read_text())
    known = set(SolverConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for key in ("x_range", "left_state", "right_state"):
        if key in data:
            data[key] = tuple(data[key])
    if "tau" in data and "knudsen" not in data:
        data["knudsen"] = None
    return SolverConfig(**data).validate()


def sod_config(**kw) -> SolverConfig:
    return SolverConfig(**kw).validate()


def initial_state(cfg: SolverConfig) -> Quasi1DState:
    lo, hi = cfg.x_range
    dx = (hi - lo) / cfg.cells
    x = lo + dx * (np.arange(cfg.cells) + 0.5)
    W = np.zeros((cfg.cells, n_reduced(cfg.M)))
    mid = 0.5 * (lo + hi)
    W[x < mid] = equilibrium_row(cfg.M, *cfg.left_state)
    W[x >= mid] = equilibrium_row(cfg.M, *cfg.right_state)
    return Quasi1DState(cfg.M, x, W)


@dataclass
class RunResult:
    snapshots: list
    final: Quasi1DState
    steps: int
    boundary_flux: dict


def run(cfg: SolverConfig, state: Quasi1DState | None = None, callback=None) -> RunResult:
    """Integrate to cfg.t_end; snapshots every ``snapshot_every`` steps (0: first and last).

    ``boundary_flux`` accumulates the time integral of (N^3, T^03, T^33) through
    the right edge minus the left edge, for conservation audits.
    """
    cfg.validate()
    state = state or initial_state(cfg)
    tau = cfg.relaxation_time()
    snaps = [state]
    flux = {"N": 0.0, "T0": 0.0, "T3": 0.0}
    nstep = 0
    while state.t < cfg.t_end * (1 - 1e-14):
        sys = reduce(cfg.M, state.W, tau(state.W) if callable(tau) else tau)
        lam = float(np.max(np.abs(sys.speeds())))
        dt = min(cfg.cfl * state.dx / lam, cfg.t_end - state.t)
        if cfg.bc == "outflow":
            edge = conserved_densities(cfg.M, state.W[[0, -1]])
            flux["N"] += dt * (edge["N3"][1] - edge["N3"][0])
            flux["T0"] += dt * (edge["T03"][1] - edge["T03"][0])
            flux["T3"] += dt * (edge["T33"][1] - edge["T33"][0])
        state = step(state, dt, tau, cfg.bc, cfl_max=0.5, system=sys)
        nstep += 1
        if cfg.snapshot_every and nstep % cfg.snapshot_every == 0:
            snaps.append(state)
        if callback is not None:
            callback(state)
    if snaps[-1] is not state:
        snaps.append(state)
    return RunResult(snaps, state, nstep, flux)


def snapshot_header(M: int) -> list:
    names = ["x", "n", "u", "theta"]
    if M >= 2:
        names += ["Pi", "f_diffusion"]
        pos = basis.index_map(M)
        names += [f"f_l{ell}_k{k}" for (ell, m, k) in reduced_indices(M) if pos[(ell, m, k)] >= 9]
    return names


def write_snapshot(path, state: Quasi1DState):
    """CSV with columns x, n, u, theta, Pi, higher coefficients (17 significant digits)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(snapshot_header(state.M))
        for x, row in zip(state.x, state.W):
            w.writerow([f"{v:.17g}" for v in (x, *row)])
