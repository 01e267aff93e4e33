"""Assembly of the moment system B^alpha(W) dW/dx^alpha = S(W).

The state vector W holds (n, u_1, u_2, u_3, theta) for M = 1 and
(n, u_1, u_2, u_3, theta, Pi, f~_{-1}, f~_0, f~_1, f_9, ..., f_{N-1}) for M >= 2,
where Pi is the bulk pressure and f~ the particle diffusion coefficients.
The expansion coefficients f (degree-major) are f = D^W(zeta) W.

Matrices use the convention op[target, source]: column j is the image of the
j-th basis function.  Every builder accepts a batch of temperatures; the
coefficient arrays carry a leading batch axis.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from . import basis, harmonics, orthopoly
from .frame_kinematics import METRIC, FluidState, InadmissibleError, tetrad, tetrad_derivative
from .special_functions import g_ratio

__all__ = [
    "FamilySet",
    "state_size",
    "recurrence_operators",
    "boost_generators",
    "rotation_generators",
    "temperature_generator",
    "dw_batch",
    "dw_theta_batch",
    "build_DW",
    "SystemMatrices",
    "assemble",
    "source_jacobian",
    "det_D_formulas",
    "closed_form_D_entries",
    "build_A",
    "build_M",
    "build_D",
    "basis_derivatives",
    "build_B",
    "source",
    "relaxation_matrix",
    "lab_frame_derivative_oracle",
]


class FamilySet:
    """Recurrence and cross coefficients of families l = 0..M+1 for a batch of zeta.

    Family l holds degrees up to K_l = M - l + 3, enough for every product
    needed when truncating at total degree M.
    """

    def __init__(self, M: int, zeta, a: dict, b: dict, c: dict, G=None):
        self.M = M
        self.zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
        self.a, self.b, self.c = a, b, c
        self.G = np.atleast_1d(g_ratio(self.zeta)) if G is None else G
        self.cross = {}
        for ell in range(1, M + 2):
            k_max = min(a[ell].shape[-1], a[ell - 1].shape[-1] - 2)
            p, q, r, pt, qt, rt = orthopoly.cross_arrays(ell, c[ell], b[ell], c[ell - 1], b[ell - 1], k_max)
            self.cross[ell] = dict(p=p, q=q, r=r, pt=pt, qt=qt, rt=rt)

    @staticmethod
    def depth(M: int, ell: int) -> int:
        return M - ell + 3

    @classmethod
    def exact(cls, M: int, zeta: float) -> "FamilySet":
        """Coefficients from the extended-precision moment route."""
        a, b, c = {}, {}, {}
        for ell in range(M + 2):
            fam = orthopoly.family(ell, float(zeta), cls.depth(M, ell))
            a[ell], b[ell], c[ell] = fam.a[None], fam.b[None], fam.c[None]
        return cls(M, zeta, a, b, c)

    @classmethod
    def batched(cls, M: int, zeta, n_nodes: int = 120) -> "FamilySet":
        """Coefficients from the vectorized quadrature route (one zeta per batch entry)."""
        zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
        ells = range(M + 2)
        fams = orthopoly.batched_families(ells, zeta, [cls.depth(M, ell) for ell in ells], n_nodes)
        a = {ell: v[0] for ell, v in fams.items()}
        b = {ell: v[1] for ell, v in fams.items()}
        c = {ell: v[2] for ell, v in fams.items()}
        # scaled Bessel ratio straight from the library routine keeps this path fast
        G = special.kve(3, zeta) / special.kve(2, zeta)
        return cls(M, zeta, a, b, c, G)

    def tile(self, reps: int) -> "FamilySet":
        """The same coefficients repeated along the batch axis."""
        rep = lambda d: {k: np.repeat(v, reps, axis=0) for k, v in d.items()}
        return FamilySet(self.M, np.repeat(self.zeta, reps), rep(self.a), rep(self.b), rep(self.c), np.repeat(self.G, reps))

    @property
    def batch(self) -> int:
        return len(self.zeta)


def state_size(M: int) -> int:
    return basis.n_moments(M)


@lru_cache(maxsize=None)
def _tables(M: int):
    return harmonics.multiplication_tables(M + 1)


def _links(tab, c: int, L: int, ell: int, m: int):
    """Nonzero (m', value) of a multiplication table row."""
    row = tab[c, ell, m + L]
    return [(j - L - 1, row[j]) for j in np.nonzero(row)[0]]


def _index_set(M: int, indices):
    order = basis.degree_order(M) if indices is None else tuple(indices)
    return order, {idx: i for i, idx in enumerate(order)}


def _new(fs: FamilySet, n: int, lead=()):
    return np.zeros(lead + (fs.batch, n, n))


def _add(mat, pos, target, i, val):
    j = pos.get(target)
    if j is not None:
        mat[..., j, i] += val


def recurrence_operators(M: int, fs: FamilySet, indices=None):
    """Matrices of multiplication by E and by v_c = sqrt(E^2-1) l_c (c = x, y, z).

    Returns (A0, A[3]) with A0 of shape (batch, N, N) and A of shape (3, batch, N, N).
    Products are truncated to total degree <= M.
    """
    order, pos = _index_set(M, indices)
    n = len(order)
    L = M + 1
    up, down = _tables(M)
    A0 = _new(fs, n)
    A = _new(fs, n, (3,))
    for i, (ell, m, k) in enumerate(order):
        a, b = fs.a[ell], fs.b[ell]
        _add(A0, pos, (ell, m, k), i, b[:, k])
        _add(A0, pos, (ell, m, k + 1), i, a[:, k])
        if k > 0:
            _add(A0, pos, (ell, m, k - 1), i, a[:, k - 1])
        cu = fs.cross[ell + 1]
        for c in range(3):
            # v_c shifts l up: P_k^(l) = p_k P_k + q_{k-1} P_{k-1} + r_{k-1} P_{k-2} in family l+1
            for mp, t in _links(up, c, L, ell, m):
                _add(A[c], pos, (ell + 1, mp, k), i, t * cu["p"][:, k])
                if k >= 1:
                    _add(A[c], pos, (ell + 1, mp, k - 1), i, t * cu["q"][:, k - 1])
                if k >= 2:
                    _add(A[c], pos, (ell + 1, mp, k - 2), i, t * cu["r"][:, k - 1])
            if ell == 0:
                continue
            # and down: (E^2-1) P_k^(l) expands into P_k, P_{k+1}, P_{k+2} of family l-1
            cd = fs.cross[ell]
            s = (2 * ell + 1) / (2 * ell - 1)
            for mp, t in _links(down, c, L, ell, m):
                _add(A[c], pos, (ell - 1, mp, k), i, s * t * cd["p"][:, k])
                _add(A[c], pos, (ell - 1, mp, k + 1), i, s * t * cd["q"][:, k])
                _add(A[c], pos, (ell - 1, mp, k + 2), i, s * t * cd["r"][:, k + 1])
    return A0, A


def boost_generators(M: int, fs: FamilySet, indices=None):
    """Matrices of K_c = v_c d/dE + E d/dv_c acting on the weighted basis, shape (3, batch, N, N)."""
    order, pos = _index_set(M, indices)
    n = len(order)
    L = M + 1
    up, down = _tables(M)
    K = _new(fs, n, (3,))
    z = fs.zeta
    for i, (ell, m, k) in enumerate(order):
        cu = fs.cross[ell + 1]
        # up part: (P' - zeta P) in family l+1
        e_km1 = None
        if k >= 1:
            e_km1 = (2 * ell + 1) / (2 * ell + 3) * k / cu["pt"][:, k - 1] - z * cu["q"][:, k - 1]
        e_k = -z * cu["p"][:, k]
        for c in range(3):
            for mp, t in _links(up, c, L, ell, m):
                _add(K[c], pos, (ell + 1, mp, k), i, t * e_k)
                if e_km1 is not None:
                    _add(K[c], pos, (ell + 1, mp, k - 1), i, t * e_km1)
        if ell == 0:
            continue
        cd = fs.cross[ell]
        s = (2 * ell + 1) / (2 * ell - 1)
        d1 = s * ((k + 2 * ell + 1) * cd["pt"][:, k] - z * cd["q"][:, k])
        d2 = -s * z * cd["r"][:, k + 1]
        for c in range(3):
            for mp, t in _links(down, c, L, ell, m):
                _add(K[c], pos, (ell - 1, mp, k + 1), i, t * d1)
                _add(K[c], pos, (ell - 1, mp, k + 2), i, t * d2)
    return K


@lru_cache(maxsize=None)
def _rotation_blocks(M: int):
    """R[c, d][l] (2l+1, 2l+1): the l-preserving part of v_d d/dv_c on solid harmonics."""
    L = M + 1
    up, down = _tables(M)
    out = {}
    for ell in range(1, M + 1):
        blk = np.zeros((3, 3, 2 * ell + 1, 2 * ell + 1))
        for c in range(3):
            for d in range(3):
                for m in range(-ell, ell + 1):
                    for m2, t in _links(down, c, L, ell, m):
                        for mp, s in _links(up, d, L, ell - 1, m2):
                            blk[c, d, mp + ell, m + ell] += (2 * ell + 1) * t * s
        out[ell] = 0.5 * (blk - blk.transpose(1, 0, 2, 3))
    return out


def rotation_generators(M: int, indices=None) -> np.ndarray:
    """Antisymmetrized (v_d d_c - v_c d_d) / 2 on the basis, shape (3, 3, N, N)."""
    order, pos = _index_set(M, indices)
    n = len(order)
    R = np.zeros((3, 3, n, n))
    blocks = _rotation_blocks(M)
    for i, (ell, m, k) in enumerate(order):
        if ell == 0:
            continue
        for mp in range(-ell, ell + 1):
            j = pos.get((ell, mp, k))
            if j is not None:
                R[:, :, j, i] = blocks[ell][:, :, mp + ell, m + ell]
    return R


def temperature_generator(M: int, fs: FamilySet, indices=None) -> np.ndarray:
    """d/dtheta of the weighted basis at fixed momentum, shape (batch, N, N)."""
    order, pos = _index_set(M, indices)
    T = _new(fs, len(order))
    z = fs.zeta
    for i, (ell, m, k) in enumerate(order):
        b, a = fs.b[ell], fs.a[ell]
        # d/dzeta (g0 P_k) = g0 [(G - 1/zeta - b_k)/2 P_k - a_k P_{k+1}], and d/dtheta = -zeta^2 d/dzeta
        _add(T, pos, (ell, m, k), i, -z**2 * 0.5 * (fs.G - 1.0 / z - b[:, k]))
        _add(T, pos, (ell, m, k + 1), i, z**2 * a[:, k])
    return T


def _dw_core(fs: FamilySet):
    """Ingredients of D^W: c_k^(0), b_0^(0), det J_2^(0), c_0^(1), c_1^(1) b_0^(1)."""
    c0, b0, a0 = fs.c[0], fs.b[0], fs.a[0]
    c1, b1 = fs.c[1], fs.b[1]
    return dict(
        c00=c0[:, 0], c10=c0[:, 1], c20=c0[:, 2],
        x11=b0[:, 0], det2=b0[:, 0] * b0[:, 1] - a0[:, 0] ** 2,
        c01=c1[:, 0], c11b01=c1[:, 1] * b1[:, 0],
    )


def dw_batch(M: int, fs: FamilySet) -> np.ndarray:
    """Linear map W -> f (degree-major), shape (batch, N, N).

    The diagonal block fixes the Landau frame and the Eckart-like matching:
    f_0 = n/c_0 - 3 c_0 Pi, f_1 = 3 c_1 b_0 Pi, f_{0,m}^(1) = c_0^(1) f~_m,
    f_2 = -3 c_2 (b_0 b_1 - a_0^2) Pi, f_{1,m}^(1) = -c_1^(1) b_0^(1) f~_m.
    """
    N = basis.n_moments(M)
    DW = np.zeros((fs.batch, N, N))
    k = _dw_core(fs)
    DW[:, 0, 0] = 1.0 / k["c00"]
    if M == 1:
        return DW
    DW[:, 0, 5] = -3.0 * k["c00"]
    DW[:, 1, 5] = 3.0 * k["c10"] * k["x11"]
    DW[:, 5, 5] = -3.0 * k["c20"] * k["det2"]
    for j in range(3):
        DW[:, 2 + j, 6 + j] = k["c01"]
        DW[:, 6 + j, 6 + j] = -k["c11b01"]
    for i in range(9, N):
        DW[:, i, i] = 1.0
    return DW


def _dzeta_family(fs: FamilySet, ell: int):
    """(dc/dzeta, db/dzeta, da/dzeta) for family l."""
    a, b, c, z = fs.a[ell], fs.b[ell], fs.c[ell], fs.zeta[:, None]
    G = fs.G[:, None]
    dc = -0.5 * (G - 1.0 / z - b) * c
    a_prev = np.concatenate([np.zeros_like(a[:, :1]), a], axis=1)
    a_next = np.concatenate([a, np.zeros_like(a[:, :1])], axis=1)
    db = a_prev**2 - a_next**2
    da = 0.5 * a * (b[:, :-1] - b[:, 1:])
    return dc, db[:, :-1], da


def dw_theta_batch(M: int, fs: FamilySet) -> np.ndarray:
    """d D^W / d theta, shape (batch, N, N)."""
    N = basis.n_moments(M)
    out = np.zeros((fs.batch, N, N))
    k = _dw_core(fs)
    dc0, db0, da0 = _dzeta_family(fs, 0)
    dc1, db1, _ = _dzeta_family(fs, 1)
    s = -fs.zeta**2
    out[:, 0, 0] = s * (-dc0[:, 0] / k["c00"] ** 2)
    if M == 1:
        return out
    b0, a0 = fs.b[0], fs.a[0]
    c1, bb1 = fs.c[1], fs.b[1]
    d_det = db0[:, 0] * b0[:, 1] + b0[:, 0] * db0[:, 1] - 2.0 * a0[:, 0] * da0[:, 0]
    out[:, 0, 5] = s * (-3.0 * dc0[:, 0])
    out[:, 1, 5] = s * 3.0 * (dc0[:, 1] * k["x11"] + k["c10"] * db0[:, 0])
    out[:, 5, 5] = s * (-3.0) * (dc0[:, 2] * k["det2"] + k["c20"] * d_det)
    for j in range(3):
        out[:, 2 + j, 6 + j] = s * dc1[:, 0]
        out[:, 6 + j, 6 + j] = s * (-(dc1[:, 1] * bb1[:, 0] + c1[:, 1] * db1[:, 0]))
    return out


def _check_state(W, M):
    W = np.asarray(W, dtype=float)
    if W.shape != (basis.n_moments(M),):
        raise ValueError(f"state vector must have length {basis.n_moments(M)}")
    if not np.all(np.isfinite(W)):
        raise InadmissibleError("state vector must be finite")
    if M >= 2 and not W[5] > -W[0] * W[4]:
        raise InadmissibleError("bulk pressure must exceed -n theta")
    return W


def _state_of(W) -> FluidState:
    return FluidState(float(W[0]), tuple(W[1:4]), float(W[4]))


def _resolve(M, state, W):
    W = _check_state(W, M)
    st = _state_of(W)
    if state is not None:
        ref = np.array([state.n, *state.u, state.theta])
        if not np.allclose(ref, W[:5], rtol=1e-12, atol=1e-14):
            raise ValueError("state and the first five entries of W disagree")
    return st, W


def build_A(M: int, zeta: float, fs: FamilySet | None = None):
    """Rest-frame matrices (A0, A_x, A_y, A_z) in block order (l, then m, then k)."""
    fs = fs or FamilySet.exact(M, zeta)
    A0, A = recurrence_operators(M, fs)
    P = basis.permutation(M)
    return tuple(P.T @ X[0] @ P for X in (A0, A[0], A[1], A[2]))


def build_M(M: int, state: FluidState, fs: FamilySet | None = None) -> np.ndarray:
    """M^alpha = <p^alpha P~_i, P~_j> in degree-major order, shape (4, N, N)."""
    fs = fs or FamilySet.exact(M, state.zeta)
    A0, A = recurrence_operators(M, fs)
    U = state.U
    n = tetrad(state.u)
    return U[:, None, None] * A0[0][None] + np.einsum("ca,cij->aij", n, A[:, 0])


def build_DW(M: int, state: FluidState, fs: FamilySet | None = None) -> np.ndarray:
    """The linear map W -> f (degree-major) at the temperature of ``state``."""
    fs = fs or FamilySet.exact(M, state.zeta)
    return dw_batch(M, fs)[0]


def build_D(M: int, state: FluidState | None, W, fs: FamilySet | None = None) -> np.ndarray:
    """Jacobian D with d f / ds = D dW/ds, f the coefficients in the moving-frame basis.

    D = D^W + (dD^W/dtheta W) e_theta^T + sum_j (Gamma_j D^W W) e_j^T over
    j in (u_1, u_2, u_3, theta), where Gamma_j differentiates the basis.
    ``state`` may be None; it is then read from W.
    """
    state, W = _resolve(M, state, W)
    fs = fs or FamilySet.exact(M, state.zeta)
    DW = dw_batch(M, fs)[0]
    f = DW @ W
    D = DW.copy()
    D[:, 4] += dw_theta_batch(M, fs)[0] @ W
    D[:, 4] += temperature_generator(M, fs)[0] @ f
    K = boost_generators(M, fs)[:, 0]
    R = rotation_generators(M)
    dU, dn = tetrad_derivative(state.u)
    n = tetrad(state.u)
    alpha = np.einsum("ia,ab,cb->ic", dU, METRIC, n)
    rho = np.einsum("ica,ab,db->icd", dn, METRIC, n)
    for i in range(3):
        gen = np.einsum("c,cjk->jk", alpha[i], K) - np.einsum("cd,cdjk->jk", rho[i], R)
        D[:, 1 + i] += gen @ f
    return D


def basis_derivatives(M: int, state: FluidState, fs: FamilySet | None = None) -> np.ndarray:
    """Expansions of d/du_i (i = 1..3) and d/dtheta of the order-M basis at fixed lab momentum.

    Returns C of shape (4, N_{M+1}, N_M) with d P~_j / d w = sum_i C[w, i, j] P~_i over
    the order-(M+1) basis; the expansion is exact because each derivative raises
    the degree by at most one.
    """
    fs = fs or FamilySet.exact(M + 1, state.zeta)
    N = basis.n_moments(M)
    K = boost_generators(M + 1, fs)[:, 0]
    R = rotation_generators(M + 1)
    dU, dn = tetrad_derivative(state.u)
    n = tetrad(state.u)
    alpha = np.einsum("ia,ab,cb->ic", dU, METRIC, n)
    rho = np.einsum("ica,ab,db->icd", dn, METRIC, n)
    out = [np.einsum("c,cjk->jk", alpha[i], K) - np.einsum("cd,cdjk->jk", rho[i], R) for i in range(3)]
    out.append(temperature_generator(M + 1, fs)[0])
    return np.stack(out)[:, :, :N]


def build_B(M: int, state: FluidState | None, W, fs: FamilySet | None = None, max_cond: float = 1e13) -> np.ndarray:
    """B^alpha = M^alpha D, shape (4, N, N).

    Raises InadmissibleError when D is numerically singular.
    """
    state, W = _resolve(M, state, W)
    fs = fs or FamilySet.exact(M, state.zeta)
    D = build_D(M, state, W, fs)
    if not np.linalg.cond(D) < max_cond:
        raise InadmissibleError("D is numerically singular at this state")
    return build_M(M, state, fs) @ D


def _dw_tilde(M, fs):
    DWt = dw_batch(M, fs)[0]
    DWt[0, 0] = 0.0
    return DWt


def relaxation_matrix(M: int, state: FluidState | None, W, tau: float, fs: FamilySet | None = None) -> np.ndarray:
    """R with S = R W: -(1/tau) A0 D~^W, where D~^W is D^W with its (0, 0) entry removed."""
    if not tau > 0:
        raise ValueError("relaxation time must be positive")
    state, W = _resolve(M, state, W)
    fs = fs or FamilySet.exact(M, state.zeta)
    A0, _ = recurrence_operators(M, fs)
    return -(A0[0] @ _dw_tilde(M, fs)) / tau


def source(M: int, state: FluidState | None, W, tau: float, fs: FamilySet | None = None) -> np.ndarray:
    """Anderson-Witting source -(1/tau) A0 (f - f_eq); U_alpha M^alpha = A0 in any frame."""
    state, W = _resolve(M, state, W)
    return relaxation_matrix(M, state, W, tau, fs) @ W


def source_jacobian(M: int, state: FluidState, tau: float, fs: FamilySet | None = None) -> np.ndarray:
    """Q = -(1/tau) U_alpha M^alpha D~^W D^-1 at the equilibrium W of ``state``."""
    W = np.zeros(basis.n_moments(M))
    W[:5] = [state.n, *state.u, state.theta]
    fs = fs or FamilySet.exact(M, state.zeta)
    UM = np.einsum("a,ab,bij->ij", state.U, METRIC, build_M(M, state, fs))
    return -(UM @ _dw_tilde(M, fs) @ np.linalg.inv(build_D(M, state, W, fs))) / tau


@dataclass(frozen=True, eq=False)
class SystemMatrices:
    """All matrices of the moment system at one state (degree-major)."""

    M: np.ndarray
    DW: np.ndarray
    D: np.ndarray
    B: np.ndarray
    R: np.ndarray
    S: np.ndarray


def assemble(M: int, W, tau: float = 1.0) -> SystemMatrices:
    state, W = _resolve(M, None, W)
    fs = FamilySet.exact(M, state.zeta)
    Ma = build_M(M, state, fs)
    D = build_D(M, state, W, fs)
    R = relaxation_matrix(M, state, W, tau, fs)
    return SystemMatrices(Ma, dw_batch(M, fs)[0], D, Ma @ D, R, R @ W)


def det_D_formulas(M: int, state: FluidState, Pi: float = 0.0, fs: FamilySet | None = None) -> dict:
    """Quoted closed-form determinants of D, plus the M = 1 value that follows from its block structure.

    ``"closed_form_D1"``: n^4 zeta^2 (c_0^(1))^3 ((U^0)^2 + U^0 + 1)(U^0)^3 / (c_0^(0) c_1^(0) (U^0 + 1)).
    ``"structural_D1"``: -n^4 zeta^2 (c_0^(1))^3 (U^0)^4 / (c_0^(0) c_1^(0)); the triad has determinant U^0.
    ``"closed_form_D2"``: 3 zeta^3 c_2^(0) c_1^(1) (x_12 + x_22)(n G + Pi) n c_1^(0) c_0^(0) (U^0)^6,
    with x_12 + x_22 = b_0^(0) + b_1^(0) the sum of the zeros of P_2^(0).
    """
    fs = fs or FamilySet.exact(max(M, 2), state.zeta)
    z, n, U0 = state.zeta, state.n, state.gamma
    c0, c1, b0 = fs.c[0][0], fs.c[1][0], fs.b[0][0]
    G = fs.G[0]
    return {
        "closed_form_D1": n**4 * z**2 * c1[0] ** 3 * (U0**2 + U0 + 1) * U0**3 / (c0[0] * c0[1] * (U0 + 1)),
        "structural_D1": -(n**4) * z**2 * c1[0] ** 3 * U0**4 / (c0[0] * c0[1]),
        "closed_form_D2": 3 * z**3 * c0[2] * c1[1] * (b0[0] + b0[1]) * (n * G + Pi) * n * c0[1] * c0[0] * U0**6,
    }


def closed_form_D_entries(M: int, state: FluidState | None, W, fs: FamilySet | None = None) -> dict:
    """Entries of D written out in closed form for M = 1 and M = 2, keyed by (row, col).

    Rows 2, 3, 4 carry m = -1, 0, 1, which pair with the triad vectors n_2, n_3, n_1.
    For M = 2 the values include the extra diffusion terms of the u_3 column and
    the (Pi, f~) coupling rows in their quoted form.
    """
    state, W = _resolve(M, state, W)
    fs = fs or FamilySet.exact(M, state.zeta)
    z, n, U0 = state.zeta, state.n, state.gamma
    c0, c1 = fs.c[0][0], fs.c[1][0]
    nt = tetrad(state.u)
    out = {(0, 0): 1.0 / c0[0], (0, 4): -n * z**2 / (c0[1] ** 2 * c0[0]), (1, 4): n * z**2 / c0[1]}
    for j in (1, 2, 3):
        out[(0, j)] = out[(1, j)] = 0.0
    out[(1, 0)] = 0.0
    rows = ((2, 1, -1.0), (3, 2, 1.0), (4, 0, -1.0))
    for r, cc, s in rows:
        out[(r, 0)] = out[(r, 4)] = 0.0
        for j in (1, 2, 3):
            out[(r, j)] = s * n * U0 * nt[cc, j] * c1[0]
    if M == 1:
        return out
    ft = W[6:9]
    Pi = W[5]
    g3 = (1.0 - np.dot(state.u, state.u)) ** -1.5
    b0 = fs.b[0][0]
    for i, (r, _, _) in enumerate(rows):
        out[(r, 3)] += g3 * c1[0] * ft[i]
    out[(5, 0)] = out[(5, 4)] = 0.0
    for j in (1, 2, 3):
        out[(5, j)] = -c0[2] * ft[j - 1] * (b0[0] + b0[1]) * g3
    for r6, (_, cc, s) in zip((6, 7, 8), rows):
        out[(r6, 0)] = out[(r6, 4)] = 0.0
        for j in (1, 2, 3):
            out[(r6, j)] = s * U0 * nt[cc, j] * c1[1] * Pi
    return out


def lab_frame_derivative_oracle(M: int, W, direction, h: float = 1e-5, degree: int | None = None) -> np.ndarray:
    """D @ direction (an int selects a unit vector) by central differences of the distribution at fixed lab momenta.

    The function sum_i f_i(W) P~_i[u, theta] is differentiated along the direction and
    projected onto the basis at W with an exact quadrature.
    """
    W = _check_state(W, M)
    state = _state_of(W)
    rule = basis.quadrature_rule(state, degree or 2 * M + 8)
    p3 = rule.momenta

    def F(Ws):
        st = _state_of(Ws)
        fs = FamilySet.exact(M, st.zeta)
        f = dw_batch(M, fs)[0] @ Ws
        return f @ basis.eval_basis(M, st, p3)

    if np.ndim(direction) == 0:
        e = np.zeros_like(W)
        e[int(direction)] = h
    else:
        e = h * np.asarray(direction, dtype=float)
    dF = (F(W + e) - F(W - e)) / (2 * h)
    return basis.project_reduced(M, state, dF / basis.g0(rule.E, state.zeta), rule)
