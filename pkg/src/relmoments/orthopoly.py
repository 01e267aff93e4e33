"""Grad-type orthonormal polynomial families P_k^(l)(x; zeta) on [1, inf).

Weight: w_l(x) = zeta (x^2 - 1)^(l + 1/2) exp(-zeta x) / ((2l + 1) K_2(zeta)).

Three coefficient routes are provided:

* ``recurrence_coeffs``: closed-form Bessel moments fed to the Chebyshev
  algorithm, all in mpmath extended precision.  This is the reference path.
* ``stieltjes_coeffs``: Stieltjes procedure with scipy adaptive quadrature.
  Independent oracle.
* ``batched_coeffs``: discretized Stieltjes (Lanczos) on a trapezoid rule in
  x = cosh(s), float64 and vectorized over many zeta at once.  Used by the
  solver where thousands of cells need fresh families every step.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math

import mpmath as mp
import numpy as np
from scipy import integrate, linalg, special

from .special_functions import g_ratio

__all__ = [
    "PolyFamily",
    "CrossCoeffs",
    "IllConditionedError",
    "moments",
    "recurrence_coeffs",
    "family",
    "stieltjes_coeffs",
    "batched_coeffs",
    "batched_families",
    "eval_poly",
    "eval_all",
    "eval_derivative_all",
    "zeros",
    "cross_coeffs",
    "cross_arrays",
    "recurrence_residuals",
    "d_dzeta",
    "d_dx_relations",
    "ultra_limit_family",
    "laguerre_coeffs",
    "weight",
]


class IllConditionedError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class PolyFamily:
    """Recurrence data of one family.

    ``a`` has K entries, ``b`` and ``c`` have K + 1; polynomials up to degree K
    can be evaluated and x P_k is expressible for k < K.
    """

    ell: int
    zeta: float
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    mu0: float

    @property
    def K(self) -> int:
        return len(self.a)

    def jacobi(self, k: int) -> np.ndarray:
        """The k x k Jacobi matrix whose eigenvalues are the zeros of P_k."""
        J = np.diag(self.b[:k])
        if k > 1:
            J += np.diag(self.a[: k - 1], 1) + np.diag(self.a[: k - 1], -1)
        return J

    def zero_sum(self, k: int) -> float:
        """Sum of the zeros of P_k (trace of the Jacobi matrix)."""
        return float(np.sum(self.b[:k]))


@dataclass(frozen=True, eq=False)
class CrossCoeffs:
    """Coefficients linking family l to family l - 1 (index k)."""

    ell: int
    p: np.ndarray
    q: np.ndarray
    r: np.ndarray
    ptilde: np.ndarray
    qtilde: np.ndarray
    rtilde: np.ndarray


def weight(ell: int, zeta: float, x):
    x = np.asarray(x, dtype=float)
    k2e = special.kve(2, zeta)
    with np.errstate(invalid="ignore"):
        w = zeta * np.clip(x * x - 1.0, 0.0, None) ** (ell + 0.5) * np.exp(-zeta * (x - 1.0))
    return w / ((2 * ell + 1) * k2e)


# ---------------------------------------------------------------- moments


def _working_dps(K: int, zeta: float) -> int:
    return 30 + int((2 * K + 2) * (math.log10(2.0 + zeta) + 1.5))


@lru_cache(maxsize=1024)
def _bessel01(zeta: float, dps: int):
    """K_0 and K_1 at zeta with dps decimal digits (shared by all families at one zeta)."""
    with mp.workdps(dps):
        z = mp.mpf(zeta)
        return mp.besselk(0, z), mp.besselk(1, z)


def _mp_moments(ell: int, zeta, n_max: int):
    """mu_0..mu_n_max of w_l as mpf values at the current precision.

    Uses int (x^2-1)^(v-1/2) e^{-zeta x} dx = (2v-1)!! zeta^-v K_v, its zeta-derivative
    (2v-1)!! zeta^-v K_{v+1} for the x-weighted version, and x^2 = (x^2-1) + 1.
    """
    z = mp.mpf(zeta)
    nu_top = ell + 1 + n_max // 2 + 2
    K = list(_bessel01(float(zeta), 16 * -(-mp.mp.dps // 16)))
    for v in range(1, nu_top + 1):
        K.append(K[v - 1] + 2 * v / z * K[v])
    memo = {}

    def dfact(m):
        return mp.mpf(math.prod(range(m, 0, -2)))

    def J(v, j):
        key = (v, j)
        if key not in memo:
            if j == 0:
                memo[key] = dfact(2 * v - 1) * z ** (-v) * K[v]
            elif j == 1:
                memo[key] = dfact(2 * v - 1) * z ** (-v) * K[v + 1]
            else:
                memo[key] = J(v + 1, j - 2) + J(v, j - 2)
        return memo[key]

    pref = z / ((2 * ell + 1) * K[2])
    return [pref * J(ell + 1, n) for n in range(n_max + 1)]


def moments(ell: int, zeta: float, n_max: int) -> np.ndarray:
    """Ordinary moments mu_n = int x^n w_l dx, n = 0..n_max (closed form)."""
    if zeta <= 0:
        raise ValueError("zeta must be positive")
    if n_max > 2 * 40 + 1:
        raise ValueError("moment table limited to n_max <= 81")
    with mp.workdps(_working_dps(n_max // 2, zeta)):
        mu = _mp_moments(ell, zeta, n_max)
        return np.array([float(m) for m in mu])


def _chebyshev(m, n):
    """Chebyshev algorithm: moments m_0..m_{2n-1} -> alpha_0..alpha_{n-1}, beta_0..beta_{n-1}."""
    alpha = [m[1] / m[0]]
    beta = [m[0]]
    prev2 = [mp.mpf(0)] * (2 * n)
    prev = list(m[: 2 * n])
    for k in range(1, n):
        cur = [mp.mpf(0)] * (2 * n)
        for l in range(k, 2 * n - k):
            cur[l] = prev[l + 1] - alpha[k - 1] * prev[l] - beta[k - 1] * prev2[l]
        if cur[k] <= 0:
            raise IllConditionedError(f"Chebyshev algorithm lost positivity at degree {k}")
        alpha.append(cur[k + 1] / cur[k] - prev[k] / prev[k - 1])
        beta.append(cur[k] / prev[k - 1])
        prev2, prev = prev, cur
    return alpha, beta


def recurrence_coeffs(ell: int, zeta: float, K: int) -> PolyFamily:
    """Family data up to degree K from closed-form moments (extended precision).

    The algorithm runs on moments of t = zeta (x - 1), whose weight is close
    to a Laguerre weight for every zeta; this keeps the moment problem
    well conditioned when zeta is large.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    if zeta <= 0:
        raise ValueError("zeta must be positive")
    n = K + 1
    with mp.workdps(_working_dps(K, zeta)):
        z = mp.mpf(zeta)
        mu = _mp_moments(ell, zeta, 2 * n - 1)
        mt = []
        for j in range(2 * n):
            s = mp.mpf(0)
            for i in range(j + 1):
                s += math.comb(j, i) * (-1) ** (j - i) * mu[i]
            mt.append(s * z**j)
        alpha, beta = _chebyshev(mt, n)
        b = np.array([float(1 + al / z) for al in alpha])
        a = np.array([float(mp.sqrt(be) / z) for be in beta[1:]])
        mu0 = mu[0]
        c = [1 / mp.sqrt(mu0)]
        for k in range(K):
            c.append(c[-1] * z / mp.sqrt(beta[k + 1]))
        c = np.array([float(v) for v in c])
    return PolyFamily(ell, float(zeta), a, b, c, float(mu0))


@lru_cache(maxsize=4096)
def family(ell: int, zeta: float, K: int) -> PolyFamily:
    """Cached ``recurrence_coeffs``."""
    return recurrence_coeffs(int(ell), float(zeta), int(K))


def stieltjes_coeffs(ell: int, zeta: float, K: int) -> PolyFamily:
    """Oracle: Stieltjes procedure with adaptive quadrature in t = zeta (x - 1)."""
    k2e = special.kve(2, zeta)

    def w_t(t):
        x = 1.0 + t / zeta
        return (x * x - 1.0) ** (ell + 0.5) * np.exp(-t) / ((2 * ell + 1) * k2e)

    t_hi = 60.0 + 4.0 * (K + ell + 2) * (1.0 + math.log1p((K + ell) / zeta)) + 2.0 * K * math.log(2.0 + 1.0 / zeta)

    def integral(fun):
        brk = [0.0, 1.0, 5.0, 20.0, 50.0]
        total = 0.0
        edges = [e for e in brk if e < t_hi] + [t_hi]
        for lo, hi in zip(edges[:-1], edges[1:]):
            v, _ = integrate.quad(fun, lo, hi, epsabs=0.0, epsrel=1e-13, limit=400)
            total += v
        return total

    # monic recurrence in the variable t, normalized as we go to avoid overflow
    alphas, betas = [], []
    norms = []

    def monic(t, k):
        p_prev, p = 0.0, 1.0
        for j in range(k):
            p_prev, p = p, (t - alphas[j]) * p - (betas[j] if j > 0 else 0.0) * p_prev
        return p

    for k in range(K + 1):
        nk = integral(lambda t: w_t(t) * monic(t, k) ** 2)
        tk = integral(lambda t: t * w_t(t) * monic(t, k) ** 2)
        alphas.append(tk / nk)
        betas.append(nk / norms[-1] if norms else nk)
        norms.append(nk)
    mu0 = norms[0]
    b = 1.0 + np.array(alphas) / zeta
    a = np.sqrt(np.array(betas[1:])) / zeta
    c = [1.0 / math.sqrt(mu0)]
    for k in range(K):
        c.append(c[-1] / a[k])
    return PolyFamily(ell, float(zeta), a, b, np.array(c), mu0)


def _batched_nodes(ell_max: int, zeta: np.ndarray, K: int, n_nodes: int):
    span = 60.0 + 4.0 * (K + ell_max + 2) * (1.0 + np.log1p((K + ell_max) / zeta))
    s_max = np.arccosh(1.0 + span / zeta)
    h = s_max / n_nodes
    s = h[:, None] * np.arange(1, n_nodes + 1)[None, :]
    return s, h


def batched_families(ells, zeta, Ks, n_nodes: int = 120) -> dict:
    """Vectorized (a, b, c) for several families sharing one set of nodes.

    Returns {l: (a, b, c)} with shapes (n, K_l), (n, K_l + 1), (n, K_l + 1).
    Lanczos on the discrete measure given by the trapezoid rule in x = cosh(s);
    the integrand sinh^(2l+2)(s) exp(-zeta (cosh s - 1)) is even and vanishes at s = 0.
    """
    zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
    ells = list(ells)
    Ks = list(Ks)
    K = max(Ks)
    s, h = _batched_nodes(max(ells), zeta, K, n_nodes)
    x = np.cosh(s)
    base = h[:, None] * np.sinh(s) ** 2 * np.exp(-zeta[:, None] * (x - 1.0))
    sh2 = np.sinh(s) ** 2
    w = np.stack([base * sh2**ell for ell in ells])  # (L, n, nodes)
    k2e = special.kve(2, zeta)
    mass = w.sum(axis=2)
    ell_arr = np.array(ells, dtype=float)[:, None]
    mu0 = zeta[None, :] * mass / ((2 * ell_arr + 1) * k2e[None, :])
    L, n = len(ells), len(zeta)
    a = np.empty((L, n, K))
    b = np.empty((L, n, K + 1))
    q_prev = np.zeros_like(w)
    q = np.broadcast_to(1.0 / np.sqrt(mass)[..., None], w.shape).copy()
    for k in range(K + 1):
        wq = w * q
        b[..., k] = np.einsum("lnj,lnj->ln", wq * x, q)
        if k == K:
            break
        r = (x - b[..., k : k + 1]) * q
        if k > 0:
            r -= a[..., k - 1 : k] * q_prev
        # one step of reorthogonalization against the last two vectors
        r -= np.einsum("lnj,lnj->ln", wq, r)[..., None] * q
        if k > 0:
            r -= np.einsum("lnj,lnj->ln", w * q_prev, r)[..., None] * q_prev
        a[..., k] = np.sqrt(np.einsum("lnj,lnj->ln", w * r, r))
        q_prev, q = q, r / a[..., k : k + 1]
    c = np.empty_like(b)
    c[..., 0] = 1.0 / np.sqrt(mu0)
    for k in range(K):
        c[..., k + 1] = c[..., k] / a[..., k]
    return {ell: (a[i, :, : Ks[i]], b[i, :, : Ks[i] + 1], c[i, :, : Ks[i] + 1]) for i, ell in enumerate(ells)}


def batched_coeffs(ell: int, zeta, K: int, n_nodes: int = 120):
    """Vectorized (a, b, c) for an array of zeta: shapes (n, K), (n, K+1), (n, K+1)."""
    return batched_families([ell], zeta, [K], n_nodes)[ell]


def eval_all(fam: PolyFamily, k_max: int, x) -> np.ndarray:
    """P_0..P_k_max at x, stacked on the first axis."""
    if k_max > fam.K:
        raise IndexError(f"degree {k_max} beyond family cap {fam.K}")
    x = np.asarray(x, dtype=float)
    out = np.empty((k_max + 1,) + x.shape)
    out[0] = fam.c[0]
    if k_max >= 1:
        out[1] = (x - fam.b[0]) * out[0] / fam.a[0]
    for k in range(1, k_max):
        out[k + 1] = ((x - fam.b[k]) * out[k] - fam.a[k - 1] * out[k - 1]) / fam.a[k]
    return out


def eval_poly(fam: PolyFamily, k: int, x):
    val = eval_all(fam, k, x)[k]
    return val if np.ndim(val) else float(val)


def eval_derivative_all(fam: PolyFamily, k_max: int, x) -> np.ndarray:
    """d/dx of P_0..P_k_max, by differentiating the recurrence."""
    x = np.asarray(x, dtype=float)
    P = eval_all(fam, k_max, x)
    D = np.zeros_like(P)
    if k_max >= 1:
        D[1] = P[0] / fam.a[0]
    for k in range(1, k_max):
        D[k + 1] = (P[k] + (x - fam.b[k]) * D[k] - fam.a[k - 1] * D[k - 1]) / fam.a[k]
    return D


def zeros(fam: PolyFamily, k: int) -> np.ndarray:
    """Zeros of P_k in increasing order (eigenvalues of the Jacobi matrix)."""
    if not 1 <= k <= fam.K:
        raise IndexError("zero index out of range")
    if k == 1:
        return np.array([fam.b[0]])
    return linalg.eigh_tridiagonal(fam.b[:k], fam.a[: k - 1], eigvals_only=True)


# ---------------------------------------------------------------- relations between families


def cross_arrays(ell: int, c, b, c_lower, b_lower, k_max: int):
    """Vectorized p, q, r, p~, q~, r~ (trailing axis = k) from leading coefficients and zero sums.

    ``c``, ``b`` belong to family l and ``c_lower``, ``b_lower`` to family l - 1; leading
    axes broadcast.  Returned arrays hold k = 0..k_max, except r which holds
    k = 0..k_max + 1 with r_0 = 0.
    """
    ratio = (2 * ell - 1) / (2 * ell + 1)
    zero = np.zeros(np.shape(b)[:-1] + (1,))
    S = np.concatenate([zero, np.cumsum(b, axis=-1)], axis=-1)  # S[k] = sum of zeros of P_k
    Sl = np.concatenate([zero, np.cumsum(b_lower, axis=-1)], axis=-1)
    ks = np.arange(k_max + 1)
    p = c_lower[..., ks] / c[..., ks]
    ptilde = ratio * c[..., ks] / c_lower[..., ks + 1]
    q = ptilde * (Sl[..., ks + 2] - S[..., ks])
    qtilde = Sl[..., ks + 1] - S[..., ks]
    r = np.concatenate([zero, ratio * c[..., ks] / c_lower[..., ks + 2]], axis=-1)
    rtilde = p * (1.0 - ptilde**2 / ratio)
    return p, q, r, ptilde, qtilde, rtilde


def cross_coeffs(fam: PolyFamily, fam_lower: PolyFamily) -> CrossCoeffs:
    """p, q, r, p~, q~, r~ coupling family l (``fam``) to family l - 1.

    Index ranges: k = 0..min(K_l, K_{l-1} - 2) for all but r, which has one more
    entry and r_0 = 0.
    """
    ell = fam.ell
    if ell < 1 or fam_lower.ell != ell - 1:
        raise ValueError("families must be l and l - 1 with l >= 1")
    if abs(fam.zeta - fam_lower.zeta) > 1e-15 * fam.zeta:
        raise ValueError("families must share zeta")
    k_max = min(fam.K, fam_lower.K - 2)
    if k_max < 0:
        raise ValueError("lower family needs at least two more degrees")
    return CrossCoeffs(ell, *cross_arrays(ell, fam.c, fam.b, fam_lower.c, fam_lower.b, k_max))


def _rel(lhs, terms):
    scale = np.abs(lhs) + sum(np.abs(t) for t in terms)
    return float(np.max(np.abs(lhs - sum(terms)) / np.maximum(scale, 1e-300)))


def recurrence_residuals(fam: PolyFamily, fam_lower: PolyFamily, k: int, x) -> dict:
    """Relative residuals, at points x, of the recurrences linking degree k of families l and l - 1.

    With s = (2l-1)/(2l+1), upper P = P^(l) and lower Q = P^(l-1):

    * three_term:        x P_k = a_{k-1} P_{k-1} + b_k P_k + a_k P_{k+1}
    * upper_in_lower:    s (x^2-1) P_k = p_k Q_k + q_k Q_{k+1} + r_{k+1} Q_{k+2}
    * lower_in_upper:    Q_{k+1} = r_k P_{k-1} + q_k P_k + p_{k+1} P_{k+1}
    * upper_in_lower_x:  s (x^2-1) P_k = p~_k (x + q~_k) Q_{k+1} + r~_k Q_k
    * lower_in_upper_x:  Q_{k+1} = s/p~_k (x - q~_k) P_k - (a^(l)_{k-1} / a^(l-1)_k) r~_k P_{k-1}

    Each residual is |lhs - rhs| divided by the sum of the magnitudes of all terms.
    """
    cc = cross_coeffs(fam, fam_lower)
    if k + 1 > len(cc.p) - 1:
        raise IndexError("degree too high for the available families")
    s = (2 * fam.ell - 1) / (2 * fam.ell + 1)
    x = np.asarray(x, dtype=float)
    P = eval_all(fam, k + 1, x)
    Q = eval_all(fam_lower, k + 2, x)
    Pm = P[k - 1] if k >= 1 else np.zeros_like(x)
    am = fam.a[k - 1] if k >= 1 else 0.0
    lhs = s * (x * x - 1.0) * P[k]
    return {
        "three_term": _rel(x * P[k], [am * Pm, fam.b[k] * P[k], fam.a[k] * P[k + 1]]),
        "upper_in_lower": _rel(lhs, [cc.p[k] * Q[k], cc.q[k] * Q[k + 1], cc.r[k + 1] * Q[k + 2]]),
        "lower_in_upper": _rel(Q[k + 1], [cc.r[k] * Pm, cc.q[k] * P[k], cc.p[k + 1] * P[k + 1]]),
        "upper_in_lower_x": _rel(lhs, [cc.ptilde[k] * (x + cc.qtilde[k]) * Q[k + 1], cc.rtilde[k] * Q[k]]),
        "lower_in_upper_x": _rel(
            Q[k + 1], [s / cc.ptilde[k] * (x - cc.qtilde[k]) * P[k], -(am / fam_lower.a[k]) * cc.rtilde[k] * Pm]
        ),
    }


def d_dzeta(fam: PolyFamily, k: int, x):
    """Right-hand side of dP_k/dzeta = a_{k-1} P_{k-1} - (G - 1/zeta - b_k) P_k / 2."""
    P = eval_all(fam, k, x)
    G = g_ratio(fam.zeta)
    val = -0.5 * (G - 1.0 / fam.zeta - fam.b[k]) * P[k]
    if k >= 1:
        val = val + fam.a[k - 1] * P[k - 1]
    return val


def d_dx_relations(fam: PolyFamily, fam_lower: PolyFamily, k: int, x):
    """Both sides of the two x-derivative identities between families l and l - 1.

    Returns ((lhs0, rhs0), (lhs1, rhs1)) for

      d/dx P_{k+1}^(l-1) = (2l-1)/(2l+1) (k+1)/p~_k P_k^(l) + zeta r_k P_{k-1}^(l)
      (2l-1)/(2l+1) (x^2-1) d/dx P_k^(l) + (2l-1) x P_k^(l)
            = (k+2l+1) p~_k P_{k+1}^(l-1) + zeta p_k P_k^(l-1)
    """
    ell, z = fam.ell, fam.zeta
    cc = cross_coeffs(fam, fam_lower)
    ratio = (2 * ell - 1) / (2 * ell + 1)
    x = np.asarray(x, dtype=float)
    P = eval_all(fam, k, x)
    dP = eval_derivative_all(fam, k, x)
    Pl = eval_all(fam_lower, k + 1, x)
    dPl = eval_derivative_all(fam_lower, k + 1, x)
    lhs0 = dPl[k + 1]
    rhs0 = ratio * (k + 1) / cc.ptilde[k] * P[k]
    if k >= 1:
        rhs0 = rhs0 + z * cc.r[k] * P[k - 1]
    lhs1 = ratio * (x * x - 1.0) * dP[k] + (2 * ell - 1) * x * P[k]
    rhs1 = (k + 2 * ell + 1) * cc.ptilde[k] * Pl[k + 1] + z * cc.p[k] * Pl[k]
    return (lhs0, rhs0), (lhs1, rhs1)


# ---------------------------------------------------------------- ultra-relativistic limit


def laguerre_coeffs(alpha: float, K: int):
    """Orthonormal generalized Laguerre recurrence: b_k = 2k + alpha + 1, a_k = sqrt((k+1)(k+1+alpha))."""
    k = np.arange(K + 1, dtype=float)
    b = 2.0 * k + alpha + 1.0
    a = np.sqrt((k[:-1] + 1.0) * (k[:-1] + 1.0 + alpha))
    return a, b


def ultra_limit_family(ell: int, zeta: float, K: int) -> PolyFamily:
    """Family for the weight zeta^3 x^(2l+1) exp(-zeta x) / (2l+1) on (0, inf).

    Built from its own closed-form moments, mu_n = zeta^(2-n) (2l+1+n)! / (2l+1),
    through the Chebyshev algorithm in t = zeta x.
    """
    n = K + 1
    with mp.workdps(40 + 4 * n):
        z = mp.mpf(zeta)
        mt = [mp.factorial(2 * ell + 1 + j) for j in range(2 * n)]  # moments of t^j e^-t t^(2l+1)
        alpha, beta = _chebyshev(mt, n)
        b = np.array([float(al / z) for al in alpha])
        a = np.array([float(mp.sqrt(be) / z) for be in beta[1:]])
        mu0 = z**2 * mp.factorial(2 * ell + 1) / (2 * ell + 1)
        c = [1 / mp.sqrt(mu0)]
        for k in range(K):
            c.append(c[-1] * z / mp.sqrt(beta[k + 1]))
        c = np.array([float(v) for v in c])
    return PolyFamily(ell, float(zeta), a, b, c, float(mu0))
