"""Real spherical harmonics Y_{l,m}(y, phi) normalized to 4 pi / (2l + 1).

Y_{l,m} = sqrt(2) C_l^|m|(y) sin(|m| phi)   for m < 0
        = C_l^0(y)                          for m = 0
        = sqrt(2) C_l^m(y) cos(m phi)       for m > 0

with C_l^m = sqrt((l-m)!/(l+m)!) P_l^m (Condon-Shortley phase included).
Arrays indexed by harmonic use the slot m + l_max on the second axis.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "legendre_normalized",
    "all_Y",
    "eval_Y",
    "all_dY_dy",
    "h",
    "htilde",
    "hhat",
    "sign_s",
    "sign_stilde",
    "sign_shat",
    "sign_scheck",
    "multiplication_tables",
    "verify_recurrences",
    "verify_derivatives",
]


def _sgn(m: int) -> int:
    return 1 if m >= 0 else -1


def h(ell: int, m: int) -> float:
    v = (ell + m) * (ell - m)
    return float(np.sqrt(v)) if v > 0 else 0.0


def htilde(L: int, m: int) -> float:
    """h~_{L,m} = sqrt((L+m)(L+m+1)), i.e. h~_{l-1,m} = sqrt((l+m-1)(l+m))."""
    v = (L + m) * (L + m + 1)
    return float(np.sqrt(v)) if v > 0 else 0.0


def hhat(ell: int, m: int) -> float:
    v = (ell + m) * (ell - m + 1)
    return float(np.sqrt(v)) if v > 0 else 0.0


def sign_s(m: int) -> float:
    return _sgn(m) * np.sqrt((m == -1) + (m == 0) + 1.0)


def sign_stilde(m: int) -> float:
    return float(_sgn(m) * (m != 0) * (m != 1))


def sign_shat(m: int) -> float:
    return _sgn(m) * (m != -1) * np.sqrt((m == 0) + 1.0)


def sign_scheck(m: int) -> float:
    return _sgn(m) * (m != 0) * np.sqrt((m == 1) + 1.0)


def legendre_normalized(L: int, y) -> np.ndarray:
    """C_l^m(y) for 0 <= m <= l <= L, shape (L+1, L+1) + y.shape, zero where m > l.

    Diagonal seed C_m^m = -sqrt((2m-1)/(2m)) sqrt(1-y^2) C_{m-1}^{m-1}, then upward in l.
    """
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) > 1.0):
        raise ValueError("|y| must not exceed 1")
    out = np.zeros((L + 1, L + 1) + y.shape)
    s = np.sqrt(np.clip(1.0 - y * y, 0.0, None))
    diag = np.ones_like(y)
    for m in range(L + 1):
        if m > 0:
            diag = -np.sqrt((2 * m - 1) / (2 * m)) * s * diag
        out[m, m] = diag
        if m + 1 <= L:
            out[m + 1, m] = np.sqrt(2 * m + 1) * y * diag
        for ell in range(m + 2, L + 1):
            out[ell, m] = (
                (2 * ell - 1) * y * out[ell - 1, m]
                - np.sqrt((ell + m - 1) * (ell - m - 1)) * out[ell - 2, m]
            ) / np.sqrt((ell - m) * (ell + m))
    return out


def _assemble(L, C, phi):
    phi = np.asarray(phi, dtype=float)
    out = np.zeros((L + 1, 2 * L + 1) + np.broadcast(C[0, 0], phi).shape)
    r2 = np.sqrt(2.0)
    for ell in range(L + 1):
        out[ell, L] = C[ell, 0]
        for m in range(1, ell + 1):
            out[ell, L + m] = r2 * C[ell, m] * np.cos(m * phi)
            out[ell, L - m] = r2 * C[ell, m] * np.sin(m * phi)
    return out


def all_Y(L: int, y, phi) -> np.ndarray:
    """Y_{l,m}(y, phi) for l <= L, shape (L+1, 2L+1) + broadcast shape; slot m + L."""
    return _assemble(L, legendre_normalized(L, y), phi)


def eval_Y(ell: int, m: int, y, phi):
    if abs(m) > ell or ell < 0:
        return np.zeros(np.broadcast(np.asarray(y), np.asarray(phi)).shape)
    return all_Y(ell, y, phi)[ell, m + ell]


def all_dY_dy(L: int, y, phi) -> np.ndarray:
    """d/dy Y_{l,m} from (1-y^2) dC_l^m/dy = h_{l,m} C_{l-1}^m - l y C_l^m (|y| < 1)."""
    y = np.asarray(y, dtype=float)
    C = legendre_normalized(L, y)
    dC = np.zeros_like(C)
    w = 1.0 - y * y
    for ell in range(L + 1):
        for m in range(ell + 1):
            prev = C[ell - 1, m] if ell >= 1 else 0.0
            dC[ell, m] = (h(ell, m) * prev - ell * y * C[ell, m]) / w
    return _assemble(L, dC, phi)


def multiplication_tables(L: int):
    """Coefficients of direction cosines times harmonics.

    Returns (up, down), each of shape (3, L+1, 2L+1, 2L+3):
    I_c Y_{l,m} = sum_m' up[c, l, m, m'] Y_{l+1,m'} + down[c, l, m, m'] Y_{l-1,m'},
    with c = 0, 1, 2 for the Cartesian directions x, y, z, i.e. I_1, I_2 and I_0.
    The m slot is m + L and the m' slot is m' + L + 1.  Entries that would name
    an index outside |m'| <= l +- 1 vanish.
    """
    up = np.zeros((3, L + 1, 2 * L + 3, 2 * L + 3))
    down = np.zeros_like(up)
    o = L + 1  # slot offset so that m' = +-(L+1) fits

    def put(tab, c, ell, m, mp_, lev, val):
        if abs(mp_) <= lev and lev >= 0:
            tab[c, ell, m + o, mp_ + o] += val

    for ell in range(L + 1):
        inv = 1.0 / (2 * ell + 1)
        for m in range(-ell, ell + 1):
            # z: I_0
            put(up, 2, ell, m, m, ell + 1, h(ell + 1, m) * inv)
            put(down, 2, ell, m, m, ell - 1, h(ell, m) * inv)
            # x: I_1
            f = 0.5 * inv
            sc, sh = sign_scheck(m), sign_shat(m)
            put(up, 0, ell, m, m - 1, ell + 1, f * sc * htilde(ell + 1, -m))
            put(down, 0, ell, m, m - 1, ell - 1, -f * sc * htilde(ell - 1, m))
            put(up, 0, ell, m, m + 1, ell + 1, -f * sh * htilde(ell + 1, m))
            put(down, 0, ell, m, m + 1, ell - 1, f * sh * htilde(ell - 1, -m))
            # y: I_2
            ss, st = sign_s(m), sign_stilde(m)
            put(down, 1, ell, m, -m - 1, ell - 1, f * ss * htilde(ell - 1, -m))
            put(up, 1, ell, m, -m - 1, ell + 1, -f * ss * htilde(ell + 1, m))
            put(down, 1, ell, m, -m + 1, ell - 1, f * st * htilde(ell - 1, m))
            put(up, 1, ell, m, -m + 1, ell + 1, -f * st * htilde(ell + 1, -m))
    return up[:, :, 1:-1, :], down[:, :, 1:-1, :]


def _Y_or_zero(Y, L, ell, m):
    if ell < 0 or ell > L or abs(m) > ell:
        return 0.0
    return Y[ell, m + L]


def verify_recurrences(ell: int, m: int, y, phi) -> dict:
    """Residuals of the three multiplication identities at (y, phi)."""
    L = ell + 1
    Y = all_Y(L, y, phi)
    s1 = np.sqrt(1.0 - np.asarray(y) ** 2)
    I0, I1, I2 = y, s1 * np.cos(phi), s1 * np.sin(phi)
    Yv = lambda l, mm: _Y_or_zero(Y, L, l, mm)
    inv = 1.0 / (2 * ell + 1)
    r0 = I0 * Yv(ell, m) - inv * (h(ell + 1, m) * Yv(ell + 1, m) + h(ell, m) * Yv(ell - 1, m))
    r1 = I1 * Yv(ell, m) - 0.5 * inv * (
        sign_scheck(m) * (htilde(ell + 1, -m) * Yv(ell + 1, m - 1) - htilde(ell - 1, m) * Yv(ell - 1, m - 1))
        - sign_shat(m) * (htilde(ell + 1, m) * Yv(ell + 1, m + 1) - htilde(ell - 1, -m) * Yv(ell - 1, m + 1))
    )
    r2 = I2 * Yv(ell, m) - 0.5 * inv * (
        sign_s(m) * (htilde(ell - 1, -m) * Yv(ell - 1, -m - 1) - htilde(ell + 1, m) * Yv(ell + 1, -m - 1))
        + sign_stilde(m) * (htilde(ell - 1, m) * Yv(ell - 1, -m + 1) - htilde(ell + 1, -m) * Yv(ell + 1, -m + 1))
    )
    return {"I0": np.max(np.abs(r0)), "I1": np.max(np.abs(r1)), "I2": np.max(np.abs(r2))}


def verify_derivatives(ell: int, m: int, y, phi, dY=None) -> dict:
    """Residuals of the eight derivative identities at (y, phi), |y| < 1.

    ``dY`` may supply d/dy Y_{l,m} from elsewhere (e.g. finite differences);
    by default the analytic Legendre derivative is used.
    """
    y = np.asarray(y, dtype=float)
    phi = np.asarray(phi, dtype=float)
    L = ell + 1
    Y = all_Y(L, y, phi)
    Yv = lambda l, mm: _Y_or_zero(Y, L, l, mm)
    d = all_dY_dy(L, y, phi)[ell, m + L] if dY is None else dY
    s1 = np.sqrt(1.0 - y * y)
    I0, I1, I2 = y, s1 * np.cos(phi), s1 * np.sin(phi)
    It0, It1, It2 = y * y - 1.0, y * s1 * np.cos(phi), y * s1 * np.sin(phi)
    Ih1, Ih2 = np.sin(phi) / s1, -np.cos(phi) / s1
    Ih3, Ih4 = y * np.sin(phi) / s1, -y * np.cos(phi) / s1
    Ym, Ymm = Yv(ell, m), Yv(ell, -m)
    sc, sh, ss, st = sign_scheck(m), sign_shat(m), sign_s(m), sign_stilde(m)
    res = {}
    res["0"] = It0 * d - ell * I0 * Ym + h(ell, m) * Yv(ell - 1, m)
    res["01"] = It0 * d + (ell + 1) * I0 * Ym - h(ell + 1, m) * Yv(ell + 1, m)
    res["1"] = It1 * d - ell * I1 * Ym - m * Ih1 * Ymm - 0.5 * (
        sc * htilde(ell - 1, m) * Yv(ell - 1, m - 1) - sh * htilde(ell - 1, -m) * Yv(ell - 1, m + 1)
    )
    res["2"] = It2 * d - ell * I2 * Ym - m * Ih2 * Ymm + 0.5 * (
        st * htilde(ell - 1, m) * Yv(ell - 1, -m + 1) + ss * htilde(ell - 1, -m) * Yv(ell - 1, -m - 1)
    )
    res["11"] = It1 * d + (ell + 1) * I1 * Ym - m * Ih1 * Ymm - 0.5 * (
        sc * htilde(ell + 1, -m) * Yv(ell + 1, m - 1) - sh * htilde(ell + 1, m) * Yv(ell + 1, m + 1)
    )
    res["21"] = It2 * d + (ell + 1) * I2 * Ym - m * Ih2 * Ymm + 0.5 * (
        st * htilde(ell + 1, -m) * Yv(ell + 1, -m + 1) + ss * htilde(ell + 1, m) * Yv(ell + 1, -m - 1)
    )
    res["3"] = I1 * d - m * Ih3 * Ymm - 0.5 * (
        sc * hhat(ell, m) * Yv(ell, m - 1) - sh * hhat(ell, -m) * Yv(ell, m + 1)
    )
    res["4"] = I2 * d - m * Ih4 * Ymm + 0.5 * (
        st * hhat(ell, m) * Yv(ell, -m + 1) + ss * hhat(ell, -m) * Yv(ell, -m - 1)
    )
    return {k: float(np.max(np.abs(v))) for k, v in res.items()}
