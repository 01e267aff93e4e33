"""Modified Bessel functions of the second kind for integer order.

K_0 and K_1 come from the ascending series for small arguments and from
Steed's continued fraction (Temme's CF2) otherwise; higher orders follow by
upward recurrence, which is forward stable for K.  Everything is vectorized
over the argument.
"""
from __future__ import annotations

import numpy as np
from scipy import integrate

NU_MAX = 64
EULER_GAMMA = 0.57721566490153286061

__all__ = [
    "NU_MAX",
    "bessel_k",
    "bessel_k_all",
    "bessel_k_quadrature",
    "g_ratio",
    "g_ratio_derivative",
    "bessel_k_derivative",
    "theta_from_energy_ratio",
]


def _as_positive(zeta) -> np.ndarray:
    z = np.asarray(zeta, dtype=float)
    if np.any(~np.isfinite(z)) or np.any(z <= 0):
        raise ValueError("Bessel argument must be positive and finite")
    return z


def _k01_series(x):
    # Ascending series, valid for x < 2 (converges everywhere, but cancels for large x).
    q = 0.25 * x * x
    lg = np.log(0.5 * x) + EULER_GAMMA
    term0 = np.ones_like(x)
    term1 = np.ones_like(x)
    i0 = np.zeros_like(x)
    i1 = np.zeros_like(x)
    s0 = np.zeros_like(x)
    s1 = np.zeros_like(x)
    harm = 0.0
    for k in range(30):
        if k > 0:
            term0 = term0 * q / (k * k)
            term1 = term1 * q / (k * (k + 1))
            harm += 1.0 / k
        i0 += term0
        i1 += term1
        s0 += term0 * harm
        # psi(k+1) + psi(k+2) + 2*gamma = 2*H_k + 1/(k+1)
        s1 += term1 * (2.0 * harm + 1.0 / (k + 1))
    k0 = -lg * i0 + s0
    i1 = 0.5 * x * i1
    k1 = 1.0 / x + lg * i1 - 0.25 * x * s1
    return k0, k1


def _k01_scaled_cf2(x):
    # Steed's method for the continued fraction CF2; returns e^x K_0, e^x K_1.
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25
    q = np.full_like(x, a1)
    c = np.full_like(x, a1)
    a = -a1
    s = 1.0 + q * delh
    for i in range(1, 20000):
        a -= 2 * i
        c = -a * c / (i + 1.0)
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        if np.all(np.abs(dels) < 1e-17 * np.abs(s)):
            break
    else:
        raise ArithmeticError("continued fraction for K_0, K_1 did not converge")
    h = a1 * h
    k0 = np.sqrt(np.pi / (2.0 * x)) / s
    k1 = k0 * (x + 0.5 - h) / x
    return k0, k1


def _k01_scaled(z):
    k0 = np.empty_like(z)
    k1 = np.empty_like(z)
    small = z < 2.0
    if np.any(small):
        zs = z[small]
        a, b = _k01_series(zs)
        e = np.exp(zs)
        k0[small] = a * e
        k1[small] = b * e
    if np.any(~small):
        a, b = _k01_scaled_cf2(z[~small])
        k0[~small] = a
        k1[~small] = b
    return k0, k1


def bessel_k_all(nu_max: int, zeta, scaled: bool = False) -> np.ndarray:
    """Return K_0..K_nu_max at zeta, stacked along the first axis.

    With ``scaled=True`` the values are multiplied by exp(zeta), which keeps
    them representable for large arguments.
    """
    if not 0 <= int(nu_max) <= NU_MAX:
        raise ValueError(f"order must lie in [0, {NU_MAX}]")
    nu_max = int(nu_max)
    z = _as_positive(zeta)
    shape = z.shape
    z = np.atleast_1d(z).astype(float)
    k0, k1 = _k01_scaled(z)
    out = np.empty((nu_max + 1,) + z.shape)
    out[0] = k0
    if nu_max >= 1:
        out[1] = k1
    with np.errstate(over="ignore"):
        for nu in range(1, nu_max):
            out[nu + 1] = out[nu - 1] + 2.0 * nu / z * out[nu]
        if not scaled:
            out = out * np.exp(-z)
    if not np.all(np.isfinite(out)):
        raise OverflowError(f"K_nu overflows for nu <= {nu_max} at the smallest zeta given")
    return out.reshape((nu_max + 1,) + shape)


def bessel_k(nu: int, zeta, scaled: bool = False):
    """K_nu(zeta) for integer nu >= 0 (optionally times exp(zeta))."""
    if int(nu) != nu or nu < 0:
        raise ValueError("order must be a nonnegative integer")
    val = bessel_k_all(int(max(nu, 1)), zeta, scaled=scaled)[int(nu)]
    return val if np.ndim(val) else float(val)


def bessel_k_derivative(nu: int, zeta, scaled: bool = False):
    """d K_nu / d zeta = -(K_{nu-1} + K_{nu+1}) / 2 (scaled by exp(zeta) if requested)."""
    ks = bessel_k_all(int(nu) + 1, zeta, scaled=scaled)
    lower = ks[1] if nu == 0 else ks[nu - 1]
    val = -0.5 * (lower + ks[nu + 1])
    return val if np.ndim(val) else float(val)


def g_ratio(zeta):
    """G(zeta) = K_3(zeta) / K_2(zeta)."""
    ks = bessel_k_all(3, zeta, scaled=True)
    val = ks[3] / ks[2]
    return val if np.ndim(val) else float(val)


def g_ratio_derivative(zeta):
    ks = bessel_k_all(4, zeta, scaled=True)
    k2 = ks[2]
    val = (-(ks[2] + ks[4]) * k2 + ks[3] * (ks[1] + ks[3])) / (2.0 * k2 * k2)
    return val if np.ndim(val) else float(val)


def bessel_k_quadrature(nu: int, zeta: float, scaled: bool = False) -> float:
    """Independent reference: adaptive quadrature of the integral definition.

    The integrand cosh(nu t) exp(-zeta (cosh t - 1)) is truncated where it falls
    below 1e-20.
    """
    zeta = float(zeta)
    if zeta <= 0:
        raise ValueError("Bessel argument must be positive")

    def f(t):
        return np.exp(nu * t - zeta * (np.cosh(t) - 1.0)) * 0.5 * (1.0 + np.exp(-2.0 * nu * t))

    # walk out to the truncation point
    t_hi = 1.0
    while f(t_hi) >= 1e-20 or (nu > 0 and t_hi < np.arcsinh(nu / zeta) + 1.0):
        t_hi *= 1.5
    peak = np.arcsinh(nu / zeta) if nu > 0 else 0.0
    pts = [p for p in (peak,) if 0 < p < t_hi]
    val, _ = integrate.quad(f, 0.0, t_hi, points=pts or None, epsabs=0.0, epsrel=2e-14, limit=400)
    return val if scaled else val * np.exp(-zeta)


def theta_from_energy_ratio(ratio, tol: float = 1e-14, max_iter: int = 200):
    """Solve G(1/theta) - theta = ratio for theta by safeguarded Newton iteration.

    The bracket comes from 5 theta / 2 + 1 < G(1/theta) < 2(6 theta^2 + 4 theta + 1)/(3 theta + 2),
    which gives 3 theta / 2 + 1 < G - theta < 3 theta + 1 (the upper one up to a
    vanishing correction), so theta lies in ((ratio - 1)/3, 2 (ratio - 1)/3].
    Newton steps that leave the current bracket are replaced by bisection.
    """
    r = np.asarray(ratio, dtype=float)
    if np.any(r <= 1.0):
        raise ValueError("energy per particle must exceed the rest mass")
    lo = (r - 1.0) / 3.0 * (1.0 - 1e-12)
    hi = 2.0 * (r - 1.0) / 3.0 * (1.0 + 1e-12)
    f_lo = g_ratio(1.0 / lo) - lo - r
    f_hi = g_ratio(1.0 / hi) - hi - r
    if np.any(f_lo > 0) or np.any(f_hi < 0):
        raise ArithmeticError("temperature root not bracketed")
    theta = 0.5 * (lo + hi)
    for _ in range(max_iter):
        z = 1.0 / theta
        f = g_ratio(z) - theta - r
        up = f > 0
        hi = np.where(up, theta, hi)
        lo = np.where(up, lo, theta)
        slope = -(z**2) * g_ratio_derivative(z) - 1.0  # d/dtheta of G(1/theta) - theta, positive
        new = theta - f / slope
        inside = (new > lo) & (new < hi)
        new = np.where(inside, new, 0.5 * (lo + hi))
        done = np.abs(new - theta) <= tol * new
        theta = new
        if np.all(done):
            break
    return theta if np.ndim(theta) else float(theta)
