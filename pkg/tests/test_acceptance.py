"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line for the summary.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary section
"acceptance criteria" lists every criterion with its measured values.
"""
import time

import numpy as np
import pytest
from scipy import integrate, special

from relmoments import analysis, basis, harmonics, moment_assembly as ma, orthopoly, quasi1d
from relmoments.frame_kinematics import FluidState, InadmissibleError, recover_state
from relmoments.special_functions import g_ratio

ZETAS = (0.1, 1.0, 10.0, 100.0)


def _closed_forms(z, x):
    G = g_ratio(z)
    d1 = G * G - 5 * G / z + 4 / z**2 - 1
    m0 = G - 4 / z
    P00 = np.full_like(x, 1 / np.sqrt(m0))
    P10 = np.sqrt(m0) / np.sqrt(d1) * (x - 1 / m0)
    lead = z * np.sqrt(d1) / (np.sqrt(3) * np.sqrt(2 * G**3 - 13 * G**2 / z - 2 * G + 20 * G / z**2 + 3 / z))
    P20 = lead * (x**2 - 3 * (G * G - 4 * G / z - 1) / (z * d1) * x - (G * G - 5 * G / z + 1 / z**2 - 1) / d1)
    P01 = np.full_like(x, np.sqrt(z))
    P11 = np.sqrt(z) / np.sqrt(-G * G + 5 * G / z + 1) * (x - G)
    P02 = np.full_like(x, z / np.sqrt(3 * G))
    return {(0, 0): P00, (0, 1): P10, (0, 2): P20, (1, 0): P01, (1, 1): P11, (2, 0): P02}


def test_01_closed_forms(record):
    t0 = time.perf_counter()
    worst = 0.0
    for z in (0.1, 1.0, 10.0):
        x = np.array([1.05, 1.5, 3.0, 10.0, 40.0])
        fams = {ell: orthopoly.family(ell, z, 3) for ell in range(3)}
        for (ell, k), ref in _closed_forms(z, x).items():
            val = orthopoly.eval_all(fams[ell], k, x)[k]
            worst = max(worst, float(np.max(np.abs(val / ref - 1))))
    dt = time.perf_counter() - t0
    ok = worst < 1e-9 and dt < 1.0
    record(1, "closed-form low-order polynomials", ok, f"max rel err {worst:.2e}, {dt:.2f} s")
    assert ok


def _gram(fam, K):
    """Independent Gauss-generalized-Laguerre Gram matrix of P_0..P_K (x = 1 + t / zeta)."""
    ell, z = fam.ell, fam.zeta
    t, w = special.roots_genlaguerre(200, ell + 0.5)
    x = 1.0 + t / z
    smooth = (2.0 + t / z) ** (ell + 0.5) * z ** -(ell + 0.5)
    wt = w * smooth / ((2 * ell + 1) * special.kve(2, z))
    P = orthopoly.eval_all(fam, K, x)
    return (P * wt) @ P.T


def test_02_orthonormality_and_recurrences(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    gram_worst, rec_worst = 0.0, {}
    for z in ZETAS:
        fams = {ell: orthopoly.family(ell, z, 12) for ell in range(7)}
        for ell in range(7):
            G = _gram(fams[ell], 8)
            gram_worst = max(gram_worst, float(np.abs(G - np.eye(9)).max()))
        x = 1.0 + rng.uniform(0, 1, 20) * (30 / z + 10)
        for ell in range(1, 7):
            for k in range(9):
                for name, v in orthopoly.recurrence_residuals(fams[ell], fams[ell - 1], k, x).items():
                    rec_worst[name] = max(rec_worst.get(name, 0.0), v)
        f0 = fams[0]
        P = orthopoly.eval_all(f0, 9, x)
        for k in range(9):
            terms = [f0.a[k - 1] * P[k - 1] if k else 0.0 * x, f0.b[k] * P[k], f0.a[k] * P[k + 1]]
            r = np.abs(x * P[k] - sum(terms)) / (np.abs(x * P[k]) + sum(np.abs(t) for t in terms))
            rec_worst["three_term"] = max(rec_worst["three_term"], float(r.max()))
    dt = time.perf_counter() - t0
    ok = gram_worst < 1e-10 and max(rec_worst.values()) < 1e-9 and dt < 30
    detail = f"Gram {gram_worst:.1e}, " + ", ".join(f"{k} {v:.1e}" for k, v in rec_worst.items()) + f", {dt:.1f} s"
    record(2, "orthonormality and recurrences", ok, detail)
    assert ok


def _strictly_interlace(inner, outer) -> bool:
    """outer has one more point than inner and separates it strictly."""
    return bool(np.all(outer[:-1] < inner) and np.all(inner < outer[1:]))


def test_03_zeros_and_positivity(record):
    t0 = time.perf_counter()
    fails, weak_fails = [], []
    for z in ZETAS:
        fams = {ell: orthopoly.family(ell, z, 12) for ell in range(7)}
        shifted = {ell: orthopoly.family(ell, z + 1e-4, 10) for ell in range(7)}
        for ell in range(7):
            f = fams[ell]
            if not (np.all(f.a > 0) and np.all(f.b > 0) and np.all(f.c > 0)):
                fails.append(("coefficients positive", z, ell))
            for k in range(1, 9):
                xk, xk1 = orthopoly.zeros(f, k), orthopoly.zeros(f, k + 1)
                if not _strictly_interlace(xk, xk1):
                    fails.append(("interlacing within family", z, ell, k))
                if not xk[0] > 1:
                    fails.append(("zeros exceed one", z, ell, k))
                if not np.all(orthopoly.zeros(shifted[ell], k) < xk):
                    fails.append(("zeros decrease with zeta", z, ell, k))
                if ell >= 1:
                    lower = orthopoly.zeros(fams[ell - 1], k + 1)
                    if not (lower[0] > 1 and _strictly_interlace(xk, lower)):
                        fails.append(("interlacing across families", z, ell, k))
            if ell >= 1:
                cc = orthopoly.cross_coeffs(f, fams[ell - 1])
                if min(cc.p.min(), cc.q.min(), cc.r[1:].min(), cc.ptilde.min(), cc.qtilde.min(), cc.rtilde.min()) <= 0:
                    fails.append(("cross coefficients positive", z, ell))
                lead = fams[ell - 1].c[1:10] / f.c[:9]
                if not np.all(lead > np.sqrt((2 * ell + 1) / (2 * ell - 1))):
                    fails.append(("leading-coefficient inequality", z, ell))
                # the weaker bound equivalent to r~ > 0
                if not np.all(lead > np.sqrt((2 * ell - 1) / (2 * ell + 1))):
                    weak_fails.append((z, ell))
    dt = time.perf_counter() - t0
    ok = not fails and dt < 30
    kinds = sorted({f[0] for f in fails})
    detail = f"{len(fails)} violations {kinds}, bound from r~ > 0 violated {len(weak_fails)}x, {dt:.1f} s"
    record(3, "zero interlacing, monotonicity, positivity", ok, detail)
    assert ok, fails[:5]


def test_04_derivative_identities(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    h = 1e-5
    worst = {"d/dzeta": 0.0, "d/dx across families": 0.0, "basis derivatives": 0.0}
    for _ in range(20):
        ell = int(rng.integers(1, 6))
        k = int(rng.integers(0, 7))
        z = float(np.exp(rng.uniform(np.log(0.2), np.log(20))))
        x = 1.0 + rng.uniform(0.05, 1.0, 5) * (10 / z + 3)
        fam = orthopoly.family(ell, z, 10)
        fp, fm = orthopoly.family(ell, z + h, 10), orthopoly.family(ell, z - h, 10)
        fd = (orthopoly.eval_all(fp, k, x)[k] - orthopoly.eval_all(fm, k, x)[k]) / (2 * h)
        rhs = orthopoly.d_dzeta(fam, k, x)
        worst["d/dzeta"] = max(worst["d/dzeta"], float(np.max(np.abs(fd - rhs) / (1 + np.abs(rhs)))))
        lower = orthopoly.family(ell - 1, z, 12)
        cc = orthopoly.cross_coeffs(fam, lower)
        s = (2 * ell - 1) / (2 * ell + 1)
        hx = 1e-6 * x

        def dx(f, kk):
            return (orthopoly.eval_all(f, kk, x + hx)[kk] - orthopoly.eval_all(f, kk, x - hx)[kk]) / (2 * hx)

        P = orthopoly.eval_all(fam, k, x)
        Q = orthopoly.eval_all(lower, k + 1, x)
        rhs0 = s * (k + 1) / cc.ptilde[k] * P[k] + (z * cc.r[k] * P[k - 1] if k else 0.0)
        lhs1 = s * (x * x - 1) * dx(fam, k) + (2 * ell - 1) * x * P[k]
        rhs1 = (k + 2 * ell + 1) * cc.ptilde[k] * Q[k + 1] + z * cc.p[k] * Q[k]
        r0 = np.abs(dx(lower, k + 1) - rhs0) / (1 + np.abs(rhs0))
        r1 = np.abs(lhs1 - rhs1) / (1 + np.abs(rhs1))
        worst["d/dx across families"] = max(worst["d/dx across families"], float(max(r0.max(), r1.max())))
        # basis derivatives with respect to u_i and theta at fixed lab momentum
        M = int(rng.integers(1, 4))
        st, _ = analysis.random_admissible_state(rng, M, speed=0.7)
        C = ma.basis_derivatives(M, st)
        p = rng.standard_normal((4, 3)) * 2 * st.theta
        Pb = basis.eval_basis(M + 1, st, p)
        w = 1 + int(rng.integers(0, 4))
        e = np.zeros(3)
        if w <= 3:
            e[w - 1] = h
            sp = FluidState(st.n, tuple(np.add(st.u, e)), st.theta)
            sm = FluidState(st.n, tuple(np.subtract(st.u, e)), st.theta)
        else:
            sp, sm = FluidState(st.n, st.u, st.theta + h), FluidState(st.n, st.u, st.theta - h)
        fdb = (basis.eval_basis(M, sp, p) - basis.eval_basis(M, sm, p)) / (2 * h)
        pred = C[w - 1].T @ Pb
        worst["basis derivatives"] = max(worst["basis derivatives"], float(np.abs(fdb - pred).max() / np.abs(fdb).max()))
    dt = time.perf_counter() - t0
    ok = max(worst.values()) < 1e-6 and dt < 10
    record(4, "derivative identities vs central differences", ok,
           ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f", {dt:.1f} s")
    assert ok


def test_05_harmonics(record):
    t0 = time.perf_counter()
    L = 8
    x, w = np.polynomial.legendre.leggauss(20)
    nphi = 40
    ph = np.arange(nphi) * 2 * np.pi / nphi
    Y = harmonics.all_Y(L, x[:, None], ph[None, :]).reshape((L + 1) * (2 * L + 1), -1)
    wt = (w[:, None] * np.full(nphi, 2 * np.pi / nphi)[None, :]).ravel()
    G = (Y * wt) @ Y.T
    E = np.zeros_like(G)
    for ell in range(L + 1):
        for m in range(-ell, ell + 1):
            i = ell * (2 * L + 1) + m + L
            E[i, i] = 4 * np.pi / (2 * ell + 1)
    norm_err = float(np.abs(G - E).max())
    yy, pp = np.meshgrid(np.linspace(-0.95, 0.95, 10), np.linspace(0, 2 * np.pi, 10, endpoint=False))
    ident = 0.0
    for ell in range(L + 1):
        for m in range(-ell, ell + 1):
            r = {**harmonics.verify_recurrences(ell, m, yy, pp), **harmonics.verify_derivatives(ell, m, yy, pp)}
            ident = max(ident, max(r.values()))
    dt = time.perf_counter() - t0
    ok = norm_err < 1e-12 and ident < 1e-10 and dt < 10
    record(5, "spherical harmonics", ok, f"normalization {norm_err:.1e}, identities {ident:.1e}, {dt:.1f} s")
    assert ok


def test_06_assembly_oracle(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    w = {"M^a vs quadrature": 0.0, "D vs finite differences": 0.0, "D_1 entries": 0.0, "D_2 entries": 0.0,
         "|det D_2| rel": 0.0, "|det D_1| rel": 0.0, "|det D_1| rel (structural)": 0.0}
    for M in (1, 2, 3, 4):
        for _ in range(10):
            st, W = analysis.random_admissible_state(rng, M, amplitude=0.05, speed=0.7)
            fs = ma.FamilySet.exact(max(M, 2), st.zeta)
            rule = basis.quadrature_rule(st, 2 * M + 6)
            Ma = ma.build_M(M, st, fs)
            for a in range(4):
                Q = basis.gram(M, st, weight_fn=lambda p, a=a: p[:, a], rule=rule)
                w["M^a vs quadrature"] = max(w["M^a vs quadrature"], float(np.abs(Ma[a] - Q).max() / np.abs(Q).max()))
            D = ma.build_D(M, st, W, fs)
            for _ in range(2):
                d = rng.standard_normal(len(W))
                fd = ma.lab_frame_derivative_oracle(M, W, d)
                w["D vs finite differences"] = max(w["D vs finite differences"],
                                                   float(np.abs(D @ d - fd).max() / max(1.0, np.abs(fd).max())))
            if M <= 2:
                ent = ma.closed_form_D_entries(M, st, W, fs)
                key = f"D_{M} entries"
                w[key] = max(w[key], max(abs(D[rc] - v) for rc, v in ent.items()))
                forms = ma.det_D_formulas(M, st, W[5] if M == 2 else 0.0, fs)
                det = abs(np.linalg.det(D))
                if M == 1:
                    w["|det D_1| rel"] = max(w["|det D_1| rel"], abs(det / abs(forms["closed_form_D1"]) - 1))
                    w["|det D_1| rel (structural)"] = max(w["|det D_1| rel (structural)"],
                                                          abs(det / abs(forms["structural_D1"]) - 1))
                else:
                    w["|det D_2| rel"] = max(w["|det D_2| rel"], abs(det / abs(forms["closed_form_D2"]) - 1))
    dt = time.perf_counter() - t0
    checks = {
        "M^a vs quadrature": 1e-9,
        "D vs finite differences": 1e-6,
        "D_1 entries": 1e-10,
        "D_2 entries": 1e-10,
        "|det D_2| rel": 1e-8,
    }
    failed = [k for k, tol in checks.items() if not w[k] < tol]
    ok = not failed and dt < 120
    detail = ", ".join(f"{k} {v:.1e}" for k, v in w.items()) + f", {dt:.0f} s"
    if failed:
        detail += "; failing: " + ", ".join(failed)
    record(6, "assembly oracle", ok, detail)
    assert ok, detail


def test_07_hyperbolicity(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst, diag, recon, imag, n = 0.0, 0.0, 0.0, 0.0, 0
    for M in (2, 3, 4):
        for _ in range(50):
            st, W = analysis.random_admissible_state(rng, M)
            d = rng.standard_normal(3)
            d /= np.linalg.norm(d)
            fs = ma.FamilySet.exact(M, st.zeta)
            rep = analysis.certify_hyperbolic(M, st, W, d, fs)
            B = ma.build_B(M, st, W, fs)
            lam_direct = np.linalg.eigvals(np.linalg.solve(B[0], np.einsum("i,iab->ab", d, B[1:])))
            worst = max(worst, rep.max_abs)
            diag = max(diag, rep.diagonalizability_residual)
            recon = max(recon, rep.reconstruction_residual)
            imag = max(imag, float(np.abs(lam_direct.imag).max()))
            n += 1
    dt = time.perf_counter() - t0
    ok = worst < 1 - 1e-10 and diag < 1e-10 and recon < 1e-8 and imag < 1e-8 and dt < 60
    record(7, "hyperbolicity", ok, f"{n} cases, max|lambda| {worst:.4f}, eigvec orth {diag:.1e}, "
           f"B X = X Lambda {recon:.1e}, direct eig imag {imag:.1e}, {dt:.0f} s")
    assert ok


def test_08_linear_stability(record):
    t0 = time.perf_counter()
    worst, zero_counts = np.inf, set()
    ks = analysis.k_grid(1e-2, 1e2, 40)
    for M in (2, 3):
        for z in (0.5, 1.0, 5.0):
            st = FluidState(1.0, (0.0, 0.0, 0.0), 1.0 / z)
            fs = ma.FamilySet.exact(M, z)
            for tau in (0.1, 1.0):
                scan = analysis.stability_scan(M, st, ks, tau, fs)
                worst = min(worst, scan.min_imag)
                zero_counts.add(scan.zero_modes_at_rest)
    dt = time.perf_counter() - t0
    ok = worst >= -1e-9 and zero_counts == {5} and dt < 120
    record(8, "linear stability", ok, f"min Im(omega) {worst:.2e}, zero modes {sorted(zero_counts)}, {dt:.0f} s")
    assert ok


def test_09_admissibility_recovery(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    worst_mom, worst_state, min_margin = 0.0, 0.0, np.inf
    M = 2
    for _ in range(100):
        st, W = analysis.random_admissible_state(rng, M, amplitude=0.05)
        fs = ma.FamilySet.exact(M, st.zeta)
        N, T = basis.moments_from_coefficients(ma.dw_batch(M, fs)[0] @ W, st, M)
        rec, eps, Pi = recover_state(N, T)
        got = np.array([rec.n, *rec.u, rec.theta, Pi])
        worst_state = max(worst_state, float(np.abs(got - W[:6]).max() / np.abs(W[:6]).max()))
        W2 = W.copy()
        W2[:6] = got
        fs2 = ma.FamilySet.exact(M, rec.zeta)
        N2, T2 = basis.moments_from_coefficients(ma.dw_batch(M, fs2)[0] @ W2, rec, M)
        worst_mom = max(worst_mom, float(max(np.abs(N2 - N).max() / np.abs(N).max(), np.abs(T2 - T).max() / np.abs(T).max())))
        min_margin = min(min_margin, (Pi + rec.n * rec.theta) / (rec.n * rec.theta))
    dt = time.perf_counter() - t0
    ok = worst_mom < 1e-9 and worst_state < 1e-9 and min_margin > 0 and dt < 10
    record(9, "admissibility recovery", ok, f"moments {worst_mom:.1e}, state {worst_state:.1e}, "
           f"min (Pi + n theta)/(n theta) {min_margin:.2f}, {dt:.1f} s")
    assert ok


def test_10_lorentz_covariance(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    worst = 0.0
    for M in (1, 2, 3):
        Nr = quasi1d.n_reduced(M)
        Wr = np.zeros(Nr)
        Wr[:3] = [1.2, 0.3, 0.8]
        Wr[3:] = 0.02 * rng.standard_normal(Nr - 3)
        dWt, dWx = rng.standard_normal(Nr), rng.standard_normal(Nr)
        for v in (0.1, 0.5, 0.9):
            worst = max(worst, analysis.covariance_residual(M, v, Wr, dWt, dWx, 0.5))
    dt = time.perf_counter() - t0
    ok = worst < 1e-9 and dt < 10
    record(10, "Lorentz covariance", ok, f"max residual {worst:.1e}, {dt:.1f} s")
    assert ok


def test_11_ultrarelativistic(record):
    t0 = time.perf_counter()
    worst = 0.0
    for z in (1e-3, 0.1, 1.0):
        for ell in range(5):
            fam = orthopoly.ultra_limit_family(ell, z, 7)
            a, b = orthopoly.laguerre_coeffs(2 * ell + 1, 7)
            worst = max(worst, float(np.max(np.abs(fam.b[:7] * z / b[:7] - 1))), float(np.max(np.abs(fam.a[:6] * z / a[:6] - 1))))
    # the full family approaches the limit as zeta -> 0
    trend = []
    for z in (1e-2, 1e-3):
        fam = orthopoly.family(2, z, 6)
        _, b = orthopoly.laguerre_coeffs(5, 6)
        trend.append(float(np.max(np.abs(fam.b * z / b - 1))))
    dt = time.perf_counter() - t0
    ok = worst < 1e-10 and trend[1] < trend[0] and dt < 5
    record(11, "ultra-relativistic limit", ok,
           f"limit family vs Laguerre {worst:.1e}; full family gap {trend[0]:.1e} -> {trend[1]:.1e}, {dt:.1f} s")
    assert ok


def _ode_relaxation(M, W0, tau, t_end):
    def rhs(_, w):
        sys = quasi1d.reduce(M, w[None], tau, fs=ma.FamilySet.exact(max(M, 2), 1.0 / w[2]))
        return np.linalg.solve(sys.B0[0], sys.source(w[None])[0])

    return integrate.solve_ivp(rhs, (0, t_end), W0, method="DOP853", rtol=1e-12, atol=1e-14).y[:, -1]


@pytest.mark.slow
def test_12_solver(record):
    t0 = time.perf_counter()
    M = 2
    # uniform equilibrium, 100 steps
    x = np.linspace(0, 1, 50)
    W = np.tile(quasi1d.equilibrium_row(M, 1.0, 0.3, 0.7), (50, 1))
    s = quasi1d.Quasi1DState(M, x, W.copy(), 0.0)
    sys = quasi1d.reduce(M, s.W, 0.05)
    dt = 0.4 * s.dx / np.abs(sys.speeds()).max()
    for _ in range(100):
        s = quasi1d.step(s, dt, 0.05, "periodic")
    steady = float(np.abs(s.W - W).max())
    # homogeneous relaxation against an ODE integration
    rng = np.random.default_rng(12)
    Nr = quasi1d.n_reduced(M)
    w0 = np.zeros(Nr)
    w0[:3] = [1.0, 0.0, 0.7]
    w0[3:] = 0.05 * rng.standard_normal(Nr - 3)
    tau, t_end, nsteps = 0.1, 0.2, 80
    relax = 0.0
    for u in (0.0, 0.4):  # at rest n, u, theta stay fixed; in motion they relax too
        w0[1] = u
        s = quasi1d.Quasi1DState(M, np.linspace(0, 1, 4), np.tile(w0, (4, 1)), 0.0)
        for _ in range(nsteps):
            s = quasi1d.step(s, t_end / nsteps, tau, "periodic")
        ref = _ode_relaxation(M, w0, tau, t_end)
        relax = max(relax, float(np.abs(s.W[0] - ref).max()))
    # Sod-type shock tube
    cfg = quasi1d.sod_config(M=M, cells=400)
    st0 = quasi1d.initial_state(cfg)
    d0 = quasi1d.conserved_densities(M, st0.W)
    res = quasi1d.run(cfg)
    d1 = quasi1d.conserved_densities(M, res.final.W)
    dx = res.final.dx
    E0 = d0["T00"].sum() * dx
    drift = max(abs(d1[k].sum() * dx + res.boundary_flux[f] - d0[k].sum() * dx) / E0
                for k, f in (("N0", "N"), ("T00", "T0"), ("T03", "T3")))
    admissible = len(quasi1d.admissibility_violations(M, res.final.W)) == 0
    dt_run = time.perf_counter() - t0
    ok = steady < 1e-13 and relax < 1e-6 and admissible and drift < 1e-3 and dt_run < 120
    record(12, "solver sanity", ok, f"steady {steady:.1e}, relaxation vs ODE {relax:.1e}, Sod {res.steps} steps "
           f"admissible={admissible}, conserved drift {drift:.1e}, {dt_run:.0f} s")
    assert ok
