"""Command-line front end.  Tables are CSV with a header row and 17 significant digits.

Exit codes: 0 success, 1 a check failed, 2 invalid input, 3 inadmissible state,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, basis, moment_assembly, orthopoly, quasi1d
from .frame_kinematics import FluidState, InadmissibleError, recover_state

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_INADMISSIBLE, EXIT_NUMERIC = 0, 1, 2, 3, 4


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _floats(text: str) -> list:
    try:
        return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]
    except ValueError:
        raise ValueError(f"expected comma-separated numbers, got {text!r}") from None


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _table(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([v if isinstance(v, str) else _fmt(v) for v in r])
    return buf.getvalue()


def _state_args(p):
    p.add_argument("--M", type=int, required=True, help="truncation order (>= 1)")
    p.add_argument("--state", required=True, help="n,u1,u2,u3,theta")
    p.add_argument("--W", default=None, help="remaining entries of W (Pi, f~, higher) as a comma list or @file.json")


def _parse_state(args):
    if args.M < 1 or args.M > 10:
        raise ValueError("M must lie in 1..10")
    vals = _floats(args.state)
    if len(vals) != 5:
        raise ValueError("--state needs n,u1,u2,u3,theta")
    st = FluidState(vals[0], tuple(vals[1:4]), vals[4])
    W = np.zeros(basis.n_moments(args.M))
    W[:5] = vals
    if args.W:
        rest = json.loads(Path(args.W[1:]).read_text()) if args.W.startswith("@") else _floats(args.W)
        if len(rest) != len(W) - 5:
            raise ValueError(f"--W needs {len(W) - 5} entries for M = {args.M}")
        W[5:] = rest
    if args.M >= 2 and not W[5] > -W[0] * W[4]:
        raise InadmissibleError("admissibility: bulk pressure must exceed -n theta")
    return st, W


def cmd_coeffs(args):
    if args.ell < 0 or args.K < 1 or not args.zeta > 0:
        raise ValueError("need ell >= 0, K >= 1, zeta > 0")
    fam = orthopoly.family(args.ell, args.zeta, args.K)
    rows = [(args.ell, k, fam.a[k] if k < fam.K else float("nan"), fam.b[k], fam.c[k]) for k in range(fam.K + 1)]
    text = _table(["ell", "k", "a_k", "b_k", "c_k"], rows)
    if args.ell >= 1:
        lower = orthopoly.family(args.ell - 1, args.zeta, args.K + 2)
        cc = orthopoly.cross_coeffs(fam, lower)
        rows = [(args.ell, k, cc.p[k], cc.q[k], cc.r[k], cc.ptilde[k], cc.qtilde[k], cc.rtilde[k]) for k in range(len(cc.p))]
        text += "\n" + _table(["ell", "k", "p", "q", "r", "ptilde", "qtilde", "rtilde"], rows)
    _emit(text, args.out)
    return EXIT_OK


def _check_suite(M: int, zeta: float, rng) -> list:
    """(name, passed, value) over the module invariants at one temperature."""
    out = []
    st, W = analysis.random_admissible_state(rng, M, amplitude=0.02)
    st = FluidState(st.n, st.u, 1.0 / zeta)
    W[4] = 1.0 / zeta
    fs = moment_assembly.FamilySet.exact(M, zeta)
    rule = basis.quadrature_rule(st, 2 * M + 6)
    G = basis.gram(M, st, rule=rule)
    out.append(("basis orthonormality", np.abs(G - np.eye(len(G))).max()))
    Ma = moment_assembly.build_M(M, st, fs)
    err = max(np.abs(Ma[a] - basis.gram(M, st, weight_fn=lambda p, a=a: p[:, a], rule=rule)).max() for a in range(4))
    out.append(("recurrence vs quadrature M^alpha", err))
    D = moment_assembly.build_D(M, st, W, fs)
    d = rng.standard_normal(len(W))
    fd = moment_assembly.lab_frame_derivative_oracle(M, W, d)
    out.append(("D vs finite differences", np.abs(D @ d - fd).max() / max(1.0, np.abs(fd).max())))
    S = moment_assembly.source(M, st, W, 1.0, fs)
    out.append(("source conserves five moments", np.abs(S[:5]).max()))
    n = rng.standard_normal(3)
    rep = analysis.certify_hyperbolic(M, st, W, n / np.linalg.norm(n), fs)
    out.append(("subluminal real speeds", rep.max_abs - 1.0 if rep.diagonalizability_residual < 1e-10 else np.inf))
    eq = FluidState(st.n, st.u, st.theta)
    scan = analysis.stability_scan(M, eq, analysis.k_grid(1e-2, 1e2, 8), 1.0, fs)
    out.append(("linear stability min Im(omega)", -scan.min_imag))
    out.append(("five zero modes at k = 0", abs(scan.zero_modes_at_rest - 5)))
    tol = {"basis orthonormality": 1e-10, "recurrence vs quadrature M^alpha": 1e-9, "D vs finite differences": 1e-6,
           "source conserves five moments": 1e-12, "subluminal real speeds": 0.0,
           "linear stability min Im(omega)": 1e-9, "five zero modes at k = 0": 0.5}
    return [(name, val < tol[name], val) for name, val in out]


def cmd_check(args):
    if args.M < 1 or args.M > 6:
        raise ValueError("check supports M in 1..6")
    rng = np.random.default_rng(args.seed)
    rows, ok = [], True
    for z in _floats(args.zeta):
        if not z > 0:
            raise ValueError("zeta must be positive")
        for name, passed, val in _check_suite(args.M, z, rng):
            ok &= bool(passed)
            rows.append((z, name, "pass" if passed else "FAIL", val))
    _emit(_table(["zeta", "check", "status", "value"], rows), args.out)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_assemble(args):
    st, W = _parse_state(args)
    sysm = moment_assembly.assemble(args.M, W, args.tau)
    doc = {
        "order": "degree-major: groups l + k ascending, then l, then m",
        "labels": [list(t) for t in basis.degree_order(args.M)],
        "W": W.tolist(),
        "M": sysm.M.tolist(),
        "DW": sysm.DW.tolist(),
        "D": sysm.D.tolist(),
        "B": sysm.B.tolist(),
        "source": sysm.S.tolist(),
    }
    _emit(json.dumps(doc, default=float) + "\n", args.out)
    return EXIT_OK


def cmd_spectrum(args):
    st, W = _parse_state(args)
    n = np.asarray(_floats(args.direction))
    if n.shape != (3,) or not np.linalg.norm(n) > 0:
        raise ValueError("--direction needs three numbers, not all zero")
    n = n / np.linalg.norm(n)
    rep = analysis.certify_hyperbolic(args.M, st, W, n)
    header = ["n1", "n2", "n3"] + [f"lambda{i + 1}" for i in range(len(rep.eigenvalues))]
    _emit(_table(header, [(*n, *rep.eigenvalues)]), args.out)
    return EXIT_OK


def cmd_stability(args):
    st, _ = _parse_state(args)
    if not args.tau > 0:
        raise ValueError("tau must be positive")
    dirs = np.asarray(_floats(args.directions)).reshape(-1, 3) if args.directions else None
    ks = analysis.k_grid(args.kmin, args.kmax, args.nk, dirs)
    scan = analysis.stability_scan(args.M, st, ks, args.tau)
    rows = [(*k, w.real, w.imag) for k, ws in zip(scan.k, scan.omegas) for w in ws]
    _emit(_table(["k1", "k2", "k3", "re_omega", "im_omega"], rows), args.out)
    return EXIT_OK


def cmd_recover(args):
    data = json.loads(Path(args.input).read_text())
    try:
        N = np.asarray(data["N"], dtype=float)
        T = np.asarray(data["T"], dtype=float)
    except (KeyError, TypeError):
        raise ValueError("input JSON needs keys N (4) and T (4x4)") from None
    if N.shape != (4,) or T.shape != (4, 4):
        raise ValueError("N must have 4 entries and T must be 4x4")
    st, eps, Pi = recover_state(N, T)
    doc = {"n": st.n, "u": list(st.u), "theta": st.theta, "epsilon": eps, "Pi": Pi}
    _emit(json.dumps(doc, indent=1) + "\n", args.out)
    return EXIT_OK


def cmd_solve1d(args):
    cfg = quasi1d.load_config(args.config)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    res = quasi1d.run(cfg)
    for i, snap in enumerate(res.snapshots):
        quasi1d.write_snapshot(outdir / f"snapshot_{i:04d}.csv", snap)
    meta = {"steps": res.steps, "t_end": res.final.t, "snapshots": len(res.snapshots), "boundary_flux": res.boundary_flux}
    (outdir / "run.json").write_text(json.dumps(meta, indent=1))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relmoments", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("coeffs", help="recurrence and cross coefficients as CSV")
    c.add_argument("--ell", type=int, required=True)
    c.add_argument("--zeta", type=float, required=True)
    c.add_argument("--K", type=int, default=8)
    c.set_defaults(func=cmd_coeffs)

    c = sub.add_parser("check", help="pass/fail table over the invariant suite")
    c.add_argument("--M", type=int, required=True)
    c.add_argument("--zeta", default="1", help="comma list of inverse temperatures")
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_check)

    c = sub.add_parser("assemble", help="all system matrices as JSON")
    _state_args(c)
    c.add_argument("--tau", type=float, default=1.0)
    c.set_defaults(func=cmd_assemble)

    c = sub.add_parser("spectrum", help="characteristic speeds along a direction as CSV")
    _state_args(c)
    c.add_argument("--direction", default="0,0,1")
    c.set_defaults(func=cmd_spectrum)

    c = sub.add_parser("stability", help="dispersion relation at equilibrium as CSV")
    _state_args(c)
    c.add_argument("--tau", type=float, default=1.0)
    c.add_argument("--kmin", type=float, default=1e-2)
    c.add_argument("--kmax", type=float, default=1e2)
    c.add_argument("--nk", type=int, default=40)
    c.add_argument("--directions", default=None, help="flattened list of 3-vectors")
    c.set_defaults(func=cmd_stability)

    c = sub.add_parser("recover", help="Landau-frame state from N and T given as JSON")
    c.add_argument("--input", required=True)
    c.set_defaults(func=cmd_recover)

    c = sub.add_parser("solve1d", help="run the quasi-1D solver from a JSON config")
    c.add_argument("--config", required=True)
    c.add_argument("--outdir", default="snapshots")
    c.set_defaults(func=cmd_solve1d)

    for name, sp in sub.choices.items():
        if name not in ("solve1d",):
            sp.add_argument("--out", default=None, help="output file (default stdout)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InadmissibleError as exc:
        print(f"inadmissible state: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
