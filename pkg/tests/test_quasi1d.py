import json

import numpy as np
import pytest

from relmoments import moment_assembly as ma, quasi1d
from relmoments.frame_kinematics import InadmissibleError


def _row(M, rng, u=0.3):
    Wr = np.zeros(quasi1d.n_reduced(M))
    Wr[:3] = [1.1, u, 0.7]
    Wr[3:] = 0.02 * rng.standard_normal(len(Wr) - 3)
    return Wr


@pytest.mark.parametrize("M", [1, 2, 3])
def test_reduction_is_restriction_of_full_system(M):
    rng = np.random.default_rng(M)
    Wr = _row(M, rng)
    W = quasi1d.embed(M, Wr)
    fs = ma.FamilySet.exact(max(M, 2), 1 / Wr[2])
    red = quasi1d.reduce(M, Wr[None], 0.4, fs=fs)
    B = ma.build_B(M, None, W, ma.FamilySet.exact(M, 1 / Wr[2]))
    pos = list(quasi1d.full_positions(M))
    keep = quasi1d._basis_positions(M)
    np.testing.assert_allclose(red.B0[0], B[0][np.ix_(keep, pos)], atol=1e-12)
    np.testing.assert_allclose(red.B3[0], B[3][np.ix_(keep, pos)], atol=1e-12)
    S = ma.source(M, None, W, 0.4, ma.FamilySet.exact(M, 1 / Wr[2]))
    np.testing.assert_allclose(red.source(Wr[None])[0], S[keep], atol=1e-13)


def test_batched_and_exact_reduction_agree():
    rng = np.random.default_rng(5)
    Wr = np.stack([_row(2, rng, u) for u in (-0.5, 0.0, 0.7)])
    red = quasi1d.reduce(2, Wr, 0.3)
    for i in range(3):
        ex = quasi1d.reduce(2, Wr[i : i + 1], 0.3, fs=ma.FamilySet.exact(2, 1 / Wr[i, 2]))
        np.testing.assert_allclose(red.B0[i], ex.B0[0], atol=1e-12)
        np.testing.assert_allclose(red.R[i], ex.R[0], atol=1e-11)


def test_speeds_are_subluminal():
    rng = np.random.default_rng(0)
    Wr = np.stack([_row(3, rng, u) for u in np.linspace(-0.9, 0.9, 7)])
    lam = quasi1d.reduce(3, Wr).speeds()
    assert np.abs(lam).max() < 1


def test_conserved_densities_of_equilibrium():
    row = quasi1d.equilibrium_row(2, 1.5, 0.4, 0.9)
    d = quasi1d.conserved_densities(2, row[None])
    g = 1 / np.sqrt(1 - 0.4**2)
    assert d["N0"][0] == pytest.approx(1.5 * g, rel=1e-12)
    assert d["N3"][0] == pytest.approx(1.5 * g * 0.4, rel=1e-12)


def test_uniform_state_is_steady_periodic():
    M = 2
    W = np.tile(quasi1d.equilibrium_row(M, 1.0, 0.3, 0.7), (20, 1))
    s = quasi1d.Quasi1DState(M, np.linspace(0, 1, 20), W.copy(), 0.0)
    for _ in range(10):
        s = quasi1d.step(s, 0.01, 0.05, "periodic")
    assert np.abs(s.W - W).max() < 1e-13


def test_step_guards():
    M = 2
    W = np.tile(quasi1d.equilibrium_row(M, 1.0, 0.0, 0.7), (10, 1))
    s = quasi1d.Quasi1DState(M, np.linspace(0, 1, 10), W, 0.0)
    with pytest.raises(quasi1d.CFLError):
        quasi1d.step(s, 10.0, 0.1)
    W[3, 0] = -1
    with pytest.raises(InadmissibleError):
        quasi1d.step(quasi1d.Quasi1DState(M, s.x, W, 0.0), 0.001, 0.1)


def test_small_riemann_problem_conserves():
    cfg = quasi1d.sod_config(M=2, cells=60, t_end=0.1)
    st0 = quasi1d.initial_state(cfg)
    d0 = quasi1d.conserved_densities(2, st0.W)
    res = quasi1d.run(cfg)
    d1 = quasi1d.conserved_densities(2, res.final.W)
    dx = res.final.dx
    E0 = d0["T00"].sum() * dx
    for k, f in (("N0", "N"), ("T00", "T0"), ("T03", "T3")):
        assert abs(d1[k].sum() * dx + res.boundary_flux[f] - d0[k].sum() * dx) / E0 < 1e-3
    assert len(quasi1d.admissibility_violations(2, res.final.W)) == 0
    # density is monotone between the two initial plateaus away from the contact
    assert res.final.W[:, 0].max() <= 1.0 + 1e-6 and res.final.W[:, 0].min() >= 0.125 - 1e-6


def test_config_loading_and_validation(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"M": 2, "cells": 50, "tau": 0.01, "t_end": 0.05}))
    cfg = quasi1d.load_config(p)
    assert cfg.knudsen is None and cfg.relaxation_time() == 0.01
    p.write_text(json.dumps({"M": 2, "bogus": 1}))
    with pytest.raises(ValueError):
        quasi1d.load_config(p)
    with pytest.raises(ValueError):
        quasi1d.sod_config(cfl=0.9)
    with pytest.raises(InadmissibleError):
        quasi1d.sod_config(left_state=(1.0, 1.2, 0.5))


def test_snapshot_writer(tmp_path):
    cfg = quasi1d.sod_config(M=3, cells=8, t_end=0.01)
    s = quasi1d.initial_state(cfg)
    path = tmp_path / "s.csv"
    quasi1d.write_snapshot(path, s)
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == quasi1d.snapshot_header(3)
    assert len(lines[0].split(",")) == quasi1d.n_reduced(3) + 1
    assert float(lines[1].split(",")[1]) == 1.0
