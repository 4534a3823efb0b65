import json
from dataclasses import replace

import numpy as np
import pytest

from diracflow import FlowConfig, Graph, run_bidirectional, run_flow
from diracflow.operators import DiracDecomposition
from diracflow.verification import (
    DEFAULT_TOLERANCES,
    TOL_TABLE_ENV,
    load_tolerances,
    supersymmetry_breaking_report,
    verify_trajectory,
)

from conftest import er, setup


@pytest.fixture(scope="module")
def k2_runs():
    c, d, D, P = setup(Graph.complete(2))
    cfg = FlowConfig(t_end=20.0, snapshot_every=0.1)
    fwd, bwd = run_bidirectional(D, cfg)
    paired = run_flow(D, replace(cfg, beta=1.0))
    return c, fwd, bwd, paired


def test_k2_report_passes(k2_runs):
    c, fwd, bwd, paired = k2_runs
    rep = verify_trajectory(fwd, c, backward=bwd, paired=paired)
    assert rep.overall, "\n".join(rep.summary_lines())
    for name in ("isospectrality", "mckean_singer_U", "time_symmetry", "beta_independence",
                 "O_nonnegative", "Q_nonpositive", "betti_constancy", "asym_U_tail",
                 "superpartner_final", "inflation_peak_interior"):
        assert rep[name].verdict == "pass"
    assert rep.meta["chi"] == 1 and rep.meta["betti"] == [1, 0]
    with pytest.raises(KeyError):
        rep["nope"]


def test_complex_checks_only_with_beta(k2_runs):
    c, fwd, bwd, paired = k2_runs
    assert "split_residual" not in verify_trajectory(fwd, c).names()
    rep = verify_trajectory(paired, c)
    assert rep.overall, "\n".join(rep.summary_lines())
    for name in ("split_residual", "laplacian_split", "M_real", "complex_emerges", "complex_fade"):
        assert rep[name].verdict == "pass"
    assert "mckean_singer_U" not in rep.names()


def test_report_is_deterministic(k2_runs):
    c, fwd, bwd, paired = k2_runs
    a = verify_trajectory(fwd, c, backward=bwd).to_json()
    b = verify_trajectory(fwd, c, backward=bwd).to_json()
    assert a == b
    data = json.loads(a)
    assert set(data) == {"checks", "overall", "meta"}
    assert {"name", "anchor", "residual", "tol", "verdict"} <= set(data["checks"][0])


def corrupt(traj, i, **changes):
    traj = replace(traj, snapshots=list(traj.snapshots))
    traj.snapshots[i] = replace(traj.snapshots[i], **changes)
    return traj


def test_corrupted_propagator_fails(k2_runs):
    c, fwd, _, _ = k2_runs
    U = fwd.snapshots[5].U.copy()
    U[0, 0] += 1e-3
    rep = verify_trajectory(corrupt(fwd, 5, U=U), c)
    assert rep["unitarity"].verdict == "fail"
    assert rep["mckean_singer_U"].verdict == "fail"
    assert rep["isospectrality"].verdict == "pass"
    assert not rep.overall


def test_corrupted_operator_fails():
    c, d, D, P = er(8, 0)
    traj = run_flow(D, FlowConfig(t_end=2.0, snapshot_every=0.5))
    s = traj.snapshots[2]
    dd = s.dec.d_part.entries.copy()
    dd[np.nonzero(dd)[0][0], np.nonzero(dd)[1][0]] *= 1.01
    bad = replace(s, dec=DiracDecomposition(s.dec.d_part.with_entries(dd), s.dec.b_part, 0.0))
    rep = verify_trajectory(corrupt(traj, 2, dec=bad.dec), c)
    assert rep["isospectrality"].verdict == "fail"
    assert rep["laplacian_invariance"].verdict == "fail"
    assert rep["nilpotency"].verdict == "fail"


def test_degree_structure_violation_detected():
    c, d, D, P = setup(Graph.complete(3))
    traj = run_flow(D, FlowConfig(t_end=1.0, snapshot_every=0.25))
    s = traj.snapshots[2]
    dd = s.dec.d_part.entries.copy()
    dd[6, 0] = 1e-3  # vertex -> triangle, degree +2
    dec = DiracDecomposition(s.dec.d_part.with_entries(dd), s.dec.b_part)
    rep = verify_trajectory(corrupt(traj, 2, dec=dec), c)
    assert rep["degree_structure"].verdict == "fail"


def test_unconverged_run_skips_asymptotics():
    c, d, D, P = setup(Graph.complete(3))
    rep = verify_trajectory(run_flow(D, FlowConfig(t_end=0.5, snapshot_every=0.1)), c)
    assert "asym_b2_minus_L" not in rep.names()
    assert rep.overall


def test_drift_abort_is_a_failure():
    c, d, D, P = setup(Graph.complete(3))
    traj = run_flow(D, FlowConfig(t_end=2.0, dt=0.1, drift_tol=1e-14))
    rep = verify_trajectory(traj, c)
    assert rep["trajectory_ok"].verdict == "fail"
    assert not rep.overall


def test_tolerance_table(tmp_path, monkeypatch):
    assert load_tolerances() == DEFAULT_TOLERANCES
    path = tmp_path / "tol.json"
    path.write_text('{"unitarity": 1e-3}')
    assert load_tolerances(path)["unitarity"] == 1e-3
    monkeypatch.setenv(TOL_TABLE_ENV, str(path))
    assert load_tolerances()["unitarity"] == 1e-3
    path.write_text('{"bogus": 1}')
    with pytest.raises(KeyError):
        load_tolerances(path)


def test_supersymmetry_report(k2_runs):
    c, fwd, _, _ = k2_runs
    rep = supersymmetry_breaking_report(fwd)
    assert rep.cosines.shape == (len(fwd.states()), 1)
    assert rep.max_at_zero < 1e-10
    assert rep.min_at_final > 0.95
    assert np.all(np.diff(rep.cosines[:, 0]) >= -1e-12)
