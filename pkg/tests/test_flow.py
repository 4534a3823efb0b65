import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diracflow import Graph
from diracflow.flow import (
    FlowConfig,
    NotConvergedError,
    TRAJECTORY_COLUMNS,
    asymptotics,
    default_dt,
    inflation_profile,
    rhs,
    run_bidirectional,
    run_flow,
    time_symmetry_residuals,
    trajectory_to_csv,
)
from diracflow.integrate import rk4_step, step_grid
from diracflow.operators import DiracDecomposition, extract_blocks

from conftest import er, graphs, max_abs, setup

S8 = np.sqrt(8.0)


def k2_closed_form(t):
    """|b| on vertex entries and |d| for K2."""
    return np.tanh(S8 * t) / np.sqrt(2), 1 / np.cosh(S8 * t)


def k2_errors(dt, t_end=2.0):
    c, d, D, P = setup(Graph.complete(2))
    traj = run_flow(D, FlowConfig(t_end=t_end, dt=dt, snapshot_every=0.1, converge_rtol=0))
    err = 0.0
    for s in traj.states():
        b_exact, d_exact = k2_closed_form(s.t)
        b = np.abs(s.dec.b_part.block(0, 0))
        dd = np.abs(s.dec.d_part.block(1, 0))
        err = max(err, max_abs(b - b_exact), max_abs(dd - d_exact))
    return err


def test_rk4_scalar():
    y = (np.array(1.0),)
    for _ in range(10):
        y = rk4_step(lambda z: (z[0],), y, 0.1)
    assert abs(y[0] - np.e) < 1e-5


def test_step_grid():
    assert step_grid(1.0, 0.3) == (4, 0.25)
    for bad in ((1.0, 2.0), (0.0, 0.1), (1.0, 0.0)):
        with pytest.raises(ValueError):
            step_grid(*bad)


def test_k2_matches_closed_form():
    assert k2_errors(1e-3) < 1e-9


def test_rk4_fourth_order():
    e1, e2 = k2_errors(0.04), k2_errors(0.02)
    assert 12 < e1 / e2 < 20


def random_deformed_state(c_d_D, beta, seed):
    c, d, D, P = c_d_D
    rng = np.random.default_rng(seed)
    up = D.degree_mask(1)
    dd = np.where(up, d.entries * (rng.normal(size=D.entries.shape) + 1j * rng.normal(size=D.entries.shape)), 0)
    b = np.where(D.degree_mask(0), rng.normal(size=D.entries.shape) + 1j * rng.normal(size=D.entries.shape), 0)
    b = 0.5 * (b + b.conj().T)
    return DiracDecomposition(D.with_entries(dd), D.with_entries(b), beta)


@pytest.mark.parametrize("beta", [0.0, 1.0, 0.3])
def test_block_rhs_matches_full_commutator(beta):
    dec = random_deformed_state(er(8, 0), beta, seed=5)
    Dm = dec.D().entries
    d, b = dec.d_part.entries, dec.b_part.entries
    Bm = d - d.conj().T + 1j * beta * b
    full = Bm @ Dm - Dm @ Bm
    d_dot, b_dot, B = rhs(dec)
    assert max_abs(B.entries - Bm) == 0
    assembled = d_dot.entries + d_dot.entries.conj().T + b_dot.entries
    assert max_abs(full - assembled) < 1e-12 * max(1.0, max_abs(full))
    # b' = 2(dd* - d*d) is Hermitian and does not involve beta
    assert max_abs(b_dot.entries - b_dot.entries.conj().T) < 1e-12


def test_trace_split_is_conserved():
    c, d, D, P = er(12, 1)
    traj = run_flow(D, FlowConfig(t_end=3.0, snapshot_every=0.5))
    trL = float(np.trace(traj.L0).real)
    total = traj.series["tr_b2"] + traj.series["tr_M"]
    assert np.abs(total - trL).max() < 1e-7 * trL


def test_block_and_full_integrators_agree():
    c, d, D, P = er(8, 2)
    cfg = FlowConfig(t_end=1.0, dt=0.005, snapshot_every=0.25, beta=1.0)
    a = run_flow(D, cfg)
    bb = run_flow(D, FlowConfig(t_end=1.0, dt=0.005, snapshot_every=0.25, beta=1.0, method="rk4-full"))
    for s, r in zip(a.states(), bb.states()):
        assert s.t == r.t
        assert max_abs(s.D.entries - r.D.entries) < 1e-10
        assert max_abs(s.U - r.U) < 1e-10


def test_backward_run_mirrors_forward():
    c, d, D, P = er(8, 0)
    fwd, bwd = run_bidirectional(D, FlowConfig(t_end=2.0, snapshot_every=0.5))
    assert [s.t for s in bwd.snapshots] == [-s.t for s in fwd.snapshots]
    res = time_symmetry_residuals(fwd, bwd)
    assert len(res) == len(fwd.snapshots)
    assert max(r for _, r in res) < 1e-8


def test_converges_and_asymptotics_k2():
    c, d, D, P = setup(Graph.complete(2))
    traj = run_flow(D, FlowConfig(t_end=20.0))
    assert traj.reason == "converged"
    a = asymptotics(traj)
    assert a.b2_minus_L < 1e-3
    assert a.d_max < 1e-2
    assert a.U_tail < 1e-4
    assert a.delta == pytest.approx(0.02)
    assert traj.final.diagnostics.tr_b2 == pytest.approx(4.0, abs=1e-3)


def test_asymptotics_requires_convergence():
    c, d, D, P = setup(Graph.complete(2))
    traj = run_flow(D, FlowConfig(t_end=0.5))
    assert traj.reason == "completed"
    with pytest.raises(NotConvergedError):
        asymptotics(traj)


def test_drift_abort():
    c, d, D, P = er(8, 0)
    traj = run_flow(D, FlowConfig(t_end=5.0, dt=0.1, drift_tol=1e-12))
    assert traj.reason == "drift_abort"
    assert traj.final is not None


def test_edgeless_graph_is_fixed_point():
    c, d, D, P = setup(Graph(3))
    traj = run_flow(D, FlowConfig(t_end=1.0))
    assert traj.reason == "converged"
    assert traj.final.t == 0.0


def test_rejects_deformed_input():
    dec = random_deformed_state(er(8, 0), 0.0, seed=3)
    with pytest.raises(ValueError):
        run_flow(dec.D(), FlowConfig(t_end=1.0))
    with pytest.raises(ValueError):
        run_flow(er(8, 0)[2], FlowConfig(t_end=1.0), direction=2)


def test_config_validation():
    for kwargs in ({"t_end": 0}, {"dt": 2.0, "t_end": 1.0}, {"drift_tol": 0}, {"method": "euler"},
                   {"snapshot_times": (0.5, 0.2)}, {"snapshot_times": (3.0,), "t_end": 1.0},
                   {"cauchy_delta": 0.0}):
        with pytest.raises(ValueError):
            FlowConfig(**kwargs)
    assert FlowConfig(snapshot_times=[0, 1]).to_dict()["snapshot_times"] == [0.0, 1.0]


def test_default_dt_scales_with_spectral_radius():
    assert default_dt(np.zeros((2, 2))) == 0.005
    assert default_dt(np.diag([0.0, 99.0])) == pytest.approx(0.0005)


def test_explicit_snapshot_times_and_lookup():
    c, d, D, P = setup(Graph.complete(3))
    traj = run_flow(D, FlowConfig(t_end=1.0, dt=0.01, snapshot_times=(0.0, 0.2, 1.0)))
    assert [s.t for s in traj.snapshots] == pytest.approx([0.0, 0.2, 1.0])
    assert traj.state_at(0.2).t == pytest.approx(0.2)
    with pytest.raises(KeyError):
        traj.state_at(0.3)


def test_inflation_matches_closed_form_peak():
    c, d, D, P = setup(Graph.complete(2))
    traj = run_flow(D, FlowConfig(t_end=2.0, dt=1e-3, converge_rtol=0))
    t, trM, dtrM = inflation_profile(traj, dense=True)
    # tr(b^2) = 4 tanh^2(sqrt(8) t); its rate peaks where tanh^2 = 1/3
    exact_rate = 8 * S8 * np.tanh(S8 * t) / np.cosh(S8 * t) ** 2
    assert np.abs(-dtrM - exact_rate).max() < 1e-8
    assert trM[0] == pytest.approx(4.0)
    assert abs(t[np.argmax(-dtrM)] - np.arctanh(1 / np.sqrt(3)) / S8) <= 1e-3
    with pytest.raises(ValueError):
        inflation_profile(run_flow(D, FlowConfig(t_end=0.1, snapshot_every=1.0)))


def test_trajectory_csv():
    c, d, D, P = setup(Graph.complete(3))
    traj = run_flow(D, FlowConfig(t_end=1.0, snapshot_every=0.25))
    text = trajectory_to_csv(traj)
    lines = text.strip().split("\n")
    assert lines[0] == ",".join(TRAJECTORY_COLUMNS)
    assert len(lines) == 1 + len(traj.states())
    assert text == trajectory_to_csv(run_flow(D, FlowConfig(t_end=1.0, snapshot_every=0.25)))


@settings(max_examples=15, deadline=None)
@given(graphs(6), st.sampled_from([0.0, 1.0]))
def test_short_flow_preserves_laplacian_and_structure(g, beta):
    c, d, D, P = setup(g)
    traj = run_flow(D, FlowConfig(t_end=0.5, snapshot_every=0.25, beta=beta))
    assert traj.reason != "drift_abort"
    for s in traj.states():
        Dt = s.D.entries
        assert max_abs(Dt @ Dt - traj.L0) < 1e-7
        assert max_abs(Dt - Dt.conj().T) < 1e-12
        assert extract_blocks(s.D, beta).residual < 1e-12
        assert max_abs(s.U.conj().T @ s.U - np.eye(D.size)) < 1e-8
