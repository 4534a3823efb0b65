"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line; the lines are repeated in
the terminal summary.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from diracflow import FlowConfig, Graph, run_flow
from diracflow.circle import circle_flow, circle_init, interior_asymptote_error
from diracflow.cohomology import betti_numbers
from diracflow.flow import asymptotics
from diracflow.spectral import (
    dirac_zeta,
    eigen_hermitian,
    mckean_singer_heat,
    pseudo_determinant,
)
from diracflow.verification import supersymmetry_breaking_report

from conftest import er, max_abs, setup

RESULTS: list[str] = []

ER_SIZES = (8, 12, 15)
ER_SEEDS = (0, 1, 2)


def record(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} [{number:2d}] {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


class Run:
    def __init__(self, n, seed):
        self.label = f"ER(n={n}, p=0.4, seed={seed})"
        self.c, self.d, self.D, self.P = er(n, seed)
        cfg = FlowConfig(t_end=20.0)
        start = time.perf_counter()
        self.fwd = run_flow(self.D, cfg)
        self.seconds = time.perf_counter() - start
        self.cfg = cfg
        self._bwd = None

    @property
    def bwd(self):
        if self._bwd is None:
            self._bwd = run_flow(self.D, self.cfg, direction=-1)
        return self._bwd

    @property
    def chi(self):
        return sum((-1) ** p * v for p, v in enumerate(self.c.f_vector))


@pytest.fixture(scope="module")
def ensemble():
    return [Run(n, s) for n in ER_SIZES for s in ER_SEEDS]


def test_k2_closed_form():
    c, d, D, P = setup(Graph.complete(2))
    start = time.perf_counter()
    traj = run_flow(D, FlowConfig(t_end=2.0, dt=1e-3, snapshot_every=1e-3, converge_rtol=0))
    seconds = time.perf_counter() - start
    s8 = np.sqrt(8.0)
    err = 0.0
    for s in traj.states():
        b = np.abs(s.dec.b_part.block(0, 0))
        dd = np.abs(s.dec.d_part.block(1, 0))
        err = max(err, max_abs(b - np.tanh(s8 * s.t) / np.sqrt(2)), max_abs(dd - 1 / np.cosh(s8 * s.t)))
    n = len(traj.states())
    record(1, "K2 closed form", err < 1e-6 and seconds < 1.0 and traj.states()[-1].t == pytest.approx(2.0),
           f"max error {err:.2e} over {n} steps, {seconds:.2f}s")


def test_isospectrality_and_laplacian_invariance(ensemble):
    sigma_drift, lap, total = 0.0, 0.0, 0.0
    for r in ensemble:
        ev0 = np.linalg.eigvalsh(r.D.entries)
        L0 = r.fwd.L0
        for s in r.fwd.states():
            Dt = s.D.entries
            sigma_drift = max(sigma_drift, max_abs(np.linalg.eigvalsh(0.5 * (Dt + Dt.conj().T)) - ev0))
            lap = max(lap, max_abs(Dt @ Dt - L0))
        total += r.seconds
    ok = sigma_drift < 1e-7 and lap < 1e-7 and total < 60 and all(r.fwd.reason != "drift_abort" for r in ensemble)
    record(2, "isospectrality and L-invariance", ok,
           f"spectral drift {sigma_drift:.2e}, L drift {lap:.2e}, {len(ensemble)} runs in {total:.1f}s")


def test_mckean_singer(ensemble):
    u_err = 0.0
    for r in ensemble:
        pd = np.diag(r.P.entries).real
        for s in r.fwd.states():
            u_err = max(u_err, abs(np.dot(pd, np.diag(s.U)) - r.chi))
    heat = 0.0
    for r in ensemble:
        L0 = r.fwd.L0
        for t in (0.1, 1.0, 10.0):
            heat = max(heat, abs(mckean_singer_heat(L0, r.P, t) - r.chi))
    record(3, "McKean-Singer", u_err < 1e-6 and heat < 1e-9,
           f"max |str U - chi| {u_err:.2e}, max |str exp(-tL) - chi| {heat:.2e}")


def test_monotone_traces_and_inflation(ensemble):
    worst_b2, worst_M, start_rate = 0.0, 0.0, 0.0
    interior = True
    for r in ensemble:
        states = r.fwd.states()
        b2 = np.array([np.trace(s.dec.V().entries).real for s in states])
        M = np.array([np.trace(s.dec.M().entries).real for s in states])
        rate = np.array([2 * np.trace(s.dec.b_part.entries @ s.b_dot).real for s in states])
        worst_b2 = max(worst_b2, float(np.max(-np.diff(b2), initial=0.0)))
        worst_M = max(worst_M, float(np.max(np.diff(M), initial=0.0)))
        start_rate = max(start_rate, abs(rate[0]))
        peak = int(np.argmax(rate))
        interior &= 0 < peak < len(rate) - 1 and states[peak].t > 0
    ok = worst_b2 <= 1e-9 and worst_M <= 1e-9 and start_rate < 1e-12 and interior
    record(4, "monotone traces and inflation", ok,
           f"max decrease of tr b^2 {worst_b2:.1e}, max increase of tr M {worst_M:.1e}, "
           f"rate at t=0 {start_rate:.1e}, interior peak on all runs: {interior}")


def test_asymptotics(ensemble):
    b2, dmax, tail = 0.0, 0.0, 0.0
    converged = True
    for r in ensemble:
        converged &= r.fwd.reason == "converged"
        if r.fwd.reason != "converged":
            continue
        a = asymptotics(r.fwd)
        assert np.trace(r.fwd.final.dec.M().entries).real < 1e-6 * np.trace(r.fwd.L0).real
        b2, dmax, tail = max(b2, a.b2_minus_L), max(dmax, a.d_max), max(tail, a.U_tail)
    ok = converged and b2 < 1e-3 and dmax < 1e-2 and tail < 1e-4
    record(5, "asymptotics", ok,
           f"all converged: {converged}, |b^2 - L| {b2:.1e}, |d| {dmax:.1e}, "
           f"|U(T) - U(T - {ensemble[0].fwd.config.cauchy_delta})| {tail:.1e}")


def test_time_symmetry(ensemble):
    worst, limit, limit_gap = 0.0, 0.0, 0.0
    for r in ensemble:
        back = {round(-s.t, 9): s for s in r.bwd.states()}
        for s in r.fwd.states():
            o = back.get(round(s.t, 9))
            if o is None:
                continue
            worst = max(worst, max_abs(s.D.entries + o.D.entries - 2 * s.dec.C().entries))
        fin = r.fwd.final
        o = back.get(round(fin.t, 9))
        if o is not None:
            # D(T) + D(-T) = 2 C(T), and C(T) -> 0 with d(T)
            total = max_abs(fin.D.entries + o.D.entries)
            limit = max(limit, total)
            limit_gap = max(limit_gap, abs(total - 2 * max_abs(fin.dec.C().entries)))
    ok = worst < 1e-6 and limit_gap < 1e-6 and limit < 2e-2
    record(6, "time symmetry", ok,
           f"max |D(t) + D(-t) - 2C(t)| {worst:.2e}, max |D(T) + D(-T)| {limit:.2e} "
           f"(= 2|C(T)| within {limit_gap:.1e})")


def test_O_Q_semidefinite(ensemble):
    o_min, q_max = 0.0, 0.0
    for r in ensemble:
        for s in r.fwd.states():
            if s.t == 0:
                continue
            b = s.dec.b_part.entries
            d = s.dec.d_part.entries
            # with the degree-raising d used here, O = -b d*d and Q = -b dd*
            O = -b @ (d.conj().T @ d)
            Q = -b @ (d @ d.conj().T)
            o_min = min(o_min, float(np.linalg.eigvalsh(0.5 * (O + O.conj().T)).min()))
            q_max = max(q_max, float(np.linalg.eigvalsh(0.5 * (Q + Q.conj().T)).max()))
    record(7, "O/Q semidefiniteness", o_min >= -1e-8 and q_max <= 1e-8,
           f"min eig O {o_min:.2e}, max eig Q {q_max:.2e}")


def test_cohomology_constancy(ensemble):
    mismatches, euler_ok, checked = 0, True, 0
    for r in ensemble:
        b0 = betti_numbers(r.d)
        euler_ok &= b0.euler() == r.chi
        for s in r.fwd.states():
            bt = betti_numbers(s.dec.d_part, check=False, laplacian=r.fwd.L0)
            mismatches += bt.betti != b0.betti
            checked += 1
    record(8, "cohomology constancy", mismatches == 0 and euler_ok,
           f"{mismatches} mismatches in {checked} snapshots, Euler-Poincare: {euler_ok}")


def test_beta_independence_and_complex_structure():
    worst, emerge, fade = 0.0, np.inf, 0.0
    for g in (Graph.complete(2), None):
        c, d, D, P = setup(g) if g is not None else er(12, 0)
        cfg = FlowConfig(t_end=20.0, snapshot_times=tuple(np.round(np.arange(0, 20.0001, 0.05), 10)))
        real = run_flow(D, cfg)
        cplx = run_flow(D, replace(cfg, beta=1.0))
        other = {round(s.t, 9): s for s in real.states()}
        for s in cplx.states():
            o = other.get(round(s.t, 9))
            if o is not None:
                worst = max(worst, max_abs(s.dec.b_part.entries - o.dec.b_part.entries))
        emerge = min(emerge, max_abs(cplx.state_at(0.2).D.entries.imag))
        DT = cplx.final.D.entries
        assert cplx.reason == "converged"
        fade = max(fade, max_abs(DT.imag) / max_abs(DT.real))
    ok = worst < 1e-6 and emerge > 0 and fade < 0.05
    record(9, "beta independence and complex structure", ok,
           f"max |b_0 - b_1| {worst:.2e}, min |Im D(0.2)| {emerge:.2e}, max |Im D(T)|/|Re D(T)| {fade:.2e}")


def test_zeta_values():
    spec = eigen_hermitian(setup(Graph.complete(2))[2])
    z2 = dirac_zeta(spec, -2)
    z1 = dirac_zeta(spec, -1)
    pd = pseudo_determinant(spec)
    ok = abs(z2 - 4) < 1e-10 and abs(z1) < 1e-12 and abs(pd.signed + 2) < 1e-10 and np.isfinite(pd.zeta_based)
    record(10, "zeta values", ok,
           f"zeta(-2) = {z2.real:.12g}, |zeta(-1)| = {abs(z1):.1e}, signed pdet {pd.signed:.12g}, "
           f"exp(-zeta'(0)) = {pd.zeta_based:.6g}")


def test_circle_model():
    start = time.perf_counter()
    traj = circle_flow(circle_init(3), t_end=10.0, dt=1e-3, converge_rtol=1e-6)
    seconds = time.perf_counter() - start
    b_err, bc = interior_asymptote_error(traj.final)
    ok = traj.conserved_drift < 1e-8 and traj.laplacian_drift < 1e-7 and traj.converged and b_err < 1e-3 and seconds < 5
    record(11, "circle model", ok,
           f"AC+BA drift {traj.conserved_drift:.1e}, block L drift {traj.laplacian_drift:.1e}, "
           f"interior |B - |k|| {b_err:.1e} at t={traj.times[-1]:.2f}, {seconds:.2f}s")


def test_supersymmetry_breaking(ensemble):
    c, d, D, P = setup(Graph.complete(2))
    runs = [run_flow(D, FlowConfig(t_end=20.0)), ensemble[0].fwd]
    at_zero, at_end, count = 0.0, 1.0, 0
    for traj in runs:
        assert traj.reason == "converged"
        rep = supersymmetry_breaking_report(traj)
        count += rep.cosines.shape[1]
        at_zero = max(at_zero, rep.max_at_zero)
        at_end = min(at_end, rep.min_at_final)
    record(12, "supersymmetry breaking", at_zero < 1e-10 and at_end > 0.95 and count > 0,
           f"{count} vectors, max cosine at t=0 {at_zero:.1e}, min cosine at T {at_end:.4f}")
