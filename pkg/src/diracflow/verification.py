"""Invariant checks over flow trajectories, collected into a JSON report."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .cohomology import betti_numbers, complex_split, kahler_test, nilpotency_residual
from .complex import SimplicialComplex, euler_characteristic
from .flow import FlowTrajectory, asymptotics, time_symmetry_residuals
from .operators import extract_blocks
from .spectral import (
    HarmonicVectorError,
    dirac_zeta,
    eigen_hermitian,
    even_superpartner_basis,
    mckean_singer_heat,
    superpartner_cosine,
)

Verdict = Literal["pass", "fail", "flagged"]

DEFAULT_TOLERANCES: dict[str, float] = {
    "isospectrality": 1e-7,
    "laplacian_invariance": 1e-7,
    "unitarity": 1e-7,
    "mckean_singer_U": 1e-6,
    "mckean_singer_heat": 1e-9,
    "hermiticity": 1e-8,
    "spectral_symmetry": 1e-8,
    "monotone_slack": 1e-9,
    "inflation_start": 1e-12,
    "O_nonnegative": 1e-8,
    "Q_nonpositive": 1e-8,
    "commuting_family": 1e-7,
    "degree_structure": 1e-9,
    "nilpotency": 1e-9,
    "time_symmetry": 1e-6,
    "beta_independence": 1e-6,
    "zeta_even": 1e-8,
    "zeta_odd": 1e-10,
    "supertrace_B0": 1e-9,
    "asym_b2_minus_L": 1e-3,
    "asym_d_max": 1e-2,
    "asym_U_tail": 1e-4,
    "split_residual": 1e-7,
    "laplacian_split": 1e-6,
    "M_real": 1e-8,
    "complex_fade": 0.05,
    "superpartner_t0": 1e-10,
    "superpartner_final": 0.95,
}

TOL_TABLE_ENV = "DIRACFLOW_TOL_TABLE"


def load_tolerances(path: str | os.PathLike | None = None) -> dict[str, float]:
    """Defaults, overridden by a JSON object at ``path`` or $DIRACFLOW_TOL_TABLE."""
    table = dict(DEFAULT_TOLERANCES)
    path = path or os.environ.get(TOL_TABLE_ENV)
    if path:
        overrides = json.loads(Path(path).read_text())
        unknown = set(overrides) - set(table)
        if unknown:
            raise KeyError(f"unknown tolerance keys: {sorted(unknown)}")
        table.update({k: float(v) for k, v in overrides.items()})
    return table


@dataclass(frozen=True)
class Check:
    name: str
    anchor: str
    residual: float
    tol: float
    verdict: Verdict

    def to_dict(self) -> dict:
        r = self.residual if math.isfinite(self.residual) else None
        return {"name": self.name, "anchor": self.anchor, "residual": r, "tol": self.tol, "verdict": self.verdict}


@dataclass
class InvariantReport:
    checks: list[Check] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def overall(self) -> bool:
        return all(c.verdict == "pass" for c in self.checks if c.verdict != "flagged")

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def names(self) -> list[str]:
        return [c.name for c in self.checks]

    def to_dict(self) -> dict:
        return {
            "checks": [c.to_dict() for c in self.checks],
            "overall": "pass" if self.overall else "fail",
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def summary_lines(self) -> list[str]:
        return [
            f"{c.verdict.upper():7s} {c.name:28s} residual={c.residual:.3e} tol={c.tol:.1e}"
            for c in self.checks
        ]


class _Builder:
    def __init__(self, tol: dict[str, float]):
        self.tol = tol
        self.checks: list[Check] = []

    def upper(self, name: str, anchor: str, residual: float, key: str | None = None, flagged: bool = False):
        """Pass when residual < tol."""
        tol = self.tol[key or name]
        if flagged:
            verdict: Verdict = "flagged"
        else:
            verdict = "pass" if (math.isfinite(residual) and residual < tol) else "fail"
        self.checks.append(Check(name, anchor, float(residual), tol, verdict))

    def lower(self, name: str, anchor: str, value: float, key: str | None = None):
        """Pass when value > tol."""
        tol = self.tol[key or name]
        verdict: Verdict = "pass" if (math.isfinite(value) and value > tol) else "fail"
        self.checks.append(Check(name, anchor, float(value), tol, verdict))

    def boolean(self, name: str, anchor: str, ok: bool, residual: float = 0.0):
        self.checks.append(Check(name, anchor, float(residual), 0.0, "pass" if ok else "fail"))


def _max(xs, default=0.0) -> float:
    xs = [x for x in xs]
    return float(max(xs)) if xs else default


def verify_trajectory(
    traj: FlowTrajectory,
    complex_: SimplicialComplex,
    backward: FlowTrajectory | None = None,
    paired: FlowTrajectory | None = None,
    tolerances: dict[str, float] | None = None,
    meta: dict | None = None,
) -> InvariantReport:
    """Run every applicable invariant check; failures become verdicts.

    ``backward`` enables the time-symmetry check, ``paired`` (same D0,
    different beta) the beta-independence check.
    """
    tol = dict(tolerances or load_tolerances())
    B = _Builder(tol)
    states = traj.states()
    D0 = traj.D0.entries
    L0 = D0 @ D0
    ev0 = np.linalg.eigvalsh(D0)
    v = D0.shape[0]
    I = np.eye(v)
    chi = euler_characteristic(complex_)
    pdiag = traj.parity_diag.real
    beta = traj.config.beta
    later = [s for s in states if s.t != 0]

    def D_of(s):
        return s.dec.D().entries

    def herm(A):
        return 0.5 * (A + A.conj().T)

    B.upper("isospectrality", "sigma(D(t)) = sigma(D(0))",
            _max(np.abs(np.linalg.eigvalsh(herm(D_of(s))) - ev0).max(initial=0.0) for s in states))
    B.upper("laplacian_invariance", "L(t) = D(t)^2 = L(0)",
            _max(np.abs(D_of(s) @ D_of(s) - L0).max(initial=0.0) for s in states))
    B.upper("unitarity", "U'= B U unitary",
            _max(np.abs(s.U.conj().T @ s.U - I).max(initial=0.0) for s in states))
    if beta == 0:
        B.upper("mckean_singer_U", "str(U(t)) = chi(G)",
                _max(abs(np.dot(pdiag, np.diag(s.U)) - chi) for s in states))
    B.upper("hermiticity", "D(t) Hermitian",
            _max(np.abs(D_of(s) - D_of(s).conj().T).max(initial=0.0) for s in states))
    B.upper("spectral_symmetry", "sigma(D) = -sigma(D)",
            _max(eigen_hermitian(herm(D_of(s)), vectors=False).symmetry_defect() for s in states))

    tb2 = np.array([np.real(np.trace(s.dec.b_part.entries @ s.dec.b_part.entries)) for s in states])
    tM = np.array([np.real(np.trace(s.dec.M().entries)) for s in states])
    B.upper("monotone_tr_b2", "tr(b^2)' >= 0",
            float(np.max(np.clip(-np.diff(tb2), 0, None), initial=0.0)), key="monotone_slack")
    B.upper("monotone_tr_M", "tr(M)' <= 0",
            float(np.max(np.clip(np.diff(tM), 0, None), initial=0.0)), key="monotone_slack")

    rate = np.array([2.0 * np.real(np.trace(s.dec.b_part.entries @ s.b_dot)) for s in states])
    B.upper("inflation_start", "d/dt tr(b^2) = 0 at t = 0", abs(rate[0]))
    if len(rate) >= 3 and np.any(rate > 0):
        peak = int(np.argmax(rate))
        interior = 0 < peak < len(rate) - 1
        B.boolean("inflation_peak_interior", "tr(b^2)' has an interior maximum", interior,
                  residual=abs(states[peak].t))

    o_min, q_max, comm = 0.0, 0.0, 0.0
    for s in later:
        b = s.dec.b_part.entries
        d = s.dec.d_part.entries
        R = d @ d.conj().T
        S = d.conj().T @ d
        # Sign map: the degree-raising d used here is the adjoint of the
        # degree-lowering one in which O >= 0, Q <= 0 are usually stated.
        O = -b @ S
        Q = -b @ R
        o_min = min(o_min, float(np.linalg.eigvalsh(herm(O)).min()))
        q_max = max(q_max, float(np.linalg.eigvalsh(herm(Q)).max()))
        fam = (b, R, S, b @ b)
        for i in range(4):
            for j in range(i + 1, 4):
                comm = max(comm, float(np.abs(fam[i] @ fam[j] - fam[j] @ fam[i]).max()))
    B.upper("O_nonnegative", "O has no negative eigenvalues", max(0.0, -o_min))
    B.upper("Q_nonpositive", "Q has no positive eigenvalues", max(0.0, q_max))
    B.upper("commuting_family", "[b, dd*] = [b, d*d] = [b, b^2] = 0", comm)

    B.upper("degree_structure", "D(t) = d + d* + b",
            _max(extract_blocks(s.dec.D(), beta).residual for s in states))
    B.upper("nilpotency", "d(t)^2 = 0", _max(nilpotency_residual(s.dec.d_part) for s in states))

    # cohomology
    betti0 = betti_numbers(traj.D0.with_entries(np.where(traj.D0.degree_mask(1), D0, 0)))
    B.boolean("euler_poincare", "sum (-1)^p b_p = chi", betti0.euler() == chi, residual=abs(betti0.euler() - chi))
    mismatches = 0
    flagged = betti0.flagged
    for s in later:
        bv = betti_numbers(s.dec.d_part, check=False, laplacian=L0)
        flagged |= bv.flagged
        mismatches += bv.betti != betti0.betti
    B.checks.append(Check("betti_constancy", "H(d(t)) = H(d(0))", float(mismatches), 0.0,
                          "flagged" if (flagged and mismatches) else ("pass" if mismatches == 0 else "fail")))

    # spectral identities at t = 0
    spec0 = eigen_hermitian(D0, vectors=False)
    Lk = I.astype(complex)
    zeta_even = 0.0
    for k in (1, 2):
        Lk = Lk @ L0
        zeta_even = max(zeta_even, abs(dirac_zeta(spec0, -2 * k) - np.trace(Lk)))
    B.upper("zeta_even", "zeta(-2k) = tr(L^k)", zeta_even)
    B.upper("zeta_odd", "zeta(-2k-1) = 0", max(abs(dirac_zeta(spec0, -(2 * k + 1))) for k in (0, 1)))
    B.upper("mckean_singer_heat", "str(exp(-tL)) = chi(G)",
            max(abs(mckean_singer_heat(L0, np.diag(pdiag), t) - chi) for t in (0.1, 1.0, 10.0)))
    B0 = states[0].dec.B().entries
    Bk = I.astype(complex)
    st = 0.0
    for _ in range(4):
        Bk = Bk @ B0
        st = max(st, abs(np.dot(pdiag, np.diag(Bk))))
    B.upper("supertrace_B0", "str(B(0)^k) = 0", st)

    if backward is not None:
        res = time_symmetry_residuals(traj, backward)
        B.upper("time_symmetry", "D(t) + D(-t) = 2C(t)", _max(r for _, r in res))
    if paired is not None:
        other = {round(s.t, 9): s for s in paired.states()}
        diffs = [
            float(np.abs(s.dec.b_part.entries - other[round(s.t, 9)].dec.b_part.entries).max(initial=0.0))
            for s in states
            if round(s.t, 9) in other
        ]
        B.upper("beta_independence", "b(t) independent of beta", _max(diffs, default=float("nan")))

    if beta != 0:
        split_res, lap_split, m_imag = 0.0, 0.0, 0.0
        for s in states:
            sp = complex_split(s.dec.d_part)
            split_res = max(split_res, sp.del_sq, sp.delbar_sq, sp.anticommutator)
            lap_split = max(lap_split, kahler_test(sp).laplacian_split_residual)
            m_imag = max(m_imag, float(np.abs(s.dec.M().entries.imag).max(initial=0.0)))
        B.upper("split_residual", "del^2 = delbar^2 = {del, delbar} = 0", split_res)
        B.upper("laplacian_split", "M = L_del + L_delbar", lap_split)
        B.upper("M_real", "M = C^2 real", m_imag)
        emerged = _max(float(np.abs(D_of(s).imag).max(initial=0.0)) for s in later)
        B.boolean("complex_emerges", "Im D(t) != 0 for t > 0", emerged > 0, residual=emerged)

    if traj.reason == "converged":
        a = asymptotics(traj)
        B.upper("asym_b2_minus_L", "b(T)^2 -> L", a.b2_minus_L)
        B.upper("asym_d_max", "d(T) -> 0", a.d_max)
        if a.U_tail is not None:
            B.upper("asym_U_tail", "U(t) converges", a.U_tail)
        if beta != 0:
            Dend = D_of(states[-1])
            B.upper("complex_fade", "|Im D(T)| / |Re D(T)| -> 0",
                    float(np.abs(Dend.imag).max() / max(np.abs(Dend.real).max(), 1e-300)))
        susy = supersymmetry_breaking_report(traj)
        if susy.cosines.size:
            B.upper("superpartner_t0", "<f, D f> = 0 at t = 0", susy.max_at_zero)
            B.lower("superpartner_final", "f, D f parallel as t -> oo", susy.min_at_final)
    B.boolean("trajectory_ok", "flow finished without drift abort", traj.reason != "drift_abort")

    report = InvariantReport(B.checks)
    report.meta = {
        "beta": beta,
        "dt": traj.dt,
        "reason": traj.reason,
        "final_t": states[-1].t,
        "f_vector": list(complex_.f_vector),
        "chi": chi,
        "betti": list(betti0.betti),
        "tolerances": tol,
        **(meta or {}),
    }
    return report


@dataclass(frozen=True)
class SusyReport:
    times: np.ndarray
    cosines: np.ndarray  # (snapshots, vectors); NaN where D(t) f = 0
    max_at_zero: float
    min_at_final: float


def supersymmetry_breaking_report(traj: FlowTrajectory, vectors: np.ndarray | None = None) -> SusyReport:
    """Superpartner cosines |<f, D(t) f>| / (|f| |D(t) f|) per snapshot.

    By default ``f`` runs over the non-harmonic even-degree eigenvectors of
    d d* - d* d at t = 0.
    """
    states = traj.states()
    if vectors is None:
        d0 = np.where(traj.D0.degree_mask(1), traj.D0.entries, 0)
        vectors = even_superpartner_basis(d0, traj.parity_diag)
    cos = np.full((len(states), vectors.shape[1]), np.nan)
    for i, s in enumerate(states):
        D = s.dec.D().entries
        for j in range(vectors.shape[1]):
            try:
                cos[i, j] = superpartner_cosine(vectors[:, j], D)
            except HarmonicVectorError:
                pass
    times = np.array([s.t for s in states])
    if cos.size == 0:
        return SusyReport(times, cos, 0.0, 1.0)
    return SusyReport(times, cos, float(np.nanmax(cos[0])), float(np.nanmin(cos[-1])))
