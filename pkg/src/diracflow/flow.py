"""Lax deformation D' = [B, D] of a graph Dirac operator.

The state is integrated in block form: the degree-raising part ``d``, the
degree-preserving part ``b`` and the propagator ``U`` with ``U' = B U``.
With ``B = d - d* + i beta b`` the commutator splits into

    d' = (1 - i beta) (d b - b d)
    b' = 2 (d d* - d* d)

and the degree -1 part of [B, D] is the adjoint of ``d'``.
"""

from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .integrate import rk4_step, step_grid
from .operators import (
    HERMITIAN_TOL,
    STRUCTURE_TOL,
    DiracDecomposition,
    GradedMatrix,
    StructureError,
    extract_blocks,
)

Method = Literal["rk4-blocks", "rk4-full"]
Reason = Literal["completed", "converged", "drift_abort"]


class NotConvergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class FlowConfig:
    """Integration settings.

    ``dt=None`` picks ``min(0.005, 0.05 / (1 + rho(L)))``. ``snapshot_times=None``
    places snapshots every ``snapshot_every`` time units.
    """

    beta: float = 0.0
    t_end: float = 20.0
    dt: float | None = None
    snapshot_times: tuple[float, ...] | None = None
    snapshot_every: float = 0.05
    drift_tol: float = 1e-6
    method: Method = "rk4-blocks"
    converge_rtol: float = 1e-6
    cauchy_delta: float = 0.02

    def __post_init__(self):
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if self.dt is not None and not 0 < self.dt <= self.t_end:
            raise ValueError("dt must satisfy 0 < dt <= t_end")
        if self.drift_tol <= 0:
            raise ValueError("drift_tol must be positive")
        if self.method not in ("rk4-blocks", "rk4-full"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.cauchy_delta <= 0:
            raise ValueError("cauchy_delta must be positive")
        if self.snapshot_times is not None:
            ts = tuple(float(t) for t in self.snapshot_times)
            if any(t < 0 or t > self.t_end for t in ts) or list(ts) != sorted(ts):
                raise ValueError("snapshot_times must be sorted and inside [0, t_end]")
            object.__setattr__(self, "snapshot_times", ts)

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "t_end": self.t_end,
            "dt": self.dt,
            "snapshot_times": list(self.snapshot_times) if self.snapshot_times is not None else None,
            "snapshot_every": self.snapshot_every,
            "drift_tol": self.drift_tol,
            "method": self.method,
            "converge_rtol": self.converge_rtol,
            "cauchy_delta": self.cauchy_delta,
        }


@dataclass(frozen=True)
class Diagnostics:
    tr_M: float
    tr_b2: float
    d_dt_tr_b2: float
    spectral_drift: float
    laplacian_drift: float
    str_U: complex

    @property
    def d_dt_tr_M(self) -> float:
        return -self.d_dt_tr_b2


@dataclass(frozen=True)
class FlowState:
    t: float
    dec: DiracDecomposition
    U: np.ndarray
    b_dot: np.ndarray
    diagnostics: Diagnostics

    @property
    def D(self) -> GradedMatrix:
        return self.dec.D()


@dataclass
class FlowTrajectory:
    config: FlowConfig
    D0: GradedMatrix
    parity_diag: np.ndarray
    snapshots: list[FlowState] = field(default_factory=list)
    final: FlowState | None = None
    reason: Reason = "completed"
    direction: int = 1
    dt: float = 0.0
    # Per-step scalar series: t, tr_M, tr_b2, d_dt_tr_b2, str_U
    series: dict[str, np.ndarray] = field(default_factory=dict)
    # U at |t| = |T| - cauchy_delta (or t = 0 for short runs)
    U_lagged: np.ndarray | None = None
    lag: float = 0.0

    @property
    def euler_characteristic(self) -> int:
        return int(round(self.parity_diag.real.sum()))

    @property
    def L0(self) -> np.ndarray:
        return self.D0.entries @ self.D0.entries

    def states(self) -> list[FlowState]:
        """Snapshots followed by the final state when it is not already one."""
        out = list(self.snapshots)
        if self.final is not None and (not out or out[-1].t != self.final.t):
            out.append(self.final)
        return out

    def state_at(self, t: float, atol: float = 1e-9) -> FlowState:
        for s in self.states():
            if abs(s.t - t) <= atol:
                return s
        raise KeyError(f"no snapshot at t={t}")


def default_dt(L0: np.ndarray) -> float:
    rho = float(np.linalg.eigvalsh(0.5 * (L0 + L0.conj().T)).max()) if L0.size else 0.0
    # Half the step that is merely stable: keeps max|L(t) - L(0)| near 1e-8.
    return min(0.005, 0.05 / (1.0 + rho))


def _block_rhs(d: np.ndarray, b: np.ndarray, beta: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ds = d.conj().T
    B = d - ds + 1j * beta * b
    d_dot = (1.0 - 1j * beta) * (d @ b - b @ d)
    b_dot = 2.0 * (d @ ds - ds @ d)
    return d_dot, b_dot, B


def rhs(dec: DiracDecomposition) -> tuple[GradedMatrix, GradedMatrix, GradedMatrix]:
    """Degree +1 and degree 0 parts of [B, D], and the generator B."""
    d_dot, b_dot, B = _block_rhs(dec.d_part.entries, dec.b_part.entries, dec.beta)
    g = dec.d_part
    return g.with_entries(d_dot), g.with_entries(b_dot), g.with_entries(B)


def _diagnostics(d, b, b_dot, U, L0, ev0, pdiag, full: bool) -> Diagnostics:
    tr_M = 2.0 * float(np.sum(np.abs(d) ** 2))
    tr_b2 = float(np.real(np.sum(b * b.T)))
    d_dt = 2.0 * float(np.real(np.sum(b * b_dot.T)))
    strU = complex(np.dot(pdiag, np.diag(U)))
    if not full:
        return Diagnostics(tr_M, tr_b2, d_dt, float("nan"), float("nan"), strU)
    D = d + d.conj().T + b
    ev = np.linalg.eigvalsh(0.5 * (D + D.conj().T))
    drift = float(np.abs(ev - ev0).max()) if ev.size else 0.0
    ldrift = float(np.abs(D @ D - L0).max()) if D.size else 0.0
    return Diagnostics(tr_M, tr_b2, d_dt, drift, ldrift, strU)


def run_flow(
    D0: GradedMatrix,
    cfg: FlowConfig,
    parity_diag: np.ndarray | None = None,
    direction: int = 1,
) -> FlowTrajectory:
    """Integrate from an undeformed Dirac operator.

    ``direction=-1`` integrates the negated right-hand side, i.e. runs the
    flow backward in time; snapshot times are then reported as negative.
    Stops early when tr(M) < converge_rtol * tr(L0) ("converged") or when
    max|D(t)^2 - L0| exceeds drift_tol ("drift_abort").
    """
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    dec0 = extract_blocks(D0, cfg.beta)
    if dec0.residual > STRUCTURE_TOL:
        raise StructureError("initial operator is not block tridiagonal")
    if np.abs(dec0.b_part.entries).max(initial=0.0) > 0:
        raise ValueError("initial operator must be undeformed (zero b part)")
    v = D0.size
    if parity_diag is None:
        deg = np.repeat(np.arange(D0.n_degrees), np.diff(D0.offsets))
        parity_diag = np.where(deg % 2 == 0, 1.0, -1.0)
    pdiag = np.asarray(parity_diag, dtype=complex)

    L0 = D0.entries @ D0.entries
    ev0 = np.linalg.eigvalsh(D0.entries)
    trL = float(np.trace(L0).real)
    n_steps, h = step_grid(cfg.t_end, cfg.dt if cfg.dt is not None else default_dt(L0))
    sgn = float(direction)
    beta = cfg.beta
    up = D0.degree_mask(1)
    diag = D0.degree_mask(0)

    if cfg.snapshot_times is not None:
        snap_steps = {int(round(t / h)) for t in cfg.snapshot_times}
    else:
        stride = max(1, int(round(cfg.snapshot_every / h)))
        snap_steps = set(range(0, n_steps + 1, stride))
    snap_steps.add(0)

    if cfg.method == "rk4-blocks":

        def f(y):
            d, b, U = y
            d_dot, b_dot, B = _block_rhs(d, b, beta)
            return sgn * d_dot, sgn * b_dot, sgn * (B @ U)

        def unpack(y):
            return y[0], y[1], y[2], 0.0

        y = (dec0.d_part.entries.copy(), dec0.b_part.entries.copy(), np.eye(v, dtype=complex))
    else:

        def f(y):
            D, U = y
            d = np.where(up, D, 0)
            b = np.where(diag, D, 0)
            B = d - d.conj().T + 1j * beta * b
            return sgn * (B @ D - D @ B), sgn * (B @ U)

        def unpack(y):
            D, U = y
            d = np.where(up, D, 0)
            b = np.where(diag, D, 0)
            rest = D - d - d.conj().T - b
            return d, b, U, float(np.abs(rest).max()) if rest.size else 0.0

        y = (D0.entries.copy(), np.eye(v, dtype=complex))

    traj = FlowTrajectory(cfg, D0, pdiag, direction=direction, dt=h)
    series: dict[str, list] = {k: [] for k in ("t", "tr_M", "tr_b2", "d_dt_tr_b2", "str_U")}

    def make_state(k, d, b, U, b_dot, full=True) -> FlowState:
        diag_ = _diagnostics(d, b, b_dot, U, L0, ev0, pdiag.real, full)
        dec = DiracDecomposition(D0.with_entries(d), D0.with_entries(b), beta)
        return FlowState(sgn * k * h, dec, U.copy(), b_dot, diag_)

    lag_steps = max(1, int(round(cfg.cauchy_delta / h)))
    recent_U: deque = deque(maxlen=lag_steps + 1)

    reason: Reason = "completed"
    k = 0
    while True:
        d, b, U, residual = unpack(y)
        recent_U.append(U)
        if residual > STRUCTURE_TOL:
            raise StructureError(f"degree structure lost at t={sgn * k * h:.4g}: residual {residual:.2e}")
        b_dot = sgn * 2.0 * (d @ d.conj().T - d.conj().T @ d)
        tr_M = 2.0 * float(np.sum(np.abs(d) ** 2))
        tr_b2 = float(np.real(np.sum(b * b.T)))
        series["t"].append(sgn * k * h)
        series["tr_M"].append(tr_M)
        series["tr_b2"].append(tr_b2)
        series["d_dt_tr_b2"].append(2.0 * float(np.real(np.sum(b * b_dot.T))))
        series["str_U"].append(complex(np.dot(pdiag, np.diag(U))))

        D = d + d.conj().T + b
        ldrift = float(np.abs(D @ D - L0).max()) if v else 0.0
        if not np.isfinite(ldrift) or ldrift > cfg.drift_tol:
            reason = "drift_abort"
        elif trL > 0 and tr_M < cfg.converge_rtol * trL:
            reason = "converged"
        elif trL == 0 and k == 0:
            reason = "converged"
        elif k >= n_steps:
            reason = "completed"
        done = reason != "completed" or k >= n_steps

        if k in snap_steps or done:
            state = make_state(k, d, b, U, b_dot, full=np.isfinite(ldrift))
            if b.size and np.abs(b - b.conj().T).max() > HERMITIAN_TOL:
                raise StructureError(f"b lost Hermiticity at t={state.t:.4g}")
            if k in snap_steps:
                traj.snapshots.append(state)
            if done:
                traj.final = state
        if done:
            break
        y = rk4_step(f, y, h)
        k += 1

    traj.reason = reason
    traj.U_lagged = recent_U[0].copy()
    traj.lag = (len(recent_U) - 1) * h
    traj.series = {k_: np.asarray(v_) for k_, v_ in series.items()}
    return traj


def run_bidirectional(D0: GradedMatrix, cfg: FlowConfig, parity_diag=None) -> tuple[FlowTrajectory, FlowTrajectory]:
    fwd = run_flow(D0, cfg, parity_diag, direction=1)
    bwd = run_flow(D0, cfg, parity_diag, direction=-1)
    return fwd, bwd


def time_symmetry_residuals(fwd: FlowTrajectory, bwd: FlowTrajectory) -> list[tuple[float, float]]:
    """max|D(t) + D(-t) - 2 C(t)| at every |t| present in both runs."""
    back = {round(-s.t, 9): s for s in bwd.states()}
    out = []
    for s in fwd.states():
        other = back.get(round(s.t, 9))
        if other is None:
            continue
        r = s.D.entries + other.D.entries - 2.0 * s.dec.C().entries
        out.append((s.t, float(np.abs(r).max()) if r.size else 0.0))
    return out


@dataclass(frozen=True)
class AsymptoticSummary:
    T: float
    b2_minus_L: float
    d_max: float
    C_max: float
    U_tail: float | None
    delta: float | None


def asymptotics(traj: FlowTrajectory) -> AsymptoticSummary:
    if traj.reason != "converged":
        raise NotConvergedError(f"trajectory ended with reason {traj.reason!r}")
    states = traj.states()
    last = states[-1]
    b = last.dec.b_part.entries
    L0 = traj.L0
    U_tail = delta = None
    if traj.config.beta == 0 and traj.U_lagged is not None and traj.lag > 0:
        U_tail = float(np.abs(last.U - traj.U_lagged).max())
        delta = traj.lag
    return AsymptoticSummary(
        T=last.t,
        b2_minus_L=float(np.abs(b @ b - L0).max()),
        d_max=float(np.abs(last.dec.d_part.entries).max(initial=0.0)),
        C_max=float(np.abs(last.dec.C().entries).max(initial=0.0)),
        U_tail=U_tail,
        delta=delta,
    )


def inflation_profile(traj: FlowTrajectory, dense: bool = False) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(t, tr M, d/dt tr M) with the derivative from -2 tr(b b'), not differences.

    ``dense=True`` uses every integration step instead of the snapshots.
    """
    if dense:
        s = traj.series
        return s["t"], s["tr_M"], -s["d_dt_tr_b2"]
    states = traj.states()
    if len(states) < 3:
        raise ValueError("inflation profile needs at least 3 snapshots")
    t = np.array([s.t for s in states])
    trM = np.array([s.diagnostics.tr_M for s in states])
    dtrM = np.array([s.diagnostics.d_dt_tr_M for s in states])
    return t, trM, dtrM


TRAJECTORY_COLUMNS = ("t", "tr_M", "d_dt_tr_M", "tr_b2", "spectral_drift", "str_U_re", "str_U_im")


def trajectory_to_csv(traj: FlowTrajectory, include_final: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    states = traj.states() if include_final else traj.snapshots
    for s in states:
        g = s.diagnostics
        w.writerow(
            format(x, ".17g")
            for x in (s.t, g.tr_M, g.d_dt_tr_M, g.tr_b2, g.spectral_drift, g.str_U.real, g.str_U.imag)
        )
    return buf.getvalue()


def with_beta(cfg: FlowConfig, beta: float) -> FlowConfig:
    return replace(cfg, beta=beta)
