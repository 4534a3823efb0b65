"""Fourier-truncated circle: the block system B' = 2AA*, A' = 2AC, C' = -2A*A."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .integrate import rk4_step, step_grid


class CircleInstabilityError(RuntimeError):
    def __init__(self, t: float, dt: float):
        super().__init__(f"non-finite state at t={t:.4g}; retry with dt < {dt / 4:.3g}")
        self.t = t
        self.suggested_dt = dt / 4


@dataclass(frozen=True)
class TruncatedCircle:
    n_max: int
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    def conserved(self) -> np.ndarray:
        return self.A @ self.C + self.B @ self.A


def circle_init(n_max: int) -> TruncatedCircle:
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    k = np.arange(-n_max, n_max + 1)
    z = np.zeros((k.size, k.size), dtype=complex)
    return TruncatedCircle(n_max, np.diag(1j * k), z.copy(), z.copy())


def circle_rhs(y):
    A, B, C = y
    As = A.conj().T
    return 2.0 * A @ C, 2.0 * A @ As, -2.0 * As @ A


def circle_block_laplacian(tc: TruncatedCircle) -> tuple[np.ndarray, np.ndarray]:
    A = tc.A
    return tc.B @ tc.B + A @ A.conj().T, tc.C @ tc.C + A.conj().T @ A


@dataclass
class CircleTrajectory:
    n_max: int
    dt: float
    times: list[float] = field(default_factory=list)
    states: list[TruncatedCircle] = field(default_factory=list)
    conserved_drift: float = 0.0
    laplacian_drift: float = 0.0
    converged: bool = False

    @property
    def final(self) -> TruncatedCircle:
        return self.states[-1]


def circle_flow(
    tc: TruncatedCircle,
    t_end: float,
    dt: float,
    snapshot_every: float = 0.1,
    converge_rtol: float | None = None,
) -> CircleTrajectory:
    """RK4 integration; optionally stop once tr(AA* + A*A) < rtol * tr(L0 + L1)."""
    n, h = step_grid(t_end, dt)
    stride = max(1, int(round(snapshot_every / h)))
    Q0 = tc.conserved()
    L0, L1 = circle_block_laplacian(tc)
    trL = float(np.trace(L0 + L1).real)
    traj = CircleTrajectory(tc.n_max, h)
    y = (tc.A, tc.B, tc.C)
    with np.errstate(over="ignore", invalid="ignore"):
        return _integrate(traj, y, tc.n_max, n, h, stride, Q0, L0, L1, trL, converge_rtol)


def _integrate(traj, y, n_max, n, h, stride, Q0, L0, L1, trL, converge_rtol) -> CircleTrajectory:
    for k in range(n + 1):
        state = TruncatedCircle(n_max, *y)
        if not all(np.all(np.isfinite(a)) for a in y):
            raise CircleInstabilityError(k * h, h)
        Q = state.conserved()
        l0, l1 = circle_block_laplacian(state)
        traj.conserved_drift = max(traj.conserved_drift, float(np.abs(Q - Q0).max()))
        traj.laplacian_drift = max(
            traj.laplacian_drift, float(np.abs(l0 - L0).max()), float(np.abs(l1 - L1).max())
        )
        tr_a = 2.0 * float(np.sum(np.abs(y[0]) ** 2))
        done = k == n or (converge_rtol is not None and tr_a < converge_rtol * trL)
        if k % stride == 0 or done:
            traj.times.append(k * h)
            traj.states.append(state)
        if done:
            traj.converged = converge_rtol is not None and tr_a < converge_rtol * trL
            break
        y = rk4_step(circle_rhs, y, h)
    return traj


def interior_asymptote_error(tc: TruncatedCircle) -> tuple[float, float]:
    """Errors of diag B against |k| and of B + C against 0 on interior modes."""
    k = tc.modes
    inner = slice(1, -1)
    b = np.diag(tc.B)[inner]
    c = np.diag(tc.C)[inner]
    return float(np.abs(b - np.abs(k[inner])).max()), float(np.abs(b + c).max())


def circle_to_csv(traj: CircleTrajectory) -> str:
    """Trajectory rows with the diagonals of A, B, C dumped as re/im pairs."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    modes = range(-traj.n_max, traj.n_max + 1)
    cols = ["t", "tr_AAstar"]
    for name in ("A", "B", "C"):
        cols += [f"{name}{m}_{part}" for m in modes for part in ("re", "im")]
    w.writerow(cols)
    for t, s in zip(traj.times, traj.states):
        row = [t, float(np.sum(np.abs(s.A) ** 2))]
        for M in (s.A, s.B, s.C):
            row += [x for z in np.diag(M) for x in (z.real, z.imag)]
        w.writerow(format(float(x), ".17g") for x in row)
    return buf.getvalue()
