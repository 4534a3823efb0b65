"""Betti numbers of (deformed) exterior derivatives and the emergent complex structure."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import GradedMatrix

RANK_EPS = 1e-10
NILPOTENCY_TOL = 1e-8


class CohomologyError(ValueError):
    pass


@dataclass(frozen=True)
class BettiVector:
    betti: tuple[int, ...]
    kernel_betti: tuple[int, ...]
    flagged: bool = False

    @property
    def agree(self) -> bool:
        return self.betti == self.kernel_betti

    def euler(self) -> int:
        return sum((-1) ** p * b for p, b in enumerate(self.betti))

    def poincare_polynomial(self) -> list[int]:
        return list(self.betti)


def _rank(block: np.ndarray, floor: float = 0.0) -> tuple[int, bool]:
    """Rank from singular values above eps * sigma_max * max(shape), plus an ambiguity flag.

    ``floor`` is an absolute noise level below which a block counts as zero.
    """
    if block.size == 0:
        return 0, False
    sv = np.linalg.svd(block, compute_uv=False)
    thr = max(RANK_EPS * sv[0] * max(block.shape), floor)
    if sv[0] <= floor:
        return 0, bool(sv[0] > floor / 10)
    ambiguous = bool(np.any((sv > thr / 10) & (sv < thr * 10)))
    return int(np.sum(sv > thr)), ambiguous


def nilpotency_residual(d: GradedMatrix | np.ndarray) -> float:
    a = d.entries if isinstance(d, GradedMatrix) else np.asarray(d)
    return float(np.abs(a @ a).max()) if a.size else 0.0


def _stacked(d: GradedMatrix, p: int) -> np.ndarray:
    """[d_p ; d_{p-1}^*], whose kernel is ker L_p."""
    parts = []
    if p + 1 < d.n_degrees:
        parts.append(d.block(p + 1, p))
    if p > 0:
        parts.append(d.block(p, p - 1).conj().T)
    width = d.offsets[p + 1] - d.offsets[p]
    if not parts:
        return np.zeros((0, width), dtype=complex)
    return np.vstack(parts)


def _assemble(f, ranks, kernels, flagged) -> BettiVector:
    n = len(f)
    betti = tuple(int(f[p] - ranks[p] - (ranks[p - 1] if p > 0 else 0)) for p in range(n))
    kernel = tuple(int(k) for k in kernels)
    return BettiVector(betti, kernel, flagged or betti != kernel)


def betti_numbers(d: GradedMatrix, check: bool = True, laplacian: np.ndarray | None = None) -> BettiVector:
    """b_p = v_p - rank d_p - rank d_{p-1}, cross-checked against dim ker L_p.

    With ``laplacian`` (an operator commuting with ``d``, e.g. the invariant
    Laplacian of a flow) ranks are taken separately on each of its
    eigenspaces. A deformed d(t) decays at very different rates on
    different eigenspaces, which defeats a single global threshold.
    """
    if check and nilpotency_residual(d) > NILPOTENCY_TOL * max(1.0, float(np.abs(d.entries).max(initial=0.0))):
        raise CohomologyError(f"d^2 residual {nilpotency_residual(d):.2e} too large")
    if laplacian is not None:
        return _betti_blocked(d, np.asarray(laplacian))
    f = np.diff(d.offsets)
    ranks, kernels = [], []
    flagged = False
    for p in range(d.n_degrees):
        if p + 1 < d.n_degrees:
            r, amb = _rank(d.block(p + 1, p))
            flagged |= amb
        else:
            r = 0
        ranks.append(r)
        st = _stacked(d, p)
        rk, amb = _rank(st) if st.shape[0] else (0, False)
        flagged |= amb
        kernels.append(int(f[p]) - rk)
    return _assemble(f, ranks, kernels, flagged)


def _eigenspaces(d: GradedMatrix, L: np.ndarray):
    """Per degree, eigenvalues/eigenvectors of L_p plus global cluster labels."""
    per_degree = []
    for p in range(d.n_degrees):
        blk = L[d.span(p), d.span(p)]
        w, V = np.linalg.eigh(0.5 * (blk + blk.conj().T))
        per_degree.append((w, V))
    allw = np.sort(np.concatenate([w for w, _ in per_degree])) if per_degree else np.zeros(0)
    scale = max(1.0, float(np.abs(allw).max(initial=0.0)))
    gap = 1e-6 * scale
    centers: list[float] = []
    for x in allw:
        if not centers or x - centers[-1] > gap:
            centers.append(float(x))
    centers_arr = np.array(centers)
    labels = [np.searchsorted(centers_arr, w + gap / 2, side="right") - 1 for w, _ in per_degree]
    zero = int(np.searchsorted(centers_arr, gap / 2, side="right") - 1) if centers else -1
    if zero >= 0 and abs(centers_arr[zero]) > gap:
        zero = -1
    return per_degree, labels, len(centers), zero


def _betti_blocked(d: GradedMatrix, L: np.ndarray) -> BettiVector:
    per_degree, labels, n_clusters, zero = _eigenspaces(d, L)
    f = np.diff(d.offsets)
    scale = float(np.abs(d.entries).max(initial=0.0))
    floor = 1e3 * np.finfo(float).eps * max(scale, np.finfo(float).tiny) * max(d.size, 1)
    ranks, kernels = [], []
    flagged = False
    for p in range(d.n_degrees):
        w, V = per_degree[p]
        r = 0
        if p + 1 < d.n_degrees:
            w1, V1 = per_degree[p + 1]
            for c in range(n_clusters):
                if c == zero:
                    continue
                A = V[:, labels[p] == c]
                Bm = V1[:, labels[p + 1] == c]
                if A.shape[1] == 0 or Bm.shape[1] == 0:
                    continue
                rc, amb = _rank(Bm.conj().T @ d.block(p + 1, p) @ A, floor)
                r += rc
                flagged |= amb
        ranks.append(r)
        st = _stacked(d, p)
        k = 0
        for c in range(n_clusters):
            A = V[:, labels[p] == c]
            if A.shape[1] == 0:
                continue
            if c == zero or not st.shape[0]:
                k += A.shape[1]
                continue
            rc, amb = _rank(st @ A, floor)
            flagged |= amb
            k += A.shape[1] - rc
        kernels.append(k)
    return _assemble(f, ranks, kernels, flagged)


def deformed_betti(traj, t: float, tol: float = 1e-7) -> BettiVector:
    """Betti vector of d(t), ranked on the eigenspaces of the invariant Laplacian."""
    state = traj.state_at(t)
    d = state.dec.d_part
    if nilpotency_residual(d) > tol:
        raise CohomologyError(f"d(t)^2 residual {nilpotency_residual(d):.2e} at t={t}")
    return betti_numbers(d, check=False, laplacian=traj.L0)


@dataclass(frozen=True)
class ComplexSplit:
    """d = del + delbar with del = Re d and delbar = i Im d."""

    del_: GradedMatrix
    delbar: GradedMatrix
    del_sq: float
    delbar_sq: float
    anticommutator: float
    reconstruction: float

    def residuals_pass(self, tol: float = 1e-7) -> bool:
        return max(self.del_sq, self.delbar_sq, self.anticommutator) < tol


def complex_split(d: GradedMatrix) -> ComplexSplit:
    a = d.entries
    dl = a.real.astype(complex)
    db = 1j * a.imag
    ac = dl @ db + db @ dl
    return ComplexSplit(
        d.with_entries(dl),
        d.with_entries(db),
        nilpotency_residual(dl),
        nilpotency_residual(db),
        float(np.abs(ac).max()) if a.size else 0.0,
        float(np.abs(dl + db - a).max()) if a.size else 0.0,
    )


@dataclass(frozen=True)
class KahlerResult:
    gap: float
    laplacian_split_residual: float


def kahler_test(split: ComplexSplit) -> KahlerResult:
    dl = split.del_.entries
    db = split.delbar.entries
    Dp = dl + dl.conj().T
    Dq = db + db.conj().T
    C = Dp + Dq
    if C.size == 0:
        return KahlerResult(0.0, 0.0)
    return KahlerResult(
        float(np.abs(Dp - Dq).max()),
        float(np.abs(C @ C - Dp @ Dp - Dq @ Dq).max()),
    )
