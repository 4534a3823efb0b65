"""Spectra, the Dirac zeta function, heat supertraces and superpartner angles."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .operators import HERMITIAN_TOL, GradedMatrix, StructureError

# Eigenvalues below this (relative to the spectral radius) count as zero.
ZERO_RTOL = 1e-9


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None

    def nonzero(self, rtol: float = ZERO_RTOL) -> np.ndarray:
        ev = self.eigenvalues
        scale = max(1.0, float(np.abs(ev).max(initial=0.0)))
        return ev[np.abs(ev) > rtol * scale]

    def symmetry_defect(self) -> float:
        """max |sigma_sorted + reversed(sigma_sorted)|; zero for a Dirac spectrum."""
        ev = self.eigenvalues
        return float(np.abs(ev + ev[::-1]).max(initial=0.0))


def _entries(A) -> np.ndarray:
    return A.entries if isinstance(A, GradedMatrix) else np.asarray(A, dtype=complex)


def eigen_hermitian(A: GradedMatrix | np.ndarray, vectors: bool = True) -> Spectrum:
    a = _entries(A)
    if a.size and np.abs(a - a.conj().T).max() > HERMITIAN_TOL:
        raise StructureError("eigen_hermitian needs a Hermitian matrix")
    a = 0.5 * (a + a.conj().T)
    if vectors:
        w, V = np.linalg.eigh(a)
        return Spectrum(w, V)
    return Spectrum(np.linalg.eigvalsh(a))


def dirac_zeta(spec: Spectrum, s: complex) -> complex:
    """(1 + e^{i pi s}) * sum over positive eigenvalues of lambda^{-s}.

    The factor plays the role of (-1)^{-s} for the mirrored negative half of
    the spectrum, so negative reals are never raised to complex powers.
    """
    pos = spec.nonzero()
    pos = pos[pos > 0]
    s = complex(s)
    return complex((1.0 + np.exp(1j * np.pi * s)) * np.sum(pos ** (-s)))


def dirac_zeta_derivative_at_zero(spec: Spectrum) -> complex:
    """zeta'(0) = i pi N_+ - 2 sum log lambda over the N_+ positive eigenvalues."""
    pos = spec.nonzero()
    pos = pos[pos > 0]
    return complex(1j * np.pi * pos.size - 2.0 * np.sum(np.log(pos)))


@dataclass(frozen=True)
class PseudoDeterminant:
    signed: float
    zeta_based: complex


def pseudo_determinant(spec: Spectrum) -> PseudoDeterminant:
    nz = spec.nonzero()
    signed = float(np.prod(nz)) if nz.size else 1.0
    return PseudoDeterminant(signed, complex(np.exp(-dirac_zeta_derivative_at_zero(spec))))


def mckean_singer_heat(L: GradedMatrix | np.ndarray, P: GradedMatrix | np.ndarray, t: float) -> float:
    """str(exp(-t L)) through the eigendecomposition of L."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    spec = eigen_hermitian(L)
    V = spec.eigenvectors
    p = np.diag(_entries(P)).real
    # diag(V e^{-tw} V*) weighted by parity
    weights = np.abs(V) ** 2 @ np.exp(-t * spec.eigenvalues)
    return float(np.dot(p, weights))


class HarmonicVectorError(ValueError):
    """D f = 0: the vector has no superpartner."""


def superpartner_cosine(f: np.ndarray, D_t: GradedMatrix | np.ndarray, tol: float = 1e-12) -> float:
    f = np.asarray(f, dtype=complex)
    if np.linalg.norm(f) == 0:
        raise ValueError("f must be nonzero")
    Df = _entries(D_t) @ f
    nDf = np.linalg.norm(Df)
    if nDf <= tol * np.linalg.norm(f):
        raise HarmonicVectorError("D f vanishes; f is harmonic")
    return float(min(1.0, abs(np.vdot(f, Df)) / (np.linalg.norm(f) * nDf)))


def even_superpartner_basis(d: np.ndarray, parity_diag: np.ndarray, rtol: float = ZERO_RTOL) -> np.ndarray:
    """Non-harmonic even-degree eigenvectors adapted to the Hodge split.

    Eigenvectors of d d* - d* d restricted to the even slots: each one lies
    purely in the exact or the coexact part, so it stays an eigenvector of
    every operator the flow builds from those two pieces.
    """
    d = np.asarray(d, dtype=complex)
    K = d @ d.conj().T - d.conj().T @ d
    even = np.flatnonzero(np.asarray(parity_diag).real > 0)
    w, V = np.linalg.eigh(K[np.ix_(even, even)])
    scale = max(1.0, float(np.abs(w).max(initial=0.0)))
    keep = np.abs(w) > rtol * scale
    out = np.zeros((d.shape[0], int(keep.sum())), dtype=complex)
    out[even, :] = V[:, keep]
    return out


def zeta_table_csv(spec: Spectrum, s_values) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s_re", "s_im", "zeta_re", "zeta_im"])
    for s in s_values:
        z = dirac_zeta(spec, s)
        s = complex(s)
        w.writerow(format(x, ".17g") for x in (s.real, s.imag, z.real, z.imag))
    return buf.getvalue()
