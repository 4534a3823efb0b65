"""Graded operators on the exterior bundle of a clique complex.

Convention: ``d`` is the degree-raising block, rows indexed by
(p+1)-simplices and columns by p-simplices, with the face obtained by
deleting the i-th vertex (ascending order) carrying sign (-1)^i.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .complex import SimplicialComplex

HERMITIAN_TOL = 1e-8
STRUCTURE_TOL = 1e-9


class StructureError(ValueError):
    """A matrix does not have the degree structure an operation requires."""


@dataclass(frozen=True)
class GradedMatrix:
    """Dense complex v x v matrix over the direct sum of p-form spaces."""

    entries: np.ndarray
    offsets: tuple[int, ...]

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        v = self.offsets[-1] if self.offsets else 0
        if entries.shape != (v, v):
            raise ValueError(f"entries shape {entries.shape} does not match grading of size {v}")
        if any(b < a for a, b in zip(self.offsets, self.offsets[1:])) or (self.offsets and self.offsets[0] != 0):
            raise ValueError("offsets must be nondecreasing prefix sums starting at 0")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "offsets", tuple(int(x) for x in self.offsets))

    @property
    def size(self) -> int:
        return self.offsets[-1]

    @property
    def n_degrees(self) -> int:
        return len(self.offsets) - 1

    def span(self, p: int) -> slice:
        return slice(self.offsets[p], self.offsets[p + 1])

    def block(self, q: int, p: int) -> np.ndarray:
        """Sub-matrix mapping p-forms to q-forms."""
        return self.entries[self.span(q), self.span(p)]

    def with_entries(self, entries: np.ndarray) -> GradedMatrix:
        return GradedMatrix(entries, self.offsets)

    def adjoint(self) -> GradedMatrix:
        return self.with_entries(self.entries.conj().T)

    def __add__(self, other: GradedMatrix) -> GradedMatrix:
        return self.with_entries(self.entries + other.entries)

    def __sub__(self, other: GradedMatrix) -> GradedMatrix:
        return self.with_entries(self.entries - other.entries)

    def __matmul__(self, other: GradedMatrix) -> GradedMatrix:
        return self.with_entries(self.entries @ other.entries)

    def degree_mask(self, k: int) -> np.ndarray:
        """Boolean mask of entries mapping p-forms to (p+k)-forms."""
        deg = np.repeat(np.arange(self.n_degrees), np.diff(self.offsets))
        return (deg[:, None] - deg[None, :]) == k

    def hermiticity_defect(self) -> float:
        if self.size == 0:
            return 0.0
        return float(np.abs(self.entries - self.entries.conj().T).max())


def _zero(c: SimplicialComplex) -> GradedMatrix:
    v = c.total_dim
    return GradedMatrix(np.zeros((v, v), dtype=complex), c.offsets)


def exterior_derivative(c: SimplicialComplex) -> GradedMatrix:
    out = _zero(c)
    e = out.entries
    for p in range(1, len(c.simplices)):
        row0 = c.offsets[p]
        for r, simplex in enumerate(c.simplices[p]):
            for i in range(len(simplex)):
                face = simplex[:i] + simplex[i + 1:]
                e[row0 + r, c.index(face)] = (-1) ** i
    return out


def dirac(d: GradedMatrix) -> GradedMatrix:
    off = np.abs(d.entries[~d.degree_mask(1)])
    if off.size and off.max() > 0:
        raise StructureError("exterior derivative has entries outside the degree +1 blocks")
    return d + d.adjoint()


def laplacian(D: GradedMatrix) -> GradedMatrix:
    return D @ D


def parity(c: SimplicialComplex) -> GradedMatrix:
    signs = np.where(c.degrees() % 2 == 0, 1.0, -1.0)
    return GradedMatrix(np.diag(signs).astype(complex), c.offsets)


def supertrace(P: GradedMatrix, A: GradedMatrix | np.ndarray) -> complex:
    a = A.entries if isinstance(A, GradedMatrix) else np.asarray(A)
    if a.shape != P.entries.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {P.entries.shape}")
    # P is diagonal
    return complex(np.dot(np.diag(P.entries), np.diag(a)))


@dataclass(frozen=True)
class DiracDecomposition:
    """The pieces of a deformed Dirac operator D = d + d* + b."""

    d_part: GradedMatrix
    b_part: GradedMatrix
    beta: float = 0.0
    residual: float = 0.0

    @property
    def offsets(self) -> tuple[int, ...]:
        return self.d_part.offsets

    def D(self) -> GradedMatrix:
        return self.d_part + self.d_part.adjoint() + self.b_part

    def C(self) -> GradedMatrix:
        return self.d_part + self.d_part.adjoint()

    def B(self) -> GradedMatrix:
        return b_operator(self)

    def L(self) -> GradedMatrix:
        return laplacian(self.D())

    def M(self) -> GradedMatrix:
        C = self.C()
        return C @ C

    def V(self) -> GradedMatrix:
        return self.b_part @ self.b_part

    def check(self, tol: float = STRUCTURE_TOL) -> None:
        if self.residual > tol:
            raise StructureError(f"degree-structure residual {self.residual:.3e} exceeds {tol:.1e}")
        if self.b_part.hermiticity_defect() > HERMITIAN_TOL:
            raise StructureError("b part is not Hermitian")


def extract_blocks(D: GradedMatrix, beta: float = 0.0) -> DiracDecomposition:
    """Split ``D`` into its degree +1 and degree 0 parts.

    The residual is the max-norm of everything the split cannot represent:
    entries of degree |k| > 1, plus the mismatch between the degree -1 part
    and the adjoint of the degree +1 part.
    """
    if D.hermiticity_defect() > HERMITIAN_TOL:
        raise StructureError(f"input is not Hermitian (defect {D.hermiticity_defect():.2e})")
    e = D.entries
    up = D.degree_mask(1)
    diag = D.degree_mask(0)
    down = D.degree_mask(-1)
    d = np.where(up, e, 0)
    b = np.where(diag, e, 0)
    rest = e - d - d.conj().T - b
    residual = float(np.abs(rest).max()) if rest.size else 0.0
    residual = max(residual, float(np.abs(np.where(~(up | diag | down), e, 0)).max()) if e.size else 0.0)
    return DiracDecomposition(D.with_entries(d), D.with_entries(b), beta, residual)


def b_operator(dec: DiracDecomposition) -> GradedMatrix:
    """Generator d - d* + i beta b of the deformation."""
    d = dec.d_part.entries
    return dec.d_part.with_entries(d - d.conj().T + 1j * dec.beta * dec.b_part.entries)


def undeformed(c: SimplicialComplex, beta: float = 0.0) -> DiracDecomposition:
    d = exterior_derivative(c)
    return DiracDecomposition(d, _zero(c), beta)


# -- export -------------------------------------------------------------------


def _g(x: float) -> str:
    return format(float(x), ".17g")


def matrix_to_csv(A: GradedMatrix | np.ndarray) -> str:
    """Row-major CSV; each complex entry becomes a (re, im) column pair."""
    a = A.entries if isinstance(A, GradedMatrix) else np.asarray(A, dtype=complex)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    n = a.shape[1] if a.ndim == 2 else 0
    writer.writerow([f"{part}{j}" for j in range(n) for part in ("re", "im")])
    for row in a:
        writer.writerow([s for z in row for s in (_g(z.real), _g(z.imag))])
    return buf.getvalue()


def matrix_from_csv(text: str) -> np.ndarray:
    rows = list(csv.reader(io.StringIO(text)))[1:]
    vals = np.array([[float(x) for x in r] for r in rows if r], dtype=float)
    if vals.size == 0:
        return np.zeros((0, 0), dtype=complex)
    return vals[:, 0::2] + 1j * vals[:, 1::2]


def matrix_to_json(A: GradedMatrix | np.ndarray) -> str:
    a = A.entries if isinstance(A, GradedMatrix) else np.asarray(A, dtype=complex)
    payload = {"entries": [[[float(z.real), float(z.imag)] for z in row] for row in a]}
    if isinstance(A, GradedMatrix):
        payload["offsets"] = list(A.offsets)
    return json.dumps(payload)


def matrix_from_json(text: str) -> GradedMatrix | np.ndarray:
    payload = json.loads(text)
    arr = np.asarray(payload["entries"], dtype=float)
    a = arr[..., 0] + 1j * arr[..., 1] if arr.size else np.zeros((0, 0), dtype=complex)
    if "offsets" in payload:
        return GradedMatrix(a, tuple(payload["offsets"]))
    return a
