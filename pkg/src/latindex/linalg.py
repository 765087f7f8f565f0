"""Dense complex matrices, Hermitian eigendecomposition and spectral counting.

Everything downstream (quantized symbols, Wilson-Dirac operators) ends up
as a dense Hermitian matrix whose positive eigenvalues get counted. The
counting routine refuses to answer when an eigenvalue sits too close to the
counting level, since then the count is not stable under round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AmbiguousCount",
    "EigenSolverError",
    "NotHermitianError",
    "HermitianOperator",
    "Spectrum",
    "as_complex_matrix",
    "hermitian_eigen",
    "operator_norm",
    "count_above",
    "default_gap_tol",
]

HERMITICITY_RTOL = 1e-12


class AmbiguousCount(ArithmeticError):
    """An eigenvalue lies within ``gap_tol`` of the counting level."""

    def __init__(self, level: float, gap: float, gap_tol: float):
        self.level = level
        self.gap = gap
        self.gap_tol = gap_tol
        super().__init__(
            f"eigenvalue within {gap:.3e} of level {level} (gap_tol {gap_tol:.3e}); "
            "k is likely below the stable threshold or m is near a wall"
        )


class EigenSolverError(RuntimeError):
    pass


class NotHermitianError(ValueError):
    pass


def as_complex_matrix(a) -> np.ndarray:
    """Validate and convert to a 2-d complex128 array with finite entries."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


@dataclass(frozen=True)
class HermitianOperator:
    """A square complex matrix symmetrized to be exactly self-adjoint.

    ``hermiticity_defect`` is the max entry of ``|A - A^H|`` of the matrix
    handed to :meth:`from_matrix`, before symmetrization.
    """

    matrix: np.ndarray
    hermiticity_defect: float = 0.0

    @classmethod
    def from_matrix(cls, a, rtol: float = HERMITICITY_RTOL) -> "HermitianOperator":
        m = as_complex_matrix(a)
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"Hermitian operator must be square, got {m.shape}")
        defect = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
        scale = float(np.max(np.abs(m))) if m.size else 0.0
        if defect > rtol * max(scale, 1.0):
            raise NotHermitianError(
                f"hermiticity defect {defect:.3e} exceeds {rtol:.0e} x max entry {scale:.3e}"
            )
        sym = 0.5 * (m + m.conj().T)
        sym.setflags(write=False)
        return cls(sym, defect)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def norm(self) -> float:
        return operator_norm(self.matrix)


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.eigenvalues)


def hermitian_eigen(h: HermitianOperator, vectors: bool = False) -> Spectrum:
    """Eigenvalues (ascending) and optionally eigenvectors of ``h``.

    Backed by LAPACK's divide-and-conquer Hermitian solver.
    """
    a = h.matrix if isinstance(h, HermitianOperator) else HermitianOperator.from_matrix(h).matrix
    if a.shape[0] < 1:
        raise ValueError("empty operator")
    try:
        if vectors:
            w, v = np.linalg.eigh(a)
        else:
            w, v = np.linalg.eigvalsh(a), None
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(
            f"Hermitian eigensolver did not converge for dimension {a.shape[0]}"
        ) from exc
    return Spectrum(np.asarray(w, dtype=float), v)


def operator_norm(a) -> float:
    """Largest singular value."""
    m = np.asarray(a, dtype=np.complex128)
    if m.size == 0 or not np.any(m):
        return 0.0
    return float(np.linalg.norm(m, 2))


def default_gap_tol(h: HermitianOperator) -> float:
    return 1e-8 * max(h.norm(), np.finfo(float).tiny)


def count_above(
    h: HermitianOperator | Spectrum,
    level: float = 0.0,
    gap_tol: float | None = None,
) -> int:
    """Number of eigenvalues strictly above ``level``.

    Raises :class:`AmbiguousCount` if any eigenvalue lies within ``gap_tol``
    of ``level``. The default ``gap_tol`` is ``1e-8 * ||h||``.
    """
    if isinstance(h, Spectrum):
        w = h.eigenvalues
        if gap_tol is None:
            gap_tol = 1e-8 * max(float(np.max(np.abs(w))), np.finfo(float).tiny)
    else:
        w = hermitian_eigen(h).eigenvalues
        if gap_tol is None:
            gap_tol = default_gap_tol(h)
    if gap_tol <= 0:
        raise ValueError("gap_tol must be positive")
    gap = float(np.min(np.abs(w - level)))
    if gap < gap_tol:
        raise AmbiguousCount(level, gap, gap_tol)
    return int(np.count_nonzero(w > level))
