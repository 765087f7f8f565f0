"""Lattice Dirac operator, Wilson term and Wilson-Dirac operators.

Basis ordering is (site, spinor, color), matching :mod:`latindex.gauge`.
With ``U_i`` the forward shift::

    nabla_i = k (U_i^H - 1)
    D       = sum_i c_i (nabla_i - nabla_i^H) / 2
    W       = sum_i (nabla_i + nabla_i^H) / 2
    H(m, r) = D + r gamma (W + m k)        gamma = Gamma (x) 1
    H_M     = D + gamma (W + M)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .clifford import CliffordRep
from .gauge import GaugeField, shift_operator_sparse
from .linalg import HermitianOperator

__all__ = [
    "DegenerateMassError",
    "WilsonDiracOperator",
    "forward_difference",
    "lattice_dirac",
    "wilson_term",
    "wilson_dirac",
    "wilson_dirac_fixed_mass",
    "chirality",
    "free_spectrum_closed_form",
    "free_scalar",
]


class DegenerateMassError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WilsonDiracOperator:
    operator: HermitianOperator
    field: GaugeField
    mass: float
    r: float
    fixed_mass: bool = False

    @property
    def matrix(self) -> np.ndarray:
        return self.operator.matrix

    @property
    def dim(self) -> int:
        return self.operator.dim

    @property
    def m(self) -> float:
        """Mass in units of k (``M / k`` for fixed-mass operators)."""
        return self.mass / self.field.k if self.fixed_mass else self.mass


def _check(field: GaugeField, clifford: CliffordRep) -> None:
    if clifford.n != field.n:
        raise ValueError(f"Clifford n={clifford.n} does not match lattice n={field.n}")


def _fiber_op(field: GaugeField, mat: np.ndarray) -> sp.csr_matrix:
    """``1_sites (x) mat (x) 1_N`` as a sparse matrix."""
    return sp.kron(
        sp.identity(field.lattice.num_sites, format="csr"),
        sp.kron(sp.csr_matrix(mat), sp.identity(field.N, format="csr")),
        format="csr",
    )


def _differences(field: GaugeField, clifford: CliffordRep) -> Iterable[sp.csr_matrix]:
    k = field.k
    ident = sp.identity(field.lattice.num_sites * clifford.spinor_dim * field.N, format="csr")
    for i in range(field.n):
        u = shift_operator_sparse(field, clifford.spinor_dim, i)
        yield k * (u.conj().T.tocsr() - ident)


def _dirac_sparse(field: GaugeField, clifford: CliffordRep) -> sp.csr_matrix:
    total = None
    for c, nab in zip(clifford.generators, _differences(field, clifford)):
        term = _fiber_op(field, c) @ (nab - nab.conj().T) * 0.5
        total = term if total is None else total + term
    return total


def _wilson_sparse(field: GaugeField, clifford: CliffordRep) -> sp.csr_matrix:
    total = None
    for nab in _differences(field, clifford):
        term = (nab + nab.conj().T) * 0.5
        total = term if total is None else total + term
    return total


def chirality(field: GaugeField, clifford: CliffordRep) -> sp.csr_matrix:
    return _fiber_op(field, clifford.grading)


def forward_difference(field: GaugeField, clifford: CliffordRep, i: int) -> np.ndarray:
    _check(field, clifford)
    u = shift_operator_sparse(field, clifford.spinor_dim, i).toarray()
    return field.k * (u.conj().T - np.eye(u.shape[0]))


def lattice_dirac(field: GaugeField, clifford: CliffordRep) -> HermitianOperator:
    _check(field, clifford)
    return HermitianOperator.from_matrix(_dirac_sparse(field, clifford).toarray())


def wilson_term(field: GaugeField, clifford: CliffordRep) -> HermitianOperator:
    _check(field, clifford)
    return HermitianOperator.from_matrix(_wilson_sparse(field, clifford).toarray())


def _assemble(field, clifford, shift: float, r: float) -> HermitianOperator:
    _check(field, clifford)
    dim = field.lattice.num_sites * clifford.spinor_dim * field.N
    gamma = chirality(field, clifford)
    w = _wilson_sparse(field, clifford) + shift * sp.identity(dim, format="csr")
    h = _dirac_sparse(field, clifford) + r * (gamma @ w)
    return HermitianOperator.from_matrix(h.toarray())


def wilson_dirac(field: GaugeField, clifford: CliffordRep, m: float, r: float = 1.0) -> WilsonDiracOperator:
    """``D + r gamma (W + m k)``."""
    if r <= 0:
        raise ValueError("Wilson parameter r must be positive")
    op = _assemble(field, clifford, m * field.k, r)
    return WilsonDiracOperator(op, field, float(m), float(r))


def wilson_dirac_fixed_mass(field: GaugeField, clifford: CliffordRep, M: float) -> WilsonDiracOperator:
    """``D + gamma (W + M)`` with a k-independent mass M."""
    op = _assemble(field, clifford, float(M), 1.0)
    return WilsonDiracOperator(op, field, float(M), 1.0, fixed_mass=True)


def free_scalar(theta: np.ndarray, m: float, r: float) -> np.ndarray:
    """``sum sin^2 theta_i + r^2 (sum (cos theta_i - 1) + m)^2`` over the last axis."""
    theta = np.asarray(theta, dtype=float)
    return np.sum(np.sin(theta) ** 2, axis=-1) + r**2 * (np.sum(np.cos(theta) - 1, axis=-1) + m) ** 2


def free_spectrum_closed_form(n: int, k: int, m: float, r: float, spinor_dim: int, N: int = 1) -> np.ndarray:
    """Sorted spectrum of the trivial-field Wilson-Dirac operator.

    At each momentum theta = 2 pi p / k the symbol squares to a scalar s, so
    the eigenvalues are +-k sqrt(s), each with multiplicity spinor_dim/2 (times N).
    """
    grids = np.meshgrid(*([np.arange(k)] * n), indexing="ij")
    theta = 2 * np.pi * np.stack([g.ravel() for g in grids], axis=-1) / k
    s = free_scalar(theta, m, r)
    if np.min(s) <= 1e-14:
        raise DegenerateMassError(f"mass m={m} gives a zero mode of the free symbol")
    e = k * np.sqrt(s)
    half = (spinor_dim // 2) * N
    return np.sort(np.concatenate([np.repeat(e, half), np.repeat(-e, half)]))
