"""Bohr-Sommerfeld quantization of symbols on the standard torus.

The Hilbert space at level k is l^2(B_k) (x) C^d with basis ordered (site,
matrix index). A theta-mode ``f_m(x) e^{i<m, theta>}`` becomes the weighted
shift sending the delta at site c to the delta at ``c + m/k`` with weight
``f_m(c + m/(2k))``, the coefficient evaluated at the midpoint of the hop.
Hops use the minimal lift ``m`` of ``b - c``, which is unambiguous when
``k > 2 * theta_degree``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gauge import LatticeTorus
from .linalg import HermitianOperator, operator_norm
from .symbols import (
    HbarSeriesSymbol,
    Symbol,
    constant_symbol,
    moyal_coefficient,
    moyal_unitary_extension,
    symbol_lincomb,
)

__all__ = [
    "QuantizationResolutionError",
    "QuantizedOperator",
    "quantize",
    "quantizer_trace",
    "star_residual",
    "deformed_projection",
    "deformed_projection_check",
]


class QuantizationResolutionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuantizedOperator:
    matrix: np.ndarray
    k: int
    symbol: Symbol

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def hermitian(self) -> HermitianOperator:
        return HermitianOperator.from_matrix(self.matrix)

    def norm(self) -> float:
        return operator_norm(self.matrix)


def _check_resolution(f: Symbol, k: int) -> None:
    for m in f.modes:
        if 2 * max(abs(a) for a in m) >= k:
            raise QuantizationResolutionError(
                f"theta mode {m} is not resolved at level k={k}: need k > 2 * {max(abs(a) for a in m)}"
            )


def quantize(f: Symbol, k: int) -> QuantizedOperator:
    """Matrix of ``phi^k(f)`` on ``l^2(B_k) (x) C^d``."""
    _check_resolution(f, k)
    lat = LatticeTorus(f.n, k)
    d = f.d
    sites = lat.all_coords()
    src = np.arange(lat.num_sites)
    dim = lat.num_sites * d
    mat = np.zeros((dim, dim), dtype=np.complex128)
    blocks = mat.reshape(lat.num_sites, d, lat.num_sites, d)
    for m, coef in f.modes.items():
        m_arr = np.asarray(m)
        dst = lat.index(sites + m_arr)
        # midpoint (2c + m) / 2k, reduced mod 1 with integer arithmetic so that
        # adjoint pairs evaluate at bit-identical points
        mid = np.mod(2 * sites + m_arr, 2 * k) / (2 * k)
        vals = coef.evaluate_many(mid)
        blocks[dst, :, src, :] += vals
    return QuantizedOperator(mat, k, f)


def quantizer_trace(f: Symbol, k: int) -> complex:
    """``Trace phi^k(f) = sum_{b in B_k} tr f_0(b)``."""
    _check_resolution(f, k)
    zero = (0,) * f.n
    if zero not in f.modes:
        return 0.0 + 0.0j
    lat = LatticeTorus(f.n, k)
    vals = f.modes[zero].evaluate_many(lat.all_coords() / k)
    return complex(np.trace(vals, axis1=-2, axis2=-1).sum())


def star_residual(f: Symbol, g: Symbol, l: int, k: int) -> float:
    """``|| phi(f) phi(g) - sum_{j<=l} (-i/k)^j phi(C_j(f, g)) ||``."""
    lhs = quantize(f, k).matrix @ quantize(g, k).matrix
    terms = [((-1j / k) ** j, moyal_coefficient(j, f, g)) for j in range(l + 1)]
    rhs = quantize(symbol_lincomb(terms), k).matrix
    return operator_norm(lhs - rhs)


def deformed_projection(series: HbarSeriesSymbol, k: int) -> Symbol:
    """``p^{M,k} = sum_i p_i (-i/k)^i`` where ``p_hbar = (u_hbar + 1)/2``."""
    u = series.evaluate_at(-1j / k)
    one = constant_symbol(np.eye(u.d), u.n)
    return (u + one) * 0.5


def deformed_projection_check(u0: Symbol | HbarSeriesSymbol, M: int, k: int) -> float:
    """Idempotency defect ``|| phi(p^{M,k})^2 - phi(p^{M,k}) ||``.

    ``u0`` may be passed as an already extended series to avoid recomputing it
    across k.
    """
    series = u0 if isinstance(u0, HbarSeriesSymbol) else moyal_unitary_extension(u0, M)
    if series.order < M:
        raise ValueError(f"series of order {series.order} cannot give p^(M={M})")
    series = HbarSeriesSymbol(series.terms[: M + 1])
    a = quantize(deformed_projection(series, k), k).matrix
    return operator_norm(a @ a - a)
