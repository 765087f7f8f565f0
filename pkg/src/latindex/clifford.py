"""Irreducible representation of the complex Clifford algebra Cl_n, n even.

Generators satisfy ``c_i c_j + c_j c_i = -2 delta_ij`` and ``c_i^H = -c_i``.
The grading ``Gamma`` is diagonal with the +1 block first.

Construction: start from the trivial rep of Cl_0 (Gamma = [1]) and double
twice per step. Given Hermitian gammas ``g_1..g_n`` and grading ``G`` of
size D, the size-2D set is::

    g_j' = sx (x) g_j        (j <= n)
    g_{n+1}' = sx (x) G
    g_{n+2}' = sy (x) 1
    G' = sz (x) 1

and finally ``c_j = -i g_j``. All entries are in {0, +-1, +-i}, so every
relation holds exactly in floating point. A different basis is a unitary
conjugation and leaves all spectral counts unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

__all__ = ["CliffordRep", "clifford_rep"]

_SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_SY = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)


@dataclass(frozen=True)
class CliffordRep:
    n: int
    generators: tuple[np.ndarray, ...]
    grading: np.ndarray
    # Gamma = volume_sign * i^{n/2} c_1 ... c_n
    volume_sign: int

    @property
    def spinor_dim(self) -> int:
        return self.grading.shape[0]

    def __iter__(self):
        return iter(self.generators)


def clifford_rep(n: int) -> CliffordRep:
    if not isinstance(n, (int, np.integer)) or n < 2 or n % 2:
        raise ValueError(f"Clifford rep needs an even n >= 2, got {n!r}")
    if n > 8:
        raise ValueError(f"n={n} exceeds the supported cap of 8")
    gammas: list[np.ndarray] = []
    grading = np.ones((1, 1), dtype=np.complex128)
    for _ in range(n // 2):
        one = np.eye(grading.shape[0], dtype=np.complex128)
        gammas = [np.kron(_SX, g) for g in gammas]
        gammas.append(np.kron(_SX, grading))
        gammas.append(np.kron(_SY, one))
        grading = np.kron(_SZ, one)
    gens = tuple(-1j * g for g in gammas)
    for g in gens:
        g.setflags(write=False)
    grading.setflags(write=False)

    volume = (1j ** (n // 2)) * reduce(np.matmul, gens)
    if np.array_equal(volume, grading):
        sign = 1
    elif np.array_equal(volume, -grading):
        sign = -1
    else:  # pragma: no cover - excluded by construction
        raise AssertionError("volume element is not +-Gamma")
    return CliffordRep(n, gens, grading, sign)
