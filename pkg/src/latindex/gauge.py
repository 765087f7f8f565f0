"""Level-k lattice tori, U(N) link fields, plaquettes and shift operators.

Sites of ``B_k = ((1/k)Z/Z)^n`` are integer tuples ``x`` in ``{0..k-1}^n``
(the point ``x/k``), flattened in C order. A link ``U_i(x)`` transports the
fiber at ``x`` to the fiber at ``x + e_i``.

Plaquette orientation: the (i, j) plaquette at x is the holonomy of the
loop x -> x+e_i -> x+e_i+e_j -> x+e_j -> x, as a map on the fiber at x::

    P_ij(x) = U_j(x)^H  U_i(x+e_j)^H  U_j(x+e_i)  U_i(x)

so ``P_ji(x) = P_ij(x)^H``. The lattice Chern number is (1/2pi) times the sum
of principal arguments of ``P_12`` over all sites.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .clifford import CliffordRep

__all__ = [
    "FluxTooLargeError",
    "RoughFieldError",
    "LatticeTorus",
    "GaugeField",
    "GaugeTransform",
    "trivial_gauge_field",
    "flux_gauge_field_t2",
    "product_gauge_field_t4",
    "embed_field",
    "random_gauge_transform",
    "apply_gauge_transform",
    "plaquette",
    "plaquette_phases",
    "lattice_chern_number_t2",
    "shift_operator",
    "shift_operator_sparse",
]

UNITARY_TOL = 1e-12


class FluxTooLargeError(ValueError):
    pass


class RoughFieldError(ArithmeticError):
    pass


@dataclass(frozen=True)
class LatticeTorus:
    n: int
    k: int

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise ValueError(f"invalid lattice n={self.n}, k={self.k}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.k,) * self.n

    @property
    def num_sites(self) -> int:
        return self.k**self.n

    def index(self, x) -> int | np.ndarray:
        """Flat index of site(s) ``x`` (last axis of length n), wrapped mod k."""
        x = np.mod(np.asarray(x), self.k)
        return np.ravel_multi_index(tuple(np.moveaxis(x, -1, 0)), self.shape)

    def coords(self, index) -> np.ndarray:
        return np.stack(np.unravel_index(index, self.shape), axis=-1)

    def all_coords(self) -> np.ndarray:
        """Integer coordinates of all sites, shape (k^n, n), in index order."""
        return self.coords(np.arange(self.num_sites))

    def neighbor(self, i: int) -> np.ndarray:
        """Flat index of x + e_i for every site x."""
        x = self.all_coords()
        x[:, i] += 1
        return self.index(x)


def _check_unitary(mats: np.ndarray, what: str) -> None:
    n = mats.shape[-1]
    prod = mats @ np.conj(np.swapaxes(mats, -1, -2))
    err = float(np.max(np.abs(prod - np.eye(n)))) if mats.size else 0.0
    if err > UNITARY_TOL:
        raise ValueError(f"{what} not unitary (defect {err:.2e})")


@dataclass(frozen=True, eq=False)
class GaugeField:
    """Links as an array of shape ``(n, k, ..., k, N, N)``."""

    lattice: LatticeTorus
    links: np.ndarray

    def __post_init__(self):
        n, k = self.lattice.n, self.lattice.k
        if self.links.ndim != n + 3 or self.links.shape[:n + 1] != (n,) + (k,) * n:
            raise ValueError(f"link array shape {self.links.shape} does not fit {self.lattice}")
        _check_unitary(self.links, "link")
        self.links.setflags(write=False)

    @property
    def N(self) -> int:
        return self.links.shape[-1]

    @property
    def n(self) -> int:
        return self.lattice.n

    @property
    def k(self) -> int:
        return self.lattice.k

    def link(self, i: int, x) -> np.ndarray:
        x = tuple(np.mod(x, self.k))
        return self.links[(i,) + x]

    @cached_property
    def flat_links(self) -> np.ndarray:
        """Links reshaped to ``(n, k^n, N, N)`` in site-index order."""
        return self.links.reshape(self.n, self.lattice.num_sites, self.N, self.N)

    def to_json(self) -> str:
        pairs = np.stack([self.links.real, self.links.imag], axis=-1)
        return json.dumps({"n": self.n, "k": self.k, "N": self.N, "links": pairs.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "GaugeField":
        obj = json.loads(text)
        arr = np.asarray(obj["links"], dtype=float)
        links = arr[..., 0] + 1j * arr[..., 1]
        lattice = LatticeTorus(int(obj["n"]), int(obj["k"]))
        if links.shape[-1] != int(obj["N"]):
            raise ValueError("N does not match link matrices")
        return cls(lattice, links)


@dataclass(frozen=True, eq=False)
class GaugeTransform:
    """Per-site unitaries, array of shape ``(k, ..., k, N, N)``."""

    lattice: LatticeTorus
    values: np.ndarray

    def __post_init__(self):
        _check_unitary(self.values, "gauge transform")
        self.values.setflags(write=False)


def trivial_gauge_field(lattice: LatticeTorus, N: int = 1) -> GaugeField:
    links = np.broadcast_to(
        np.eye(N, dtype=np.complex128), (lattice.n,) + lattice.shape + (N, N)
    ).copy()
    return GaugeField(lattice, links)


def _flux_links_t2(k: int, q: int) -> np.ndarray:
    if 2 * abs(q) >= k * k:
        raise FluxTooLargeError(f"flux q={q} too large for k={k}: need 2|q| < k^2")
    x1, x2 = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    u2 = np.exp(2j * np.pi * q * x1 / k**2)
    u1 = np.where(x1 == k - 1, np.exp(-2j * np.pi * q * x2 / k), 1.0 + 0j)
    return np.stack([u1, u2])


def flux_gauge_field_t2(k: int, q: int) -> GaugeField:
    """U(1) field on the 2-torus with uniform plaquette phase 2 pi q / k^2.

    U_2(x1, x2) = exp(2 pi i q x1 / k^2); U_1 = 1 except on the wrap column
    x1 = k-1 where U_1 = exp(-2 pi i q x2 / k).
    """
    links = _flux_links_t2(k, q)[..., None, None]
    return GaugeField(LatticeTorus(2, k), links)


def product_gauge_field_t4(k: int, q1: int, q2: int) -> GaugeField:
    """U(1) field on the 4-torus: flux q1 in the (1,2) plane, q2 in (3,4)."""
    a = _flux_links_t2(k, q1)  # (2, k, k) over (x1, x2)
    b = _flux_links_t2(k, q2)  # over (x3, x4)
    shape = (k,) * 4
    links = np.empty((4,) + shape, dtype=np.complex128)
    links[0] = np.broadcast_to(a[0][:, :, None, None], shape)
    links[1] = np.broadcast_to(a[1][:, :, None, None], shape)
    links[2] = np.broadcast_to(b[0][None, None, :, :], shape)
    links[3] = np.broadcast_to(b[1][None, None, :, :], shape)
    return GaugeField(LatticeTorus(4, k), links[..., None, None])


def embed_field(field: GaugeField, N: int) -> GaugeField:
    """Direct sum of a U(1) field with a trivial rank N-1 field."""
    if field.N != 1:
        raise ValueError("embedding is defined for U(1) fields")
    if N == 1:
        return field
    links = np.zeros(field.links.shape[:-2] + (N, N), dtype=np.complex128)
    links[..., 0, 0] = field.links[..., 0, 0]
    for a in range(1, N):
        links[..., a, a] = 1.0
    return GaugeField(field.lattice, links)


def random_gauge_transform(lattice: LatticeTorus, N: int, seed) -> GaugeTransform:
    """Haar-random site unitaries, deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    shape = lattice.shape + (N, N)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    q = q * (d / np.abs(d))[..., None, :]
    return GaugeTransform(lattice, q)


def apply_gauge_transform(field: GaugeField, g: GaugeTransform) -> GaugeField:
    """U_i(x) -> g(x + e_i) U_i(x) g(x)^H."""
    if g.lattice != field.lattice or g.values.shape[-1] != field.N:
        raise ValueError("gauge transform does not match the field")
    gh = np.conj(np.swapaxes(g.values, -1, -2))
    links = np.empty_like(field.links)
    for i in range(field.n):
        g_fwd = np.roll(g.values, -1, axis=i)
        links[i] = g_fwd @ field.links[i] @ gh
    return GaugeField(field.lattice, links)


def _dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def plaquette_field(field: GaugeField, i: int, j: int) -> np.ndarray:
    """All (i, j) plaquettes, array of shape ``(k, ..., k, N, N)``."""
    if i == j:
        raise ValueError("plaquette needs two distinct directions")
    ui, uj = field.links[i], field.links[j]
    ui_xj = np.roll(ui, -1, axis=j)
    uj_xi = np.roll(uj, -1, axis=i)
    return _dagger(uj) @ _dagger(ui_xj) @ uj_xi @ ui


def plaquette(field: GaugeField, x, i: int, j: int) -> np.ndarray:
    return plaquette_field(field, i, j)[tuple(np.mod(x, field.k))]


def plaquette_phases(field: GaugeField, i: int = 0, j: int = 1) -> np.ndarray:
    """Principal arguments of the U(1) plaquettes in the (i, j) plane."""
    if field.N != 1:
        raise ValueError("plaquette phases are defined for U(1) fields")
    return np.angle(plaquette_field(field, i, j)[..., 0, 0])


def lattice_chern_number_t2(field: GaugeField, margin: float = 1e-6, tol: float = 1e-6) -> int:
    if field.n != 2 or field.N != 1:
        raise ValueError("lattice Chern number needs a U(1) field on the 2-torus")
    phases = plaquette_phases(field)
    if np.max(np.abs(phases)) > np.pi - margin:
        raise RoughFieldError("a plaquette phase sits at the branch cut")
    total = float(np.sum(phases)) / (2 * np.pi)
    c = round(total)
    if abs(total - c) > tol:
        raise ArithmeticError(f"plaquette phase sum {total} is not an integer")
    return int(c)


def shift_operator_sparse(field: GaugeField, spinor_dim: int, i: int) -> sp.csr_matrix:
    """Forward shift U_{k,i} in the basis ordered (site, spinor, color).

    The block from site x to site x+e_i is ``1_S (x) U_i(x)``.
    """
    lat, N = field.lattice, field.N
    fiber = spinor_dim * N
    src = np.arange(lat.num_sites)
    dst = lat.neighbor(i)
    blocks = np.einsum("st,xab->xsatb", np.eye(spinor_dim), field.flat_links[i])
    blocks = blocks.reshape(lat.num_sites, fiber, fiber)
    rows = dst[:, None, None] * fiber + np.arange(fiber)[None, :, None]
    cols = src[:, None, None] * fiber + np.arange(fiber)[None, None, :]
    rows, cols = np.broadcast_arrays(rows, cols)
    dim = lat.num_sites * fiber
    mat = sp.coo_matrix((blocks.ravel(), (rows.ravel(), cols.ravel())), shape=(dim, dim))
    mat.eliminate_zeros()
    return mat.tocsr()


def shift_operator(field: GaugeField, clifford: CliffordRep, i: int) -> np.ndarray:
    if clifford.n != field.n:
        raise ValueError("Clifford rep and lattice dimension differ")
    return shift_operator_sparse(field, clifford.spinor_dim, i).toarray()
