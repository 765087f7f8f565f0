import json

import numpy as np
import pytest

from latindex.clifford import clifford_rep
from latindex.gauge import (
    FluxTooLargeError,
    GaugeField,
    GaugeTransform,
    LatticeTorus,
    RoughFieldError,
    apply_gauge_transform,
    embed_field,
    flux_gauge_field_t2,
    lattice_chern_number_t2,
    plaquette,
    plaquette_field,
    plaquette_phases,
    product_gauge_field_t4,
    random_gauge_transform,
    shift_operator,
    trivial_gauge_field,
)


def test_lattice_index_round_trip():
    lat = LatticeTorus(3, 4)
    idx = np.arange(lat.num_sites)
    assert lat.num_sites == 64
    assert np.array_equal(lat.index(lat.coords(idx)), idx)
    assert lat.index([4, -1, 2]) == lat.index([0, 3, 2])


def test_lattice_neighbor():
    lat = LatticeTorus(2, 3)
    nb = lat.neighbor(1)
    assert lat.coords(nb[lat.index([1, 2])]).tolist() == [1, 0]


def test_trivial_field_examples():
    f = trivial_gauge_field(LatticeTorus(2, 4), 1)
    assert f.links.shape[:3] == (2, 4, 4)
    assert f.links[..., 0, 0].size == 32
    assert np.all(f.links == 1)
    g = trivial_gauge_field(LatticeTorus(1, 3), 2)
    assert np.array_equal(g.link(0, (1,)), np.eye(2))
    assert np.array_equal(plaquette_field(f, 0, 1)[..., 0, 0], np.ones((4, 4)))


def test_field_rejects_non_unitary():
    links = np.full((2, 3, 3, 1, 1), 1.1 + 0j)
    with pytest.raises(ValueError, match="unitary"):
        GaugeField(LatticeTorus(2, 3), links)
    with pytest.raises(ValueError, match="unitary"):
        GaugeTransform(LatticeTorus(2, 3), np.full((3, 3, 1, 1), 2.0 + 0j))


def test_field_immutable():
    f = trivial_gauge_field(LatticeTorus(2, 3))
    with pytest.raises(ValueError):
        f.links[0, 0, 0] = 2


def test_flux_zero_is_trivial():
    assert np.array_equal(flux_gauge_field_t2(4, 0).links, trivial_gauge_field(LatticeTorus(2, 4)).links)


def test_flux_links_as_stated():
    k, q = 5, 2
    f = flux_gauge_field_t2(k, q)
    for x1 in range(k):
        for x2 in range(k):
            assert f.link(1, (x1, x2))[0, 0] == pytest.approx(np.exp(2j * np.pi * q * x1 / k**2))
            u1 = np.exp(-2j * np.pi * q * x2 / k) if x1 == k - 1 else 1.0
            assert f.link(0, (x1, x2))[0, 0] == pytest.approx(u1)


def test_flux_plaquettes_uniform():
    f = flux_gauge_field_t2(4, 1)
    assert np.allclose(plaquette_phases(f), 2 * np.pi / 16, atol=1e-13)
    assert plaquette(f, (3, 3), 0, 1)[0, 0] == pytest.approx(np.exp(2j * np.pi / 16))


def test_plaquette_by_hand():
    # oracle: holonomy of the loop x -> x+e1 -> x+e1+e2 -> x+e2 -> x, written link by link
    f = flux_gauge_field_t2(4, 1)
    for x in [(0, 0), (3, 1), (2, 3), (3, 3)]:
        x1, x2 = x
        u1 = lambda a, b: f.link(0, (a, b))[0, 0]  # noqa: E731
        u2 = lambda a, b: f.link(1, (a, b))[0, 0]  # noqa: E731
        hol = u1(x1, x2) * u2(x1 + 1, x2) * np.conj(u1(x1, x2 + 1)) * np.conj(u2(x1, x2))
        assert plaquette(f, x, 0, 1)[0, 0] == pytest.approx(hol, abs=1e-14)


def test_plaquette_orientation_flip_is_inverse():
    f = apply_gauge_transform(embed_field(flux_gauge_field_t2(4, 1), 2),
                              random_gauge_transform(LatticeTorus(2, 4), 2, 5))
    p = plaquette(f, (1, 2), 0, 1)
    assert np.allclose(plaquette(f, (1, 2), 1, 0), np.linalg.inv(p), atol=1e-13)


def test_plaquette_needs_two_directions():
    with pytest.raises(ValueError):
        plaquette(flux_gauge_field_t2(4, 1), (0, 0), 1, 1)


def test_flux_too_large():
    with pytest.raises(FluxTooLargeError):
        flux_gauge_field_t2(4, 8)
    flux_gauge_field_t2(4, 7)


@pytest.mark.parametrize("k,q", [(8, -2), (8, 3), (6, 1), (12, -5)])
def test_chern_number_of_flux(k, q):
    assert lattice_chern_number_t2(flux_gauge_field_t2(k, q)) == q


def test_chern_number_trivial():
    assert lattice_chern_number_t2(trivial_gauge_field(LatticeTorus(2, 5))) == 0


def test_chern_number_rough_field():
    # a single -1 link puts two plaquettes on the branch cut
    k = 4
    links = np.ones((2, k, k, 1, 1), dtype=complex)
    links[0, 0, 0] = -1.0
    with pytest.raises(RoughFieldError):
        lattice_chern_number_t2(GaugeField(LatticeTorus(2, k), links))


def test_chern_number_gauge_invariant():
    f = flux_gauge_field_t2(8, 3)
    for seed in range(20):
        g = random_gauge_transform(f.lattice, 1, seed)
        assert lattice_chern_number_t2(apply_gauge_transform(f, g)) == 3


def test_identity_transform():
    f = flux_gauge_field_t2(4, 1)
    g = GaugeTransform(f.lattice, np.ones((4, 4, 1, 1), dtype=complex))
    assert np.array_equal(apply_gauge_transform(f, g).links, f.links)


def test_constant_transform_conjugates_plaquettes():
    f = embed_field(flux_gauge_field_t2(4, 1), 2)
    h = random_gauge_transform(LatticeTorus(2, 1), 2, 9).values[0, 0]
    g = GaugeTransform(f.lattice, np.broadcast_to(h, (4, 4, 2, 2)).copy())
    p0 = plaquette_field(f, 0, 1)
    p1 = plaquette_field(apply_gauge_transform(f, g), 0, 1)
    assert np.allclose(p1, h @ p0 @ h.conj().T, atol=1e-13)


def test_random_transform_deterministic():
    lat = LatticeTorus(2, 3)
    a = random_gauge_transform(lat, 2, 11).values
    b = random_gauge_transform(lat, 2, 11).values
    assert np.array_equal(a, b)
    assert not np.array_equal(a, random_gauge_transform(lat, 2, 12).values)


def test_transform_shape_mismatch():
    f = flux_gauge_field_t2(4, 1)
    with pytest.raises(ValueError):
        apply_gauge_transform(f, random_gauge_transform(LatticeTorus(2, 4), 2, 0))


def test_product_field_examples():
    assert np.array_equal(product_gauge_field_t4(4, 0, 0).links, trivial_gauge_field(LatticeTorus(4, 4)).links)
    f = product_gauge_field_t4(4, 1, 0)
    assert np.allclose(plaquette_field(f, 2, 3), 1.0, atol=1e-14)
    f = product_gauge_field_t4(4, 1, 1)
    for i, j in [(0, 1), (2, 3)]:
        assert np.allclose(np.angle(plaquette_field(f, i, j)), 2 * np.pi / 16, atol=1e-13)
    for i, j in [(0, 2), (0, 3), (1, 2), (1, 3)]:
        assert np.allclose(plaquette_field(f, i, j), 1.0, atol=1e-13)


def test_product_field_independence():
    f = product_gauge_field_t4(4, 2, -1)
    a = flux_gauge_field_t2(4, 2).links
    b = flux_gauge_field_t2(4, -1).links
    assert np.array_equal(f.links[0, :, :, 1, 3], a[0])
    assert np.array_equal(f.links[3, 2, 0], b[1])
    with pytest.raises(FluxTooLargeError):
        product_gauge_field_t4(4, 0, 8)


def test_embed_field():
    f = embed_field(flux_gauge_field_t2(4, 1), 3)
    assert f.N == 3
    assert np.array_equal(f.links[..., 1:, 1:], np.broadcast_to(np.eye(2), f.links.shape[:-2] + (2, 2)))
    with pytest.raises(ValueError):
        embed_field(f, 4)


@pytest.mark.parametrize("k", [3, 4, 5, 6])
def test_column_holonomy_telescopes(k):
    # the U_1 links inside a column cancel, leaving the two U_2 cycles bounding it
    f = flux_gauge_field_t2(k, 1)
    u2 = f.links[1][..., 0, 0]
    p = plaquette_field(f, 0, 1)[..., 0, 0]
    for x1 in range(k):
        strip = np.prod(p[x1, :])
        left = np.prod(u2[x1, :])
        right = np.prod(u2[(x1 + 1) % k, :])
        assert strip == pytest.approx(right / left, abs=1e-12)


def test_shift_operator_examples():
    c = clifford_rep(2)
    f = trivial_gauge_field(LatticeTorus(2, 3))
    u = shift_operator(f, c, 0)
    assert np.array_equal(np.linalg.matrix_power(u, 3), np.eye(u.shape[0]))
    assert set(np.unique(u).tolist()) <= {0, 1}
    assert np.array_equal(u.sum(axis=0), np.ones(u.shape[0]))
    g = flux_gauge_field_t2(4, 1)
    u2 = shift_operator(g, c, 1)
    assert np.max(np.abs(u2.conj().T @ u2 - np.eye(u2.shape[0]))) <= 1e-12


def test_shift_operator_block_structure():
    c = clifford_rep(2)
    f = embed_field(flux_gauge_field_t2(4, 1), 2)
    f = apply_gauge_transform(f, random_gauge_transform(f.lattice, 2, 1))
    u = shift_operator(f, c, 0)
    lat = f.lattice
    fib = 4
    for x in [(0, 0), (3, 2), (1, 3)]:
        src = lat.index(x)
        dst = lat.index((x[0] + 1, x[1]))
        block = u[dst * fib:(dst + 1) * fib, src * fib:(src + 1) * fib]
        assert np.array_equal(block, np.kron(np.eye(2), f.link(0, x)))


def test_shift_operators_commute_trivial():
    c = clifford_rep(2)
    f = trivial_gauge_field(LatticeTorus(2, 4))
    a, b = shift_operator(f, c, 0), shift_operator(f, c, 1)
    assert np.array_equal(a @ b, b @ a)


def test_shift_operator_dimension_check():
    with pytest.raises(ValueError):
        shift_operator(trivial_gauge_field(LatticeTorus(2, 3)), clifford_rep(4), 0)


def test_json_round_trip():
    f = apply_gauge_transform(embed_field(flux_gauge_field_t2(3, 1), 2),
                              random_gauge_transform(LatticeTorus(2, 3), 2, 4))
    text = f.to_json()
    obj = json.loads(text)
    assert set(obj) == {"n", "k", "N", "links"}
    assert (obj["n"], obj["k"], obj["N"]) == (2, 3, 2)
    g = GaugeField.from_json(text)
    assert np.array_equal(g.links, f.links)
