import numpy as np
import pytest

from latindex.clifford import clifford_rep
from latindex.gauge import (
    LatticeTorus,
    apply_gauge_transform,
    embed_field,
    flux_gauge_field_t2,
    product_gauge_field_t4,
    random_gauge_transform,
    trivial_gauge_field,
)
from latindex.harness import calibrate_sign, i_coefficient, index_defect
from latindex.linalg import AmbiguousCount, count_above, hermitian_eigen
from latindex.quantizer import quantize
from latindex.symbols import f_dw_symbol
from latindex.wilson import (
    DegenerateMassError,
    chirality,
    forward_difference,
    free_spectrum_closed_form,
    lattice_dirac,
    wilson_dirac,
    wilson_dirac_fixed_mass,
    wilson_term,
)


def trivial(n, k, N=1):
    return trivial_gauge_field(LatticeTorus(n, k), N)


def spectrum(op):
    return hermitian_eigen(op).eigenvalues


# ---------------------------------------------------------------- forward difference


def test_forward_difference_kills_constants():
    c = clifford_rep(2)
    nab = forward_difference(trivial(2, 4), c, 0)
    assert np.array_equal(nab @ np.ones(nab.shape[0]), np.zeros(nab.shape[0]))


@pytest.mark.parametrize("i", [0, 1])
def test_forward_difference_delta(i):
    k = 4
    c = clifford_rep(2)
    lat = LatticeTorus(2, k)
    nab = forward_difference(trivial(2, k), c, i)
    f = np.zeros(nab.shape[0])
    f[lat.index(np.array([0, 0])) * 2] = 1.0
    out = (nab @ f).reshape(k * k, 2)
    # (nabla f)(x) = k (f(x + e_i) - f(x))
    expected = np.zeros((k * k, 2))
    expected[lat.index(np.array([0, 0])), 0] = -k
    expected[lat.index(-np.eye(2, dtype=int)[i]), 0] = k
    assert np.array_equal(out, expected)


def test_forward_difference_unitary():
    field = apply_gauge_transform(flux_gauge_field_t2(5, 2), random_gauge_transform(LatticeTorus(2, 5), 1, 3))
    for i in range(2):
        u = forward_difference(field, clifford_rep(2), i) / 5 + np.eye(50)
        assert np.allclose(u @ u.conj().T, np.eye(50), atol=1e-14)


# ---------------------------------------------------------------- D and W


@pytest.mark.parametrize("n", [2, 4])
def test_dirac_anticommutes_with_gamma(n):
    k = 3 if n == 4 else 5
    c = clifford_rep(n)
    field = flux_gauge_field_t2(k, 1) if n == 2 else product_gauge_field_t4(k, 1, -1)
    d = lattice_dirac(field, c).matrix
    g = chirality(field, c).toarray()
    assert np.array_equal(g @ d + d @ g, np.zeros_like(d))


def test_free_dirac_spectrum():
    n, k = 2, 4
    c = clifford_rep(n)
    p = np.stack(np.meshgrid(np.arange(k), np.arange(k), indexing="ij"), -1).reshape(-1, 2)
    e = k * np.sqrt(np.sum(np.sin(2 * np.pi * p / k) ** 2, axis=-1))
    expected = np.sort(np.concatenate([e, -e]))
    ev = spectrum(lattice_dirac(trivial(n, k), c))
    assert np.allclose(ev, expected, atol=1e-12)
    assert np.allclose(ev, -ev[::-1], atol=1e-12)


def test_free_wilson_term():
    n, k = 2, 6
    c = clifford_rep(n)
    field = trivial(n, k)
    w = wilson_term(field, c)
    p = np.stack(np.meshgrid(np.arange(k), np.arange(k), indexing="ij"), -1).reshape(-1, 2)
    e = k * np.sum(np.cos(2 * np.pi * p / k) - 1, axis=-1)
    assert np.allclose(spectrum(w), np.sort(np.repeat(e, 2)), atol=1e-12)
    assert np.max(spectrum(w)) <= 1e-12
    assert np.allclose(w.matrix @ np.ones(w.dim), 0, atol=1e-14)
    g = chirality(field, c).toarray()
    assert np.array_equal(g @ w.matrix, w.matrix @ g)


@pytest.mark.parametrize("n", [2, 4])
def test_wilson_dirac_hermitian(n):
    field = flux_gauge_field_t2(6, 2) if n == 2 else product_gauge_field_t4(3, 1, 1)
    h = wilson_dirac(field, clifford_rep(n), 0.7, 1.3).matrix
    assert np.max(np.abs(h - h.conj().T)) <= 1e-12


def test_wilson_parameter_positive():
    with pytest.raises(ValueError):
        wilson_dirac(trivial(2, 3), clifford_rep(2), 0.5, 0.0)


# ---------------------------------------------------------------- trivial-field identity


@pytest.mark.parametrize("n,k", [(2, 3), (2, 4), (2, 6), (4, 3), (4, 4), (4, 6)])
def test_trivial_field_equals_quantized_symbol(n, k):
    c = clifford_rep(n)
    m, r = 0.6, 1.2
    h = wilson_dirac(trivial(n, k), c, m, r).matrix
    q = quantize(f_dw_symbol(c, m, r), k).matrix
    q *= k
    q -= h
    assert np.max(np.abs(q)) <= 1e-12


def test_trivial_field_identity_color():
    c = clifford_rep(2)
    h = wilson_dirac(trivial(2, 4, N=3), c, 1.5).matrix
    q = 4 * quantize(f_dw_symbol(c, 1.5, N=3), 4).matrix
    assert q.shape == (96, 96)
    assert np.max(np.abs(h - q)) <= 1e-12


# ---------------------------------------------------------------- closed-form spectra


def test_closed_form_examples():
    assert np.allclose(free_spectrum_closed_form(2, 2, 0.5, 1.0, 2), [-7, -3, -3, -1, 1, 3, 3, 7])
    assert np.allclose(free_spectrum_closed_form(2, 2, 4.5, 1.0, 2), [-9, -5, -5, -1, 1, 5, 5, 9])


def test_closed_form_small_lattice_diagonalization():
    ev = spectrum(wilson_dirac(trivial(2, 2), clifford_rep(2), 0.5).operator)
    assert np.allclose(ev, [-7, -3, -3, -1, 1, 3, 3, 7], atol=1e-12)


@pytest.mark.parametrize("n,k,m,r", [(2, 5, 0.5, 1.0), (2, 16, 1.3, 0.7), (2, 9, -0.4, 2.0),
                                     (4, 3, 0.5, 1.0), (4, 4, 3.1, 1.0)])
def test_closed_form_matches_diagonalization(n, k, m, r):
    c = clifford_rep(n)
    ev = spectrum(wilson_dirac(trivial(n, k), c, m, r).operator)
    closed = free_spectrum_closed_form(n, k, m, r, c.spinor_dim)
    assert len(closed) == c.spinor_dim * k**n
    assert np.max(np.abs(ev - closed)) <= 1e-9 * max(1.0, np.max(np.abs(closed)))


def test_closed_form_colors():
    c = clifford_rep(2)
    ev = spectrum(wilson_dirac(trivial(2, 4, N=2), c, 0.5).operator)
    assert np.allclose(ev, free_spectrum_closed_form(2, 4, 0.5, 1.0, 2, N=2), atol=1e-10)


@pytest.mark.parametrize("m", [0.0, 2.0, 4.0])
def test_closed_form_degenerate_mass(m):
    with pytest.raises(DegenerateMassError):
        free_spectrum_closed_form(2, 4, m, 1.0, 2)


@pytest.mark.parametrize("m", [0.3, 1.7, 2.5, 5.0, -1.0])
def test_closed_form_symmetric(m):
    s = free_spectrum_closed_form(2, 6, m, 1.0, 2)
    assert np.array_equal(s, -s[::-1])


# ---------------------------------------------------------------- index defects


@pytest.mark.parametrize("m", [0.5, 1.5, 2.5, 3.5, 5.0, -0.5])
def test_trivial_field_defect_zero(m):
    assert index_defect(wilson_dirac(trivial(2, 6), clifford_rep(2), m).operator) == 0


def test_trivial_field_defect_zero_n4():
    assert index_defect(wilson_dirac(trivial(4, 3), clifford_rep(4), 1.0 + 0.5).operator) == 0


def test_flux_defect_is_global_sign():
    eps = calibrate_sign().epsilon
    op = wilson_dirac(flux_gauge_field_t2(12, 1), clifford_rep(2), 0.5, 1.0)
    assert index_defect(op.operator) == eps * i_coefficient(2, 0.5) == eps


def test_flux_defect_with_colors():
    eps = calibrate_sign().epsilon
    field = embed_field(flux_gauge_field_t2(12, 1), 2)
    assert index_defect(wilson_dirac(field, clifford_rep(2), 0.5).operator) == eps


def test_gauge_covariance():
    c = clifford_rep(2)
    field = embed_field(flux_gauge_field_t2(6, 2), 2)
    ref = spectrum(wilson_dirac(field, c, 0.5, 1.0).operator)
    for seed in range(10):
        g = random_gauge_transform(field.lattice, 2, seed)
        ev = spectrum(wilson_dirac(apply_gauge_transform(field, g), c, 0.5, 1.0).operator)
        assert np.max(np.abs(ev - ref)) <= 1e-9


# ---------------------------------------------------------------- fixed mass


def test_fixed_mass_matches_scaled_mass():
    field = flux_gauge_field_t2(16, 1)
    c = clifford_rep(2)
    for m in (0.25, 1.5, 2.5):
        a = wilson_dirac_fixed_mass(field, c, m * 16).matrix
        b = wilson_dirac(field, c, m, 1.0).matrix
        assert np.array_equal(a, b)


def test_fixed_mass_attributes():
    op = wilson_dirac_fixed_mass(trivial(2, 8), clifford_rep(2), 4.0)
    assert op.fixed_mass and op.mass == 4.0 and op.m == 0.5


def test_fixed_mass_zero_trivial_field():
    # exact zero modes at momentum 0; the rest of the spectrum is +- symmetric,
    # so a symmetric split of the kernel gives defect 0
    op = wilson_dirac_fixed_mass(trivial(2, 8), clifford_rep(2), 0.0)
    ev = spectrum(op.operator)
    assert np.allclose(ev, -ev[::-1], atol=1e-12)
    assert np.sum(np.abs(ev) <= 1e-12) == 2
    with pytest.raises(AmbiguousCount):
        index_defect(op.operator)


def test_fixed_mass_zero_flux_field():
    op = wilson_dirac_fixed_mass(flux_gauge_field_t2(8, 1), clifford_rep(2), 0.0)
    assert index_defect(op.operator) == 0


def test_fixed_mass_large_M_follows_chamber():
    # M = 40 at k = 16 sits in the chamber 2 < M/k < 4 where I_2 = -1
    eps = calibrate_sign().epsilon
    op = wilson_dirac_fixed_mass(flux_gauge_field_t2(16, 1), clifford_rep(2), 40.0)
    assert i_coefficient(2, 40 / 16) == -1
    assert index_defect(op.operator) == -eps


def test_fixed_mass_plateau():
    eps = calibrate_sign().epsilon
    field = flux_gauge_field_t2(16, 1)
    c = clifford_rep(2)
    for M in (1.0, 4.0, 12.0, 24.0):
        assert index_defect(wilson_dirac_fixed_mass(field, c, M).operator) == eps


def test_count_matches_dimension_split():
    op = wilson_dirac(flux_gauge_field_t2(8, 1), clifford_rep(2), 0.5)
    spec = hermitian_eigen(op.operator)
    assert count_above(spec) + np.sum(spec.eigenvalues <= 0) == op.dim
