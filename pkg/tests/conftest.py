import numpy as np
import pytest

from latindex.symbols import Symbol, TrigPoly, theta_exponential, x_function


def random_symbol(rng, n=1, d=1, x_degree=1, theta_degree=1):
    """Symbol with random complex TrigPoly coefficients, l1-normalized per mode."""
    modes = {}
    for idx in np.ndindex(*(2 * theta_degree + 1,) * n):
        m = tuple(a - theta_degree for a in idx)
        shape = (2 * x_degree + 1,) * n + (d, d)
        c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        modes[m] = TrigPoly(c / np.abs(c).sum(), n)
    return Symbol(n, d, modes)


def h_poly():
    """h(x) = cos 2 pi x + sin(4 pi x) / 2 as a scalar TrigPoly."""
    hc = np.zeros((5, 1, 1), dtype=np.complex128)
    hc[1] = hc[3] = 0.5
    hc[0], hc[4] = 0.25j, -0.25j
    return TrigPoly(hc, 1)


def h_values(x):
    x = np.asarray(x, dtype=float)
    return np.cos(2 * np.pi * x) + 0.5 * np.sin(4 * np.pi * x)


def shift_pair():
    """f = e^{i theta}, g = h(x)."""
    return theta_exponential((1,)), x_function(h_poly())


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
