"""Lattice index counts for Bohr-Sommerfeld quantized symbols and Wilson-Dirac operators."""

from .clifford import CliffordRep, clifford_rep
from .gauge import (
    GaugeField,
    LatticeTorus,
    apply_gauge_transform,
    flux_gauge_field_t2,
    lattice_chern_number_t2,
    product_gauge_field_t4,
    trivial_gauge_field,
)
from .harness import (
    calibrate_sign,
    i_coefficient,
    i_coefficient_sign_sum,
    index_defect,
    lattice_index_count,
    run_experiment,
)
from .linalg import HermitianOperator, Spectrum, count_above, hermitian_eigen, operator_norm
from .quantizer import deformed_projection_check, quantize, quantizer_trace, star_residual
from .symbols import (
    Symbol,
    TrigPoly,
    chern_integral,
    f_dw_symbol,
    moyal_coefficient,
    moyal_unitary_extension,
    poisson_bracket,
    test_projection_t2,
)
from .wilson import free_spectrum_closed_form, wilson_dirac, wilson_dirac_fixed_mass

__version__ = "0.1.0"

__all__ = [
    "apply_gauge_transform",
    "calibrate_sign",
    "chern_integral",
    "clifford_rep",
    "CliffordRep",
    "count_above",
    "deformed_projection_check",
    "f_dw_symbol",
    "flux_gauge_field_t2",
    "free_spectrum_closed_form",
    "GaugeField",
    "hermitian_eigen",
    "HermitianOperator",
    "i_coefficient",
    "i_coefficient_sign_sum",
    "index_defect",
    "lattice_chern_number_t2",
    "lattice_index_count",
    "LatticeTorus",
    "moyal_coefficient",
    "moyal_unitary_extension",
    "operator_norm",
    "poisson_bracket",
    "product_gauge_field_t4",
    "quantize",
    "quantizer_trace",
    "run_experiment",
    "Spectrum",
    "star_residual",
    "Symbol",
    "test_projection_t2",
    "TrigPoly",
    "trivial_gauge_field",
    "wilson_dirac",
    "wilson_dirac_fixed_mass",
]
