"""Quasiperiodic elastic resonator lattices: capacitance spectra, Floquet
exponents of density modulated systems and first order exceptional points."""

from .capacitance import (CapacitanceTensor, LayerOperatorMatrix, StaticSpectrum,
                          assemble_single_layer, capacitance_tensor, compute_capacitance,
                          load_capacitance, static_spectrum)
from .ep import (EPCertificate, EPParameters, appendix_2d_check, case1_construct,
                 case2_construct, certify, characteristic_residual, complex_sqrt_branches,
                 f_of, fourier_selective_construct, g_of, search_case1, search_case2,
                 vieta_complete)
from .floquet import (DiagonalizabilityReport, FloquetExponents, Monodromy, TruncatedExponent,
                      diagonalizability_report, effective_pair_eigenvalues, floquet_exponents,
                      fold_frequency, integrate_monodromy, truncated_exponents)
from .geometry import Circle, ResonatorGeometry, StarCurve
from .green import BackgroundMedium, green_correction1, green_full, green_static
from .lattice import Lattice, canonicalize_quasimomentum, dual_basis, dual_shell
from .modulation import (ModulationProfile, SystemAssembly, assemble_B0, assemble_B1_coeffs,
                         lift_first_order)

__version__ = "0.1.0"

__all__ = [
    "BackgroundMedium", "CapacitanceTensor", "Circle", "DiagonalizabilityReport",
    "EPCertificate", "EPParameters", "FloquetExponents", "Lattice", "LayerOperatorMatrix",
    "ModulationProfile", "Monodromy", "ResonatorGeometry", "StarCurve", "StaticSpectrum",
    "SystemAssembly", "TruncatedExponent", "appendix_2d_check", "assemble_B0",
    "assemble_B1_coeffs", "assemble_single_layer", "canonicalize_quasimomentum",
    "capacitance_tensor", "case1_construct", "case2_construct", "certify",
    "characteristic_residual", "complex_sqrt_branches", "compute_capacitance",
    "diagonalizability_report", "dual_basis", "dual_shell", "effective_pair_eigenvalues",
    "f_of", "floquet_exponents", "fold_frequency", "fourier_selective_construct", "g_of",
    "green_correction1", "green_full", "green_static", "integrate_monodromy",
    "lift_first_order", "load_capacitance", "search_case1", "search_case2", "static_spectrum",
    "truncated_exponents", "vieta_complete",
]
