import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import hermitian_pattern
from elastic_floquet.capacitance import CapacitanceTensor, static_spectrum
from elastic_floquet.errors import AssumptionViolationError
from elastic_floquet.modulation import (ModulationProfile, assemble_B0, assemble_B1_coeffs,
                                        assemble_system, lift_first_order, modulated_B)

C3 = np.array([[-2.0, 0.5 + 0.3j, 0.4 - 0.2j],
               [0.5 - 0.3j, -2.0, 0.3 + 0.6j],
               [0.4 + 0.2j, 0.3 - 0.6j, -2.0]])


def cos_profile(omega=1.3):
    return ModulationProfile.from_entries([(0, 0, 1, 0.5, 0), (0, 0, -1, 0.5, 0)], 1, 3, omega)


def test_B0_single_resonator():
    B0 = assemble_B0(CapacitanceTensor(C3, 3), [1, 1, 1], [0.7], 0.2)
    assert np.array_equal(B0, 0.2 / 0.7 * C3)
    assert not np.any(assemble_B0(CapacitanceTensor(C3, 3), [1, 1, 1], [0.7], 0.0))


def test_B0_spectrum_is_scaled_H():
    rng = np.random.default_rng(3)
    C = CapacitanceTensor(hermitian_pattern(rng, 4), 2)
    B0 = assemble_B0(C, [1.0, 2.0], [0.3, 0.5], 0.05)
    H = static_spectrum(C, [1.0, 2.0], [0.3, 0.5], 0.05).H
    assert np.allclose(np.sort_complex(np.linalg.eigvals(B0)),
                       np.sort_complex(0.05 * np.linalg.eigvals(H)), atol=1e-14)


def test_B1_first_row_only():
    B1 = assemble_B1_coeffs(CapacitanceTensor(C3, 3), [1, 1, 1], [0.7], 0.2, cos_profile())
    expect = np.zeros((3, 3), dtype=complex)
    expect[0] = 0.5 * 0.2 / 0.7 * C3[0]
    assert np.allclose(B1[1], expect, rtol=0, atol=1e-16)
    assert np.allclose(B1[-1], expect, rtol=0, atol=1e-16)
    assert not np.any(B1[0])


def test_B1_independent_of_amplitude():
    C = CapacitanceTensor(C3, 3)
    p = cos_profile()
    q = ModulationProfile(p.coefficients, p.omega, eta=0.3)
    a = assemble_B1_coeffs(C, [1, 1, 1], [0.7], 0.2, p)
    b = assemble_B1_coeffs(C, [1, 1, 1], [0.7], 0.2, q)
    assert all(np.array_equal(a[m], b[m]) for m in a)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0, 50), st.floats(0, 0.5))
def test_time_evaluation_matches_direct(seed, t, eta):
    rng = np.random.default_rng(seed)
    C = CapacitanceTensor(hermitian_pattern(rng, 4), 2)
    M = 2
    coeff = rng.normal(size=(2, 2, 2 * M + 1)) + 1j * rng.normal(size=(2, 2, 2 * M + 1))
    coeff[:, :, M] = 0
    prof = ModulationProfile(coeff, 0.9, eta)
    asm = assemble_system(C, [1.0, 1.5], [0.2, 0.4], 0.1, prof)
    direct = modulated_B(C, [1.0, 1.5], [0.2, 0.4], 0.1, prof, t)
    assert np.max(np.abs(asm.B(t) - direct)) < 1e-13 * np.max(np.abs(direct))


def test_row_scaling_at_random_times():
    C = CapacitanceTensor(C3, 3)
    rng = np.random.default_rng(0)
    coeff = np.zeros((1, 3, 5), dtype=complex)
    coeff[0, :, 3] = rng.normal(size=3) + 1j * rng.normal(size=3)
    coeff[0, :, 4] = rng.normal(size=3) + 1j * rng.normal(size=3)
    coeff[0, :, 1] = coeff[0, :, 3].conj()
    coeff[0, :, 0] = coeff[0, :, 4].conj()
    prof = ModulationProfile(coeff, 2.0, real=True)
    asm = assemble_system(C, [1, 1, 1], [0.7], 0.2, prof)
    for t in rng.uniform(0, 10, 20):
        B1t = sum(B * np.exp(1j * m * 2.0 * t) for m, B in asm.B1.items())
        expect = np.diag(prof(t)[0]) @ asm.B0
        assert np.max(np.abs(B1t - expect)) < 1e-14


def test_real_modulation_gives_real_B():
    C = CapacitanceTensor(C3.real, 3)
    coeff = np.zeros((1, 3, 3), dtype=complex)
    coeff[0, 1, 2] = 0.3 - 0.2j
    coeff[0, 1, 0] = 0.3 + 0.2j
    prof = ModulationProfile(coeff, 1.0, 0.1, real=True)
    asm = assemble_system(C, [1, 1, 1], [1.0], 1.0, prof)
    for t in np.linspace(0, 6, 13):
        assert np.max(np.abs(asm.B(t).imag)) < 1e-15


def test_assumption_violations():
    coeff = np.zeros((1, 2, 3), dtype=complex)
    coeff[0, 0, 1] = 0.1
    with pytest.raises(AssumptionViolationError):
        ModulationProfile(coeff, 1.0)
    coeff = np.zeros((1, 2, 3), dtype=complex)
    coeff[0, 0, 2] = 1.0
    with pytest.raises(AssumptionViolationError):
        ModulationProfile(coeff, 1.0, real=True)


def test_lift_block_structure():
    rng = np.random.default_rng(1)
    B0 = hermitian_pattern(rng, 3)
    B1 = {1: rng.normal(size=(3, 3)) + 0j, -1: rng.normal(size=(3, 3)) + 0j}
    asm = lift_first_order(B0, B1, 1.0)
    lam = np.sqrt(np.linalg.eigvals(B0).astype(complex))
    ref = np.sort_complex(np.concatenate([lam, -lam]))
    assert np.allclose(np.sort_complex(np.linalg.eigvals(asm.A0)), ref, atol=1e-12)
    for A in asm.A1.values():
        assert not np.any(A @ A)


def test_scalar_oscillator():
    asm = lift_first_order(np.array([[-1.0]]), {}, 1.0)
    assert np.array_equal(asm.A0, [[0, 1], [-1, 0]])
    w = np.linalg.eigvals(asm.A0)
    assert np.allclose(w[np.argsort(w.imag)], [-1j, 1j], atol=1e-15)
