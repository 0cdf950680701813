import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from elastic_floquet.ep import (EPParameters, appendix_2d_check, case1_construct,
                                case2_membership_formula, case2_roots, certify,
                                characteristic_residual, classify_case1_root,
                                complex_sqrt_branches, conjugate_companion_roots,
                                congruence_residual, deflate_cubic, det_B0, discriminant,
                                eigenvector_formula, pair_modulation_frequency, conjugate_root_conditions, f_of,
                                fourier_selective_construct, g_of, transformed_entries_formula,
                                vieta_complete, zeta)
from elastic_floquet.errors import (AssumptionViolationError, DegenerateCaseError,
                                    ExcludedCaseError, NotAnEigenvalueError)
from elastic_floquet.floquet import diagonalizability_report, truncated_exponents

small = st.floats(-2, 2, allow_nan=False)
cplx = st.builds(complex, small, small)

P0 = EPParameters(-3.0, 0.5 + 0.3j, 0.4 - 0.2j, 0.3 + 0.6j)


def params(c11, c12, c13, c23, eps=1.0, vol=1.0):
    return EPParameters(c11, c12, c13, c23, eps, vol)


def test_f_example():
    assert f_of(1.0, params(2.0, 1.0, 1.0, 1.0)) == 0


@settings(max_examples=100, deadline=None)
@given(small, cplx, cplx, cplx, st.floats(0.1, 3), st.floats(0.1, 3))
def test_companion_roots(c11, c12, c13, c23, eps, vol):
    assume(abs(c13) > 0.05 and abs(c23) > 0.05)
    p = params(c11, c12, c13, c23, eps, vol)
    x2 = eps * (c11 * c13 - c12 * c23) / (c13 * vol)
    assert abs(f_of(x2, p)) < 1e-13 * (1 + abs(c13) * vol * abs(x2))
    for x in case2_roots(p):
        scale = abs(c23) * vol ** 2 * abs(x) ** 2 + eps ** 2 * (1 + abs(c11)) ** 2 * (1 + abs(c13) + abs(c23)) ** 2 * abs(c23)
        assert abs(g_of(x, p)) < 1e-12 * scale


@settings(max_examples=100, deadline=None)
@given(small, cplx, cplx, cplx)
def test_zeta_definition(c11, c12, c13, c23):
    p = params(c11, c12, c13, c23)
    z = zeta(p)
    ref = np.conj(c12) ** 2 * c13 ** 2 + 4 * abs(c13) ** 2 * c23 ** 2 + 4 * abs(c23) ** 2 * c23 ** 2
    assert abs(z ** 2 - ref) < 1e-13 * (1 + abs(ref))


@settings(max_examples=100, deadline=None)
@given(small, cplx, cplx, cplx, st.floats(0.1, 3), st.floats(0.1, 3))
def test_characteristic_cubic(c11, c12, c13, c23, eps, vol):
    p = params(c11, c12, c13, c23, eps, vol)
    B0 = p.B0()
    s = eps / vol
    scale = (s * (1 + abs(c11) + abs(c12) + abs(c13) + abs(c23))) ** 3
    assume(abs(det_B0(p)) > 1e-6 * scale)
    assert abs(characteristic_residual(0.0, p) - np.linalg.det(B0)) < 1e-13 * scale
    assert abs(det_B0(p) - np.linalg.det(B0).real) < 1e-13 * scale
    w = np.linalg.eigvals(B0)
    assert abs(w.sum() - 3 * c11 * s) < 1e-12 * scale ** (1 / 3)
    for x in w:
        assert abs(characteristic_residual(x, p)) < 1e-10 * scale
    # Vieta closure from any known root
    y, z = vieta_complete(w[0], p)
    assert abs(w[0] + y + z - 3 * c11 * s) < 1e-10 * scale ** (1 / 3)
    assert abs(w[0] * y * z - det_B0(p)) < 1e-10 * scale
    rest = np.array([y, z])
    for v in w[1:]:
        assert np.min(np.abs(rest - v)) < 1e-7 * scale ** (1 / 3)


def test_deflation_example_and_order():
    r = deflate_cubic(1.0, 5.0, 5.0)
    assert np.allclose(sorted(r, key=lambda v: v.imag), [2 - 1j, 2 + 1j])
    back = deflate_cubic(2 + 1j, 5.0, 5.0)
    assert np.allclose(sorted(back, key=lambda v: (v.imag, v.real)), [2 - 1j, 1.0])


def test_vieta_rejects_non_roots():
    with pytest.raises(ZeroDivisionError):
        vieta_complete(0.0, P0)
    with pytest.raises(NotAnEigenvalueError):
        vieta_complete(1.234, P0)


def test_sqrt_examples():
    assert complex_sqrt_branches(3 + 4j) == (2 + 1j, -(2 + 1j))
    w, _ = complex_sqrt_branches(8 + 6j)
    assert abs(w - (3 + 1j)) < 1e-15


def test_sqrt_formula_matches_principal():
    rng = np.random.default_rng(0)
    z = rng.normal(size=1000) * 10 + 1j * rng.normal(size=1000) * 10
    for v in z:
        w, m = complex_sqrt_branches(v)
        assert abs(w - np.sqrt(v)) < 1e-14 * abs(w)
        assert abs(w * w - v) < 1e-14 * abs(v) and m == -w


def test_pair_frequency_matches_imaginary_difference():
    for a, b, n in [(-1.3, 0.7, 1), (2.0, -0.4, 3), (0.1, 5.0, 2)]:
        lam = complex_sqrt_branches(complex(a, b))[0]
        assert abs(pair_modulation_frequency(a, b, n) - abs(lam.imag) / n) < 1e-12


def test_excluded_case_routing():
    with pytest.raises(ExcludedCaseError):
        classify_case1_root(-2.0 + 0j, (1 + 1j, 1 - 1j))
    with pytest.raises(ExcludedCaseError):
        classify_case1_root(1 + 1j, (-2.0 + 0j, -3 + 0j))
    assert classify_case1_root(2.0 + 0j, (1 + 1j, 1 - 1j)) == "real-conjugate"


def test_eigenvector_and_transformed_formulas():
    x = np.linalg.eigvals(P0.B0())
    S = np.column_stack([eigenvector_formula(v, P0) for v in x])
    assert np.max(np.abs(P0.B0() @ S - S * x)) < 1e-13
    B1 = np.diag([1, 0, 0]) @ P0.B0()
    M = np.linalg.solve(S, B1 @ S)
    e12, e21 = transformed_entries_formula(x[0], x[1], x[2], P0)
    assert abs(M[0, 1] - e12) < 1e-12 * abs(M).max()
    assert abs(M[1, 0] - e21) < 1e-12 * abs(M).max()


def test_linear_companion_root_silences_coupling():
    # c12 chosen so that the companion root is an eigenvalue: f(x) = 0 makes (1, 2) vanish
    x = np.linalg.eigvals(P0.B0())
    for i in range(3):
        others = [x[j] for j in range(3) if j != i]
        e12, _ = transformed_entries_formula(x[i], others[0], others[1], P0)
        assert np.isfinite(e12)
    assert abs(f_of(x[0], P0) * g_of(x[1], P0)) > 0


def test_conjugate_companion_roots_impossible_with_equal_diagonal():
    # displayed conditions met: c23 on the diagonal, conj(c12) c13 / (2 c23) real
    c23 = 0.4 * np.exp(1j * np.pi / 4)
    c13 = 0.3 - 0.5j
    w = 0.7
    c12 = np.conj(2 * c23 * w / c13)
    p = params(-2.0, c12, c13, c23)
    cond = conjugate_root_conditions(p)
    assert abs(cond["equal real parts"]) < 1e-10
    assert abs(cond["opposite imaginary parts"]) < 1e-10
    assert abs(cond["nonvanishing imaginary parts"]) > 1e-3
    plus, minus = case2_roots(p)
    assert abs(plus.imag) < 1e-12 and abs(minus.imag) < 1e-12
    assert not conjugate_companion_roots(p)


@settings(max_examples=200, deadline=None)
@given(small, cplx, cplx, cplx)
def test_companion_roots_never_strict_conjugates(c11, c12, c13, c23):
    assume(abs(c23) > 1e-3)
    assert not conjugate_companion_roots(params(c11, c12, c13, c23), tol=1e-9)


def test_case2_displayed_membership_matches_cubic():
    p = params(-2.0, 0.8 + 0.1j, 0.4 - 0.2j, 0.3 + 0.6j)
    for sign, x in zip((1, -1), case2_roots(p)):
        assert abs(case2_membership_formula(p, sign) - characteristic_residual(x, p)) < 1e-12


def test_congruence_residual():
    real_gap, int_gap, m = congruence_residual(0.1 + 2.5j, 0.1 + 0.5j, 1.0)
    assert real_gap == 0 and int_gap < 1e-15 and m == 2


def test_nonzero_mean_rejected():
    with pytest.raises(AssumptionViolationError):
        P0.with_modulation({0: 1.0})


def test_fourier_selective_certificate():
    cert = fourier_selective_construct(P0)
    assert cert.valid, cert.failures()
    tr = truncated_exponents(cert.params.assembly(cert.Omega))
    # lambda_a = lambda_b + i Omega implies -lambda_b = -lambda_a + i Omega: a mirrored pair
    assert len(tr.degenerate_pairs) == 2
    for k, l in tr.degenerate_pairs:
        assert (tr.F1[k, l] == 0) != (tr.F1[l, k] == 0)
    assert abs(cert.diagnostics["coupling_kl"]) > 1e-10 or abs(cert.diagnostics["coupling_lk"]) > 1e-10
    doc = cert.to_dict()
    assert doc["valid"] and doc["k_star"] == cert.k_star


def test_two_sided_modulation_is_not_an_ep():
    cert = fourier_selective_construct(P0)
    q = cert.params.with_modulation({cert.k_star: 1.0, -cert.k_star: 0.7})
    bad = certify(q, cert.Omega, cert.n, pair=cert.pair)
    assert not bad.valid and not bad.defective
    b, c = bad.diagnostics["coupling_kl"], bad.diagnostics["coupling_lk"]
    assert abs(b) > 1e-10 and abs(c) > 1e-10
    tr = truncated_exponents(q.assembly(cert.Omega))
    w = np.linalg.eigvals(tr.matrix(0.01))
    f0 = bad.diagnostics["f0"]
    pair = w[np.argsort(np.abs(w - f0))[:2]]
    assert abs(abs(pair[0] - pair[1]) - 2 * 0.01 * abs(np.sqrt(b * c))) < 1e-12


def test_unmodulated_pair_is_diagonalizable():
    cert = fourier_selective_construct(P0)
    q = cert.params.with_modulation({})
    bad = certify(q, cert.Omega, cert.n, pair=cert.pair)
    assert not bad.valid
    assert not diagonalizability_report(truncated_exponents(q.assembly(cert.Omega)).matrix(0.01)).defective


def test_hermitian_case1_root_is_degenerate():
    # c12 placing the linear companion root on the spectrum (found once by damped Newton)
    from elastic_floquet.ep import search_case1
    res = search_case1(0.4 - 0.2j, 0.3 + 0.6j, seed=0, starts=[0.5 + 0.5j])
    att = res.attempts[0]
    if att.params is None:
        pytest.skip(att.outcome)
    with pytest.raises(DegenerateCaseError):
        case1_construct(att.params, (1, 0, 1))


def test_planar_check_example():
    rep = appendix_2d_check(1.0, 2.0, np.sqrt(3.0))
    assert rep.varsigma == pytest.approx(np.sqrt(13), rel=1e-15)
    assert rep.phi_plus == pytest.approx(5 + np.sqrt(13), rel=1e-15)
    assert rep.phi_minus == pytest.approx(5 - np.sqrt(13), rel=1e-14)
    assert rep.phi_plus * rep.phi_minus == pytest.approx(12.0, rel=1e-14)
    assert not rep.candidate and not rep.excluded


def test_planar_check_degenerate_inputs():
    assert appendix_2d_check(1.0, 2.0, 0.0).excluded
    rep = appendix_2d_check(2.0, 2.0, 2.0)
    assert rep.excluded and rep.det_proxy == 0


def test_planar_small_factor_is_accurate():
    # c11 = 1, c22 = 0: phi_- = 1 + 2p - sqrt(1 + 4p) = 2p^2 - 4p^3 + O(p^4)
    rep = appendix_2d_check(1.0, 0.0, 1e-5j)
    p = 1e-10
    assert rep.phi_minus == pytest.approx(2 * p ** 2 - 4 * p ** 3, rel=1e-12)
    assert not rep.excluded and not rep.candidate


@settings(max_examples=300, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-3.5, 3.5), st.floats(-3.5, 3.5))
def test_planar_product_identity(c11, c22, re, im):
    rep = appendix_2d_check(c11, c22, complex(re, im))
    assert rep.identity_residual <= 1e-10 * max(rep.identity_scale, 1e-300)
    if not rep.excluded:
        assert not rep.candidate
