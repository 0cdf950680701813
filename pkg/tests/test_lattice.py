import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elastic_floquet.errors import DegenerateLatticeError, ForbiddenQuasimomentumError
from elastic_floquet.lattice import (Lattice, canonicalize_quasimomentum, dual_basis,
                                     dual_shell)

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


def brute_shell(lattice, alpha, q_max, box):
    out = []
    for n in itertools.product(range(-box, box + 1), repeat=lattice.dimension):
        k = np.asarray(n) @ lattice.dual + alpha
        if k @ k <= q_max ** 2:
            out.append(n)
    return sorted(out)


def test_dual_of_unit_square():
    assert np.allclose(dual_basis(np.eye(2)), 2 * np.pi * np.eye(2), rtol=0, atol=1e-15)


def test_dual_of_unit_cube():
    assert np.allclose(dual_basis(np.eye(3)), 2 * np.pi * np.eye(3), rtol=0, atol=1e-15)


def test_dual_of_hexagonal_by_linear_solve():
    L = np.array([[1.0, 0.0], [0.5, np.sqrt(3) / 2]])
    G = dual_basis(L)
    # oracle: solve l_i . g_j = 2 pi delta_ij column by column
    g1 = np.linalg.solve(L, [2 * np.pi, 0.0])
    g2 = np.linalg.solve(L, [0.0, 2 * np.pi])
    assert np.allclose(G, [g1, g2], rtol=0, atol=1e-12)
    assert np.max(np.abs(L @ G.T - 2 * np.pi * np.eye(2))) < 1e-12


def test_degenerate_basis_rejected():
    with pytest.raises(DegenerateLatticeError):
        dual_basis([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(DegenerateLatticeError):
        Lattice(np.zeros((2, 2)))


@settings(max_examples=60, deadline=None)
@given(st.lists(finite, min_size=4, max_size=4))
def test_dual_relation_and_involution(vals):
    L = np.array(vals).reshape(2, 2) + 2 * np.eye(2)
    if abs(np.linalg.det(L)) < 1e-3:
        return
    G = dual_basis(L)
    assert np.max(np.abs(L @ G.T - 2 * np.pi * np.eye(2))) < 1e-12 * max(1, np.abs(L).max() * np.abs(G).max())
    # with the 2 pi delta convention the dual of the dual is the original basis
    assert np.allclose(dual_basis(G), L, rtol=0, atol=1e-10 * np.abs(L).max())


def test_volume():
    L = np.array([[2.0, 0.0], [0.3, 0.5]])
    assert Lattice(L).volume == pytest.approx(1.0, rel=1e-15)


def test_empty_shell_for_zero_radius():
    pts, idx = dual_shell(Lattice.square(), [0.1, 0.0], 0.0)
    assert pts.shape == (0, 2) and idx.shape == (0, 2)


def test_cubic_shell_matches_box_scan():
    lat = Lattice.cubic()
    alpha = np.array([np.pi, 0, 0])
    _, idx = dual_shell(lat, alpha, 2 * np.pi)
    assert sorted(map(tuple, idx)) == brute_shell(lat, alpha, 2 * np.pi, 4)


def test_square_shell_matches_box_scan_and_ordering():
    lat = Lattice.square()
    alpha = np.array([np.pi, np.pi])
    pts, idx = dual_shell(lat, alpha, 10 * np.pi)
    assert sorted(map(tuple, idx)) == brute_shell(lat, alpha, 10 * np.pi, 8)
    assert list(map(tuple, idx)) == sorted(map(tuple, idx))
    # q -> -q - 2 alpha is a lattice map here since 2 alpha is a dual vector
    k = {tuple(np.round(p, 9)) for p in pts}
    assert {tuple(np.round(-p, 9)) for p in pts} == k


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.floats(0.5, 25.0), st.floats(-0.4, 0.4))
def test_shell_exact_and_monotone(a1, a2, q, shear):
    lat = Lattice(np.array([[1.0, 0.0], [shear, 1.0]]))
    alpha = np.array([a1, a2])
    _, small = dual_shell(lat, alpha, q)
    _, big = dual_shell(lat, alpha, 1.5 * q)
    assert set(map(tuple, small)) <= set(map(tuple, big))
    assert sorted(map(tuple, small)) == brute_shell(lat, alpha, q, 8)


def test_canonicalize_examples():
    lat = Lattice.square()
    assert np.allclose(canonicalize_quasimomentum([2 * np.pi + 0.3, 0.0], lat), [0.3, 0.0],
                       atol=1e-14)
    assert np.array_equal(canonicalize_quasimomentum([0.3, 0.0], lat), [0.3, 0.0])
    with pytest.raises(ForbiddenQuasimomentumError):
        canonicalize_quasimomentum([0.0, 0.0], lat)
    with pytest.raises(ForbiddenQuasimomentumError):
        canonicalize_quasimomentum([2 * np.pi, -4 * np.pi], lat)


@settings(max_examples=80, deadline=None)
@given(finite, finite, st.floats(-0.3, 0.3))
def test_canonical_cell_property(x, y, shear):
    lat = Lattice(np.array([[1.0, shear], [0.0, 1.2]]))
    alpha = np.array([x, y]) * 7
    try:
        red = canonicalize_quasimomentum(alpha, lat)
    except ForbiddenQuasimomentumError:
        return
    coeff = lat.basis @ red / (2 * np.pi)
    assert np.all(coeff >= -0.5 - 1e-12) and np.all(coeff < 0.5 + 1e-12)
    diff = lat.basis @ (alpha - red) / (2 * np.pi)
    assert np.allclose(diff, np.round(diff), atol=1e-9)
