"""Bravais lattices, dual lattices and quasimomenta.

Conventions: a lattice in dimension ``d`` is stored as a ``(d, d)`` array whose
rows are the basis vectors ``l_i``. The dual basis rows ``g_j`` satisfy
``l_i . g_j = 2 pi delta_ij``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLatticeError, ForbiddenQuasimomentumError

TWO_PI = 2.0 * np.pi


def dual_basis(basis) -> np.ndarray:
    """Return the dual basis of ``basis`` (rows are vectors).

    Parameters
    ----------
    basis : array_like, shape (d, d)
        Rows are the lattice generators.

    Returns
    -------
    ndarray, shape (d, d)
        Rows ``g_j`` with ``basis @ g.T == 2 pi I``.

    Raises
    ------
    DegenerateLatticeError
        If the generators are linearly dependent.
    """
    L = np.atleast_2d(np.asarray(basis, dtype=float))
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise DegenerateLatticeError(f"basis must be square, got shape {L.shape}")
    scale = np.max(np.abs(L)) if L.size else 0.0
    det = np.linalg.det(L)
    if scale == 0.0 or abs(det) <= 1e-12 * scale ** L.shape[0]:
        raise DegenerateLatticeError("lattice basis vectors are linearly dependent")
    # l_i . g_j = 2 pi delta_ij  <=>  L G^T = 2 pi I
    return TWO_PI * np.linalg.solve(L, np.eye(L.shape[0])).T


@dataclass(frozen=True)
class Lattice:
    """Bravais lattice with cached dual basis.

    Parameters
    ----------
    basis : array_like, shape (d, d)
        Rows are the generators ``l_1 .. l_d``; ``d`` must be 2 or 3.
    """

    basis: np.ndarray
    dual: np.ndarray = field(init=False, repr=False)
    volume: float = field(init=False)

    def __post_init__(self):
        L = np.array(self.basis, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1] or L.shape[0] not in (2, 3):
            raise DegenerateLatticeError(f"expected a 2x2 or 3x3 basis, got shape {L.shape}")
        L.setflags(write=False)
        G = dual_basis(L)
        G.setflags(write=False)
        object.__setattr__(self, "basis", L)
        object.__setattr__(self, "dual", G)
        object.__setattr__(self, "volume", float(abs(np.linalg.det(L))))

    @property
    def dimension(self) -> int:
        return self.basis.shape[0]

    @classmethod
    def square(cls, a: float = 1.0) -> "Lattice":
        return cls(a * np.eye(2))

    @classmethod
    def cubic(cls, a: float = 1.0) -> "Lattice":
        return cls(a * np.eye(3))

    def fractional(self, x) -> np.ndarray:
        """Coordinates of points ``x`` in the lattice basis."""
        return np.asarray(x, dtype=float) @ self.dual.T / TWO_PI

    def cartesian(self, frac) -> np.ndarray:
        return np.asarray(frac, dtype=float) @ self.basis

    def __eq__(self, other):
        return isinstance(other, Lattice) and np.array_equal(self.basis, other.basis)

    def __hash__(self):
        return hash(self.basis.tobytes())


def dual_shell(lattice: Lattice, alpha, q_max: float):
    """Shifted dual lattice points inside a ball.

    Parameters
    ----------
    lattice : Lattice
    alpha : array_like, shape (d,)
        Quasimomentum.
    q_max : float
        Truncation radius.

    Returns
    -------
    points : ndarray, shape (M, d)
        All ``q + alpha`` with ``q`` in the dual lattice and ``|q + alpha| <= q_max``,
        ordered lexicographically by the integer coordinates of ``q``.
    indices : ndarray of int, shape (M, d)
        Integer coordinates of ``q`` in the dual basis.
    """
    alpha = np.asarray(alpha, dtype=float)
    d = lattice.dimension
    if q_max <= 0:
        return np.zeros((0, d)), np.zeros((0, d), dtype=int)
    # n_j = l_j . q / 2pi and |q| <= q_max + |alpha|
    reach = (q_max + np.linalg.norm(alpha)) * np.linalg.norm(lattice.basis, axis=1) / TWO_PI
    bounds = np.ceil(reach).astype(int) + 1
    axes = [np.arange(-b, b + 1) for b in bounds]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    pts = grid @ lattice.dual + alpha
    keep = np.einsum("ij,ij->i", pts, pts) <= q_max * q_max
    # meshgrid with ij indexing already enumerates in lexicographic order
    return pts[keep], grid[keep]


def _box_shell(lattice: Lattice, alpha, q_max: float, box: int):
    """Brute force enumeration over a fixed integer box (validation helper)."""
    alpha = np.asarray(alpha, dtype=float)
    out = []
    for n in itertools.product(range(-box, box + 1), repeat=lattice.dimension):
        k = np.asarray(n) @ lattice.dual + alpha
        if k @ k <= q_max * q_max:
            out.append(n)
    return np.array(out, dtype=int).reshape(-1, lattice.dimension)


def canonicalize_quasimomentum(alpha, lattice: Lattice, atol: float = 1e-14) -> np.ndarray:
    """Reduce ``alpha`` to the half-open dual cell with coefficients in ``[-1/2, 1/2)``.

    Raises
    ------
    ForbiddenQuasimomentumError
        If the reduced quasimomentum vanishes.
    """
    alpha = np.asarray(alpha, dtype=float)
    coeff = lattice.basis @ alpha / TWO_PI
    reduced = coeff - np.floor(coeff + 0.5)
    if np.all(np.abs(reduced) <= atol):
        raise ForbiddenQuasimomentumError(
            f"quasimomentum {alpha.tolist()} reduces to zero; the layer operator is singular there")
    # leave alpha untouched when it already lies in the cell
    if np.array_equal(reduced, coeff):
        return alpha.copy()
    return reduced @ lattice.dual


def check_quasimomentum(alpha, lattice: Lattice) -> np.ndarray:
    """Validate a quasimomentum without moving it; raise if it is a dual lattice vector."""
    canonicalize_quasimomentum(alpha, lattice)
    return np.asarray(alpha, dtype=float)
