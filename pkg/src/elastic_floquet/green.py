"""Quasiperiodic elastic Green's tensors by truncated dual lattice sums.

All evaluators sum over the shifted dual lattice points ``k = q + alpha`` with
``|k| <= q_max``. Terms are accumulated shell by shell in ascending ``|k|``
(lexicographic within a shell) with Neumaier compensation, so a sum can be
extended to a larger radius without re-summing the inner shells.

The pointwise series is only conditionally convergent in three dimensions;
there the evaluators are meant for validation, not for production assembly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NearResonanceError
from .lattice import Lattice, check_quasimomentum, dual_shell

RESONANCE_TOL = 1e-9


@dataclass(frozen=True)
class BackgroundMedium:
    """Isotropic background with Lame parameters ``lam`` and ``mu``."""

    lam: float
    mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"shear modulus must be positive, got {self.mu}")
        # weakest of the two dimensional positivity conditions
        if not 3 * self.lam + 2 * self.mu > 0:
            raise ValueError("Lame parameters violate d*lam + 2*mu > 0")

    def check(self, d: int):
        if not d * self.lam + 2 * self.mu > 0:
            raise ValueError(f"Lame parameters violate {d}*lam + 2*mu > 0")

    @property
    def coupling(self) -> float:
        """``(lam + mu) / (mu (lam + 2 mu))``, weight of the longitudinal projector."""
        return (self.lam + self.mu) / (self.mu * (self.lam + 2 * self.mu))


def _density(theta, d):
    theta = np.broadcast_to(np.asarray(theta, dtype=float), (d,))
    if np.any(theta < 0):
        raise ValueError("density entries must be nonnegative")
    return theta


class SpectralAccumulator:
    """Neumaier-compensated running sum of complex tensors.

    Parameters
    ----------
    shape : tuple
        Shape of the accumulated array.
    """

    def __init__(self, shape):
        self._sum = np.zeros(tuple(shape) + (2,))
        self._comp = np.zeros_like(self._sum)
        self.count = 0

    def add(self, term):
        term = np.asarray(term, dtype=complex)
        t = np.stack([term.real, term.imag], axis=-1)
        s = self._sum
        new = s + t
        big = np.abs(s) >= np.abs(t)
        self._comp += np.where(big, (s - new) + t, (t - new) + s)
        self._sum = new
        self.count += 1

    @property
    def value(self) -> np.ndarray:
        v = self._sum + self._comp
        return v[..., 0] + 1j * v[..., 1]


def sorted_shell(lattice: Lattice, alpha, q_max: float):
    """Dual shell ordered by ascending ``|q + alpha|`` (stable on lexicographic order)."""
    pts, idx = dual_shell(lattice, alpha, q_max)
    order = np.argsort(np.linalg.norm(pts, axis=1), kind="stable")
    return pts[order], idx[order]


def _static_coefficients(medium, k, volume):
    k2 = np.einsum("mi,mi->m", k, k)
    d = k.shape[1]
    eye = np.eye(d)
    outer = k[:, :, None] * k[:, None, :]
    return -(eye[None] / (medium.mu * k2)[:, None, None]
             - medium.coupling * outer / (k2 * k2)[:, None, None]) / volume


def _full_coefficients(medium, theta, omega, k, idx, volume):
    lam, mu = medium.lam, medium.mu
    k2 = np.einsum("mi,mi->m", k, k)
    ksq = k * k
    D = omega ** 2 * theta[None, :] - mu * k2[:, None]
    near = np.abs(D) <= RESONANCE_TOL * mu * k2[:, None]
    if np.any(near):
        m = int(np.argwhere(near)[0, 0])
        raise NearResonanceError(
            f"omega={omega} is resonant with dual lattice index q={idx[m].tolist()}", idx[m])
    ratio = ksq / D
    den = 1.0 - (lam + mu) * ratio.sum(axis=1)
    if np.any(np.abs(den) <= RESONANCE_TOL):
        m = int(np.argmin(np.abs(den)))
        raise NearResonanceError(
            f"omega={omega} is resonant (longitudinal) with dual lattice index q={idx[m].tolist()}",
            idx[m])
    d = k.shape[1]
    coef = (lam + mu) * (k / D)[:, :, None] * (k / D)[:, None, :] / den[:, None, None]
    others = ratio.sum(axis=1)[:, None] - ratio
    diag = (1.0 - (lam + mu) * others) / (D * den[:, None])
    coef[:, np.arange(d), np.arange(d)] = diag
    return coef / volume


def _correction_coefficients(medium, theta, k, volume):
    lam, mu = medium.lam, medium.mu
    k2 = np.einsum("mi,mi->m", k, k)
    ksq = k * k
    muk2 = mu * k2
    t1 = mu * (lam + mu) / (lam + 2 * mu) * (ksq @ theta) / muk2 ** 2
    c = medium.coupling
    d = k.shape[1]
    sum_other = k2[:, None] - ksq                       # sum_{s != i} k_s^2
    weighted_other = (ksq @ theta)[:, None] - ksq * theta[None, :]
    first = (theta[None, :] / muk2[:, None]
             + (lam + mu) * (theta[None, :] * sum_other + weighted_other) / muk2[:, None] ** 2)
    second = (1.0 + (lam + mu) * sum_other / muk2[:, None]) * t1[:, None]
    diag = -(first - second) / ((lam + 2 * mu) * k2[:, None])
    theta_pair = theta[:, None] + theta[None, :]
    coef = (c * k[:, :, None] * k[:, None, :] / (k2 * k2)[:, None, None]
            * (theta_pair[None] / muk2[:, None, None] - t1[:, None, None]))
    coef[:, np.arange(d), np.arange(d)] = diag
    return coef / volume


def _evaluate(coef, k, r, accumulator=None):
    r = np.asarray(r, dtype=float)
    d = k.shape[1]
    acc = accumulator or SpectralAccumulator(r.shape[:-1] + (d, d))
    for m in range(k.shape[0]):
        phase = np.exp(1j * (r @ k[m]))
        acc.add(phase[..., None, None] * coef[m])
    return acc


def _prepare(lattice, alpha, x, y, medium):
    alpha = check_quasimomentum(alpha, lattice)
    medium.check(lattice.dimension)
    r = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    if r.shape[-1] != lattice.dimension:
        raise ValueError("points do not match the lattice dimension")
    return alpha, r


def green_static(medium: BackgroundMedium, lattice: Lattice, alpha, x, y, q_max: float):
    """Static quasiperiodic Green's tensor.

    Parameters
    ----------
    medium : BackgroundMedium
    lattice : Lattice
    alpha : array_like, shape (d,)
        Nonzero quasimomentum.
    x, y : array_like, shape (..., d)
        Target and source points (broadcast against each other).
    q_max : float
        Truncation radius of the dual lattice sum.

    Returns
    -------
    ndarray, shape (..., d, d)
    """
    alpha, r = _prepare(lattice, alpha, x, y, medium)
    k, _ = sorted_shell(lattice, alpha, q_max)
    return _evaluate(_static_coefficients(medium, k, lattice.volume), k, r).value


def green_full(medium: BackgroundMedium, lattice: Lattice, theta, omega: float, alpha, x, y,
               q_max: float):
    """Frequency dependent Green's tensor of ``mu Lap + (lam+mu) grad div + omega^2 Theta``.

    Raises
    ------
    NearResonanceError
        If ``omega^2 theta_i`` is within ``1e-9`` (relative) of ``mu |q+alpha|^2``
        for a retained term.
    """
    alpha, r = _prepare(lattice, alpha, x, y, medium)
    theta = _density(theta, lattice.dimension)
    k, idx = sorted_shell(lattice, alpha, q_max)
    coef = _full_coefficients(medium, theta, omega, k, idx, lattice.volume)
    return _evaluate(coef, k, r).value


def green_correction1(medium: BackgroundMedium, lattice: Lattice, theta, alpha, x, y,
                      q_max: float):
    """Coefficient of ``omega^2`` in the low frequency expansion of :func:`green_full`."""
    alpha, r = _prepare(lattice, alpha, x, y, medium)
    theta = _density(theta, lattice.dimension)
    k, _ = sorted_shell(lattice, alpha, q_max)
    return _evaluate(_correction_coefficients(medium, theta, k, lattice.volume), k, r).value


class StaticSeries:
    """Incrementally extendable static Green's sum at fixed points.

    >>> s = StaticSeries(medium, lattice, alpha, r)   # doctest: +SKIP
    >>> s.extend(20 * np.pi); s.extend(40 * np.pi)     # doctest: +SKIP
    """

    def __init__(self, medium, lattice, alpha, r):
        self.medium = medium
        self.lattice = lattice
        self.alpha, self.r = _prepare(lattice, alpha, r, np.zeros_like(np.asarray(r, float)), medium)
        d = lattice.dimension
        self.radius = 0.0
        self.acc = SpectralAccumulator(self.r.shape[:-1] + (d, d))

    def extend(self, q_max: float) -> np.ndarray:
        if q_max < self.radius:
            raise ValueError("series can only be extended outward")
        k, _ = sorted_shell(self.lattice, self.alpha, q_max)
        norms = np.linalg.norm(k, axis=1)
        k = k[norms > self.radius] if self.radius > 0 else k
        _evaluate(_static_coefficients(self.medium, k, self.lattice.volume), k, self.r, self.acc)
        self.radius = q_max
        return self.acc.value

    @property
    def n_terms(self) -> int:
        return self.acc.count


def kelvin_2d(medium: BackgroundMedium, r) -> np.ndarray:
    """Free space plane strain Kelvin tensor ``Gamma(r)`` for ``mu Lap + (lam+mu) grad div``.

    ``Gamma = (A/2pi) log|r| I - (B/2pi) r r^T / |r|^2`` with
    ``A = (1/mu + 1/(lam+2mu))/2`` and ``B = (1/mu - 1/(lam+2mu))/2``.
    """
    r = np.asarray(r, dtype=float)
    a, b = kelvin_constants(medium)
    rho2 = np.einsum("...i,...i->...", r, r)
    out = (a / (4 * np.pi)) * np.log(rho2)[..., None, None] * np.eye(2)
    out = out - (b / (2 * np.pi)) * r[..., :, None] * r[..., None, :] / rho2[..., None, None]
    return out


def kelvin_constants(medium: BackgroundMedium):
    p = medium.lam + 2 * medium.mu
    return 0.5 * (1 / medium.mu + 1 / p), 0.5 * (1 / medium.mu - 1 / p)
