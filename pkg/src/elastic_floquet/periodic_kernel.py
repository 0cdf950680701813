"""Smooth part of the static quasiperiodic Green's tensor in two dimensions.

The quasiperiodic tensor is written as ``G = Phi I / mu + c H`` with the
scalar lattice sum ``Phi = -(1/|Y|) sum e^{ik.r}/|k|^2`` and the tensor sum
``H = (1/|Y|) sum k k^T e^{ik.r}/|k|^4``. Both are split with a Gaussian
screening parameter ``E`` into a rapidly convergent reciprocal sum and a
rapidly convergent image sum; the self image is evaluated with the free-space
Kelvin tensor removed, which leaves a function that is smooth at ``r = 0``.
"""
from __future__ import annotations

import numpy as np
from scipy.special import exp1

from .green import BackgroundMedium, kelvin_2d, sorted_shell
from .lattice import Lattice, check_quasimomentum

EULER_GAMMA = np.euler_gamma
_DIGITS = np.log(1e16)


def entire_exponential_integral(z):
    """``Ein(z) = E1(z) + log z + gamma``, entire and accurate near zero."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z < 1.0
    zs = z[small]
    # alternating series, 25 terms suffice for z < 1
    acc = np.zeros_like(zs)
    term = np.ones_like(zs)
    for n in range(1, 26):
        term = term * zs / n
        acc += (-1) ** (n + 1) * term / n
    out[small] = acc
    zl = z[~small]
    out[~small] = exp1(zl) + np.log(zl) + EULER_GAMMA
    return out


class PeriodicRemainder:
    """Evaluate ``G^{alpha} - Gamma`` (quasiperiodic minus Kelvin) on point sets.

    Parameters
    ----------
    medium : BackgroundMedium
    lattice : Lattice
        Two dimensional lattice.
    alpha : array_like
        Nonzero quasimomentum.
    q_max : float
        Reciprocal truncation; the screening is chosen so the neglected
        reciprocal terms are below double precision.
    span : float
        Largest ``|x - y|`` that will be evaluated; fixes the image set.
    screening : float, optional
        Override the splitting parameter ``E``.
    """

    def __init__(self, medium: BackgroundMedium, lattice: Lattice, alpha, q_max: float,
                 span: float = None, screening: float = None):
        if lattice.dimension != 2:
            raise ValueError("periodic remainder is implemented for d = 2")
        self.medium = medium
        self.lattice = lattice
        self.alpha = check_quasimomentum(alpha, lattice)
        self.q_max = float(q_max)
        self.E = screening if screening is not None else self.q_max / (2 * np.sqrt(_DIGITS))
        sigma = 1.0 / (4 * self.E ** 2)
        k, _ = sorted_shell(lattice, self.alpha, q_max)
        k2 = np.einsum("mi,mi->m", k, k)
        g = np.exp(-k2 * sigma)
        vol = lattice.volume
        phi = -g / k2 / vol
        h = g * (1 + k2 * sigma) / (k2 * k2) / vol
        c = medium.coupling
        self.k = k
        # coefficients of the 11, 12, 22 components
        self.fourier_coeffs = np.stack([
            phi / medium.mu + c * h * k[:, 0] ** 2,
            c * h * k[:, 0] * k[:, 1],
            phi / medium.mu + c * h * k[:, 1] ** 2,
        ])
        if span is None:
            span = np.linalg.norm(lattice.basis, axis=1).sum()
        reach = span + np.sqrt(_DIGITS) / self.E * 1.01
        bound = int(np.ceil(reach / np.min(np.linalg.svd(lattice.basis, compute_uv=False)))) + 1
        n = np.arange(-bound, bound + 1)
        grid = np.stack(np.meshgrid(n, n, indexing="ij"), -1).reshape(-1, 2)
        ell = grid @ lattice.basis
        keep = np.linalg.norm(ell, axis=1) <= reach
        keep &= np.any(grid != 0, axis=1)
        self.images = ell[keep]
        self.image_phases = np.exp(1j * self.images @ self.alpha)
        self.span = span

    # --- reciprocal part -------------------------------------------------
    def _fourier(self, x, y):
        ex = np.exp(1j * (x @ self.k.T))
        ey = ex if y is x else np.exp(1j * (y @ self.k.T))
        eyh = ey.conj().T
        out = np.empty((x.shape[0], y.shape[0], 2, 2), dtype=complex)
        c11, c12, c22 = self.fourier_coeffs
        out[:, :, 0, 0] = (ex * c11) @ eyh
        out[:, :, 0, 1] = (ex * c12) @ eyh
        out[:, :, 1, 0] = out[:, :, 0, 1]
        out[:, :, 1, 1] = (ex * c22) @ eyh
        return out

    # --- image part --------------------------------------------------------
    def _screened(self, r, regular):
        """Screened real space tensor for separations ``r``; Kelvin removed if ``regular``."""
        E2 = self.E ** 2
        rho2 = np.einsum("...i,...i->...", r, r)
        z = E2 * rho2
        mu, c = self.medium.mu, self.medium.coupling
        eye = np.eye(2)
        outer = r[..., :, None] * r[..., None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            if regular:
                log_part = entire_exponential_integral(z) - EULER_GAMMA - 2 * np.log(self.E)
                frac = np.where(rho2 > 0, -np.expm1(-z) / np.where(rho2 > 0, rho2, 1.0), 0.0)
                phi = -log_part / (4 * np.pi)
                h_iso = log_part / (8 * np.pi)
                h_out = frac / (4 * np.pi)
            else:
                e1 = exp1(z)
                phi = -e1 / (4 * np.pi)
                h_iso = e1 / (8 * np.pi)
                h_out = -np.exp(-z) / rho2 / (4 * np.pi)
        return ((phi / mu + c * h_iso)[..., None, None] * eye
                + c * h_out[..., None, None] * outer)

    def _images(self, r):
        out = self._screened(r, regular=True).astype(complex)
        for ell, ph in zip(self.images, self.image_phases):
            out += ph * self._screened(r - ell, regular=False)
        return out

    def pairwise(self, x, y=None) -> np.ndarray:
        """Remainder tensors for all pairs, shape ``(len(x), len(y), 2, 2)``."""
        x = np.asarray(x, dtype=float)
        y = x if y is None else np.asarray(y, dtype=float)
        r = x[:, None, :] - y[None, :, :]
        if np.max(np.linalg.norm(r, axis=-1), initial=0.0) > self.span * (1 + 1e-12):
            raise ValueError("separation exceeds the span the image set was built for")
        return self._fourier(x, y) + self._images(r)

    def __call__(self, r) -> np.ndarray:
        """Remainder at separations ``r`` of shape ``(..., 2)``."""
        r = np.asarray(r, dtype=float)
        flat = r.reshape(-1, 2)
        vals = self.pairwise(flat, np.zeros((1, 2)))[:, 0]
        return vals.reshape(r.shape[:-1] + (2, 2))

    def full(self, r) -> np.ndarray:
        """Quasiperiodic Green's tensor ``Gamma + remainder`` at nonzero separations."""
        return kelvin_2d(self.medium, r) + self(r)
