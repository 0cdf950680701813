"""Time periodic density modulation and the reduced ODE system."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .capacitance import CapacitanceTensor, block_scaling
from .errors import AssumptionViolationError

DEFAULT_MAX_HARMONIC = 32


@dataclass
class ModulationProfile:
    """Finite Fourier series ``xi_{is}(t) = sum_m xi_{is}^{(m)} e^{i m Omega t}``.

    Parameters
    ----------
    coefficients : ndarray, shape (N, d, 2M + 1)
        ``coefficients[i, s, m + M]`` is the harmonic ``m`` of resonator ``i``,
        direction ``s``.
    omega : float
        Modulation frequency ``Omega > 0``.
    eta : float
        Amplitude; the modulated inverse density factor is ``1 + eta xi(t)``.
    real : bool
        Require ``xi^{(-m)} = conj(xi^{(m)})``.
    """

    coefficients: np.ndarray
    omega: float
    eta: float = 0.0
    real: bool = False
    max_harmonic_cap: int = DEFAULT_MAX_HARMONIC
    period: float = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.ndim != 3 or c.shape[2] % 2 == 0:
            raise ValueError("coefficients must have shape (N, d, 2M+1)")
        if not self.omega > 0:
            raise ValueError("modulation frequency must be positive")
        if self.eta < 0:
            raise ValueError("modulation amplitude must be nonnegative")
        M = c.shape[2] // 2
        if M > self.max_harmonic_cap:
            raise ValueError(f"harmonic order {M} exceeds the cap {self.max_harmonic_cap}")
        if np.any(c[:, :, M] != 0):
            raise AssumptionViolationError("modulation has a nonzero mean (zero-frequency) component")
        if self.real and not np.allclose(c[:, :, ::-1], c.conj(), rtol=0, atol=1e-14):
            raise AssumptionViolationError("real modulation requires xi^(-m) = conj(xi^(m))")
        self.coefficients = c
        self.period = 2 * np.pi / self.omega

    @property
    def max_harmonic(self) -> int:
        return self.coefficients.shape[2] // 2

    @property
    def harmonics(self) -> np.ndarray:
        M = self.max_harmonic
        return np.arange(-M, M + 1)

    def coefficient(self, m: int) -> np.ndarray:
        """Harmonic ``m`` for every (resonator, direction); zero outside the stored range."""
        M = self.max_harmonic
        if abs(m) > M:
            return np.zeros(self.coefficients.shape[:2], dtype=complex)
        return self.coefficients[:, :, m + M]

    def __call__(self, t) -> np.ndarray:
        """``xi(t)`` with shape ``(N, d)`` (or ``(..., N, d)`` for array ``t``)."""
        t = np.asarray(t, dtype=float)
        ph = np.exp(1j * self.omega * t[..., None] * self.harmonics)
        return np.einsum("...m,ism->...is", ph, self.coefficients)

    @classmethod
    def from_entries(cls, entries, n_resonators, dimension, omega, eta=0.0, real=False,
                     max_harmonic_cap=DEFAULT_MAX_HARMONIC):
        """Build from ``(resonator, direction, m, re, im)`` tuples."""
        entries = list(entries)
        M = max([abs(int(e[2])) for e in entries], default=0)
        M = max(M, 1)
        c = np.zeros((n_resonators, dimension, 2 * M + 1), dtype=complex)
        for i, s, m, re, im in entries:
            c[int(i), int(s), int(m) + M] += complex(re, im)
        return cls(c, omega, eta, real, max_harmonic_cap)

    @classmethod
    def zero(cls, n_resonators, dimension, omega):
        return cls(np.zeros((n_resonators, dimension, 3), dtype=complex), omega)


def assemble_B0(C: CapacitanceTensor, rho, volumes, epsilon: float) -> np.ndarray:
    """Static coupling matrix: block ``(i, j)`` is ``(eps/|D_i|) rho^{-1} C_ij``."""
    return epsilon * block_scaling(rho, volumes, C.dimension)[:, None] * C.matrix


def assemble_B1_coeffs(C: CapacitanceTensor, rho, volumes, epsilon: float,
                       profile: ModulationProfile) -> dict:
    """Harmonics of the first order coupling; row ``(i, s)`` is ``xi_{is}^{(m)}`` times that row of B0."""
    B0 = assemble_B0(C, rho, volumes, epsilon)
    if profile.coefficients.shape[:2] != (C.n_resonators, C.dimension):
        raise ValueError("modulation profile does not match the capacitance tensor shape")
    if np.any(profile.coefficient(0) != 0):
        raise AssumptionViolationError("modulation has a nonzero mean (zero-frequency) component")
    return {int(m): profile.coefficient(m).ravel()[:, None] * B0 for m in profile.harmonics}


@dataclass
class SystemAssembly:
    """Second and first order forms of ``u'' = B(t) u`` with ``B = B0 + eta sum B1^(m) e^{imOt}``."""

    B0: np.ndarray
    B1: dict
    omega: float
    eta: float = 0.0
    A0: np.ndarray = field(init=False, repr=False)
    A1: dict = field(init=False, repr=False)

    def __post_init__(self):
        n = self.B0.shape[0]
        z = np.zeros((n, n), dtype=complex)
        eye = np.eye(n)
        self.A0 = np.block([[z, eye], [self.B0, z]])
        self.A1 = {m: np.block([[z, z], [B, z]]) for m, B in self.B1.items()}
        ms = sorted(self.B1)
        self._harmonics = np.array(ms)
        self._stack = np.array([self.A1[m] for m in ms]) if ms else np.zeros((0, 2 * n, 2 * n))

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega

    @property
    def size(self) -> int:
        return self.A0.shape[0]

    def B(self, t: float, eta: float = None) -> np.ndarray:
        eta = self.eta if eta is None else eta
        out = self.B0.astype(complex)
        for m, Bm in self.B1.items():
            out = out + eta * Bm * np.exp(1j * m * self.omega * t)
        return out

    def A(self, t: float, eta: float = None) -> np.ndarray:
        eta = self.eta if eta is None else eta
        if len(self._harmonics) == 0 or eta == 0:
            return self.A0.astype(complex)
        ph = np.exp(1j * self._harmonics * self.omega * t)
        return self.A0 + eta * np.tensordot(ph, self._stack, axes=1)

    def with_eta(self, eta: float) -> "SystemAssembly":
        return SystemAssembly(self.B0, self.B1, self.omega, eta)

    def scaled_modulation(self, factor) -> "SystemAssembly":
        return SystemAssembly(self.B0, {m: factor * B for m, B in self.B1.items()}, self.omega,
                              self.eta)


def lift_first_order(B0, B1: dict, omega: float, eta: float = 0.0) -> SystemAssembly:
    """First order split ``A0 = [[0, I], [B0, 0]]`` and ``A1^(m) = [[0, 0], [B1^(m), 0]]``."""
    B0 = np.asarray(B0, dtype=complex)
    if B0.ndim != 2 or B0.shape[0] != B0.shape[1]:
        raise ValueError("B0 must be square")
    for m, B in B1.items():
        if np.shape(B) != B0.shape:
            raise ValueError(f"harmonic {m} has the wrong shape")
    return SystemAssembly(B0, {int(m): np.asarray(B, dtype=complex) for m, B in B1.items()},
                          omega, eta)


def assemble_system(C, rho, volumes, epsilon, profile: ModulationProfile) -> SystemAssembly:
    """Convenience wrapper: capacitance plus modulation to the first order system."""
    B0 = assemble_B0(C, rho, volumes, epsilon)
    B1 = assemble_B1_coeffs(C, rho, volumes, epsilon, profile)
    return lift_first_order(B0, B1, profile.omega, profile.eta)


def modulated_B(C, rho, volumes, epsilon, profile, t) -> np.ndarray:
    """``B(t)`` built directly from the modulated inverse density ``1 + eta xi(t)``."""
    inv = (1.0 + profile.eta * profile(t)).ravel()
    return epsilon * (inv * block_scaling(rho, volumes, C.dimension))[:, None] * C.matrix
