"""Monodromy matrices, Floquet exponents and first order truncated exponents."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import linear_sum_assignment

from .capacitance import canonical_sqrt
from .errors import AssumptionViolationError, NumericalError, SingularExponentError, StiffnessError
from .modulation import SystemAssembly

DEGENERACY_TOL = 1e-12
DEFECT_THRESHOLD = 1e-8
# local error target relative to the requested global tolerance
LOCAL_SAFETY = 1e-2


@dataclass
class Monodromy:
    X: np.ndarray
    T: float
    n_steps: int
    n_evals: int
    tol: float
    liouville_residual: float


class _StepBudgetExceeded(Exception):
    pass


def integrate_monodromy(A, T: float, tol: float = 1e-10, max_steps: int = 1_000_000,
                        method: str = "DOP853") -> Monodromy:
    """Fundamental solution of ``X' = A(t) X``, ``X(0) = I`` at ``t = T``.

    Parameters
    ----------
    A : callable
        ``A(t)`` returns an ``(n, n)`` complex array; or a constant array.
    T : float
        Period.
    tol : float
        Relative and absolute local error tolerance of the embedded pair.
    max_steps : int
        Abort when more steps than this would be needed.

    Raises
    ------
    StiffnessError
        When the step size underflows or the step budget is exhausted.
    """
    if not T > 0:
        raise ValueError("period must be positive")
    if callable(A):
        A0 = np.asarray(A(0.0), dtype=complex)
        func = A
    else:
        A0 = np.asarray(A, dtype=complex)
        func = lambda t: A0  # noqa: E731
    n = A0.shape[0]
    budget = 20 * max_steps
    calls = [0]

    def rhs(t, y):
        calls[0] += 1
        if calls[0] > budget:
            raise _StepBudgetExceeded
        return (np.asarray(func(t), dtype=complex) @ y.reshape(n, n)).ravel()

    local = max(LOCAL_SAFETY * tol, 3e-14)
    try:
        sol = solve_ivp(rhs, (0.0, T), np.eye(n, dtype=complex).ravel(), method=method,
                        rtol=local, atol=local)
    except _StepBudgetExceeded:
        raise StiffnessError(f"step budget of {max_steps} steps exhausted") from None
    if sol.status != 0:
        raise StiffnessError(f"integration failed: {sol.message}")
    X = sol.y[:, -1].reshape(n, n)
    steps = len(sol.t) - 1
    res = abs(np.linalg.det(X) - np.exp(_trace_integral(func, T, n)))
    return Monodromy(X, T, steps, sol.nfev, tol, float(res))


def _trace_integral(func, T, n, samples=64):
    # Gauss-Legendre on the trace; exact zero for block companion systems
    x, w = np.polynomial.legendre.leggauss(samples)
    t = 0.5 * T * (x + 1)
    tr = np.array([np.trace(np.asarray(func(s), dtype=complex)) for s in t])
    return 0.5 * T * np.dot(w, tr)


def fold_frequency(omega_a, Omega: float):
    """Split ``omega_a = omega_0 + m Omega`` with ``omega_0`` in ``(-Omega/2, Omega/2]``.

    For complex input the real part is folded and the imaginary part carried along.

    Returns
    -------
    omega_0 : float or complex
    m : int
    """
    if not Omega > 0:
        raise ValueError("Omega must be positive")
    re = float(np.real(omega_a))
    m = int(np.ceil(re / Omega - 0.5))
    shift = m * Omega
    folded = re - shift
    # guard against rounding pushing the representative out of the strip
    if folded <= -Omega / 2:
        m -= 1
        folded = re - m * Omega
    elif folded > Omega / 2:
        m += 1
        folded = re - m * Omega
    if np.iscomplexobj(omega_a) or isinstance(omega_a, complex):
        return complex(folded, np.imag(omega_a)), m
    return folded, m


@dataclass
class FloquetExponents:
    exponents: np.ndarray
    multipliers: np.ndarray
    vectors: np.ndarray
    T: float

    @property
    def quasi_frequencies(self) -> np.ndarray:
        return self.exponents / 1j

    @property
    def Omega(self) -> float:
        return 2 * np.pi / self.T


def principal_exponents(multipliers, T):
    """``log(mu)/T`` with imaginary parts in ``(-pi/T, pi/T]``."""
    mu = np.asarray(multipliers, dtype=complex)
    if np.any(mu == 0):
        raise NumericalError("zero characteristic multiplier; the integration has failed")
    lg = np.log(mu)
    lg = np.where(lg.imag <= -np.pi, lg + 2j * np.pi, lg)
    return lg / T


def floquet_exponents(monodromy: Monodromy) -> FloquetExponents:
    """Floquet exponents from the eigenvalues of the monodromy matrix, sorted by (Im, Re)."""
    mu, vecs = np.linalg.eig(monodromy.X)
    phi = principal_exponents(mu, monodromy.T)
    order = np.lexsort((phi.real, phi.imag))
    return FloquetExponents(phi[order], mu[order], vecs[:, order], monodromy.T)


@dataclass
class TruncatedExponent:
    """First order truncation ``F0 + eta F1`` of the Floquet exponent in the eigenbasis of ``A0``."""

    F0: np.ndarray
    F1: np.ndarray
    folding: np.ndarray
    V: np.ndarray
    eigenvalues: np.ndarray
    S: np.ndarray
    sqrt_eigenvalues: np.ndarray
    transformed: dict = field(repr=False)
    degenerate_pairs: list = field(default_factory=list)

    def matrix(self, eta: float) -> np.ndarray:
        return self.F0 + eta * self.F1

    def coupling(self, k: int, l: int) -> complex:
        """``(V^{-1} A1 V)^{(n_k - n_l)}_{kl}`` regardless of degeneracy."""
        m = int(self.folding[k] - self.folding[l])
        W = self.transformed.get(m)
        return 0j if W is None else complex(W[k, l])


def _eigenbasis(B0):
    lam2, S = np.linalg.eig(B0)
    order = np.lexsort((lam2.imag, lam2.real))
    lam2, S = lam2[order], S[:, order]
    if np.any(lam2 == 0) or np.min(np.abs(lam2)) <= 1e-14 * max(np.max(np.abs(lam2)), 1e-300):
        raise SingularExponentError("B0 has a zero eigenvalue; its square root matrix is singular")
    if np.linalg.cond(S) > 1e12:
        raise AssumptionViolationError("B0 is not diagonalizable to working precision")
    return lam2, S


def truncated_exponents(assembly: SystemAssembly, degeneracy_tol: float = DEGENERACY_TOL,
                        eigenbasis=None) -> TruncatedExponent:
    """Folded diagonal ``F0`` and resonant first order coupling ``F1``.

    Parameters
    ----------
    assembly : SystemAssembly
    degeneracy_tol : float
        Absolute tolerance for ``(F0)_ii == (F0)_jj``.
    eigenbasis : tuple, optional
        ``(lam2, S)`` to use instead of a fresh eigendecomposition of ``B0``.
    """
    B0 = assembly.B0
    lam2, S = eigenbasis if eigenbasis is not None else _eigenbasis(B0)
    lam = canonical_sqrt(lam2)
    if np.any(lam == 0):
        raise SingularExponentError("zero square root eigenvalue")
    n = len(lam)
    Phi = np.diag(lam)
    V = np.block([[S, S], [S @ Phi, -S @ Phi]])
    mu = np.concatenate([lam, -lam])
    Omega = assembly.omega
    folding = np.array([fold_frequency(float(v.imag), Omega)[1] for v in mu])
    f0 = mu - 1j * Omega * folding
    Sinv = np.linalg.inv(S)
    transformed = {}
    for m, B1 in assembly.B1.items():
        P = (Sinv @ B1 @ S) / lam[:, None]
        transformed[m] = 0.5 * np.block([[P, P], [-P, -P]])
    F1 = np.zeros((2 * n, 2 * n), dtype=complex)
    pairs = []
    for k in range(2 * n):
        for l in range(2 * n):
            if abs(f0[k] - f0[l]) < degeneracy_tol:
                W = transformed.get(int(folding[k] - folding[l]))
                if W is not None:
                    F1[k, l] = W[k, l]
                if k < l:
                    pairs.append((k, l))
    return TruncatedExponent(np.diag(f0), F1, folding, V, lam2, S, lam, transformed, pairs)


def effective_pair_eigenvalues(f0, a, d, b, c, eta):
    """First order eigenvalues of a degenerate pair.

    ``f0 + eta ((a + d)/2 +- sqrt(((a - d)/2)^2 + b c))`` where ``a, d`` are the
    zero frequency diagonal couplings and ``b, c`` the two off-diagonal ones.
    """
    root = np.sqrt(complex(((a - d) / 2) ** 2 + b * c))
    mid = (a + d) / 2
    return f0 + eta * (mid + root), f0 + eta * (mid - root)


@dataclass
class DiagonalizabilityReport:
    eigenvalues: np.ndarray
    eigengap: float
    condition: float
    defective: bool
    clusters: list  # (mean eigenvalue, algebraic, geometric, smallest singular value)


def diagonalizability_report(F, threshold: float = DEFECT_THRESHOLD,
                             cluster_tol: float = 1e-6) -> DiagonalizabilityReport:
    """Eigengap, eigenvector conditioning and a rank test for defective eigenvalues.

    Eigenvalues closer than ``cluster_tol * ||F||`` are grouped. For each group
    of size ``k`` around the mean ``lam``, the geometric multiplicity is the
    number of singular values of ``F - lam I`` below ``threshold * ||F||``
    (or the spread of the group, if that is larger).
    """
    F = np.asarray(F, dtype=complex)
    n = F.shape[0]
    w, vecs = np.linalg.eig(F)
    norm = max(np.linalg.norm(F, 2), np.finfo(float).tiny)
    if n > 1:
        gaps = np.abs(w[:, None] - w[None, :])
        gap = float(np.min(gaps[~np.eye(n, dtype=bool)]))
    else:
        gaps = np.zeros((1, 1))
        gap = np.inf
    cond = float(np.linalg.cond(vecs))
    # single linkage clustering
    label = np.arange(n)
    for i in range(n):
        for j in range(i + 1, n):
            if gaps[i, j] <= cluster_tol * norm:
                label[label == label[j]] = label[i]
    clusters = []
    defective = False
    for lab in np.unique(label):
        members = w[label == lab]
        if len(members) < 2:
            continue
        centre = members.mean()
        spread = float(np.max(np.abs(members - centre)))
        sv = np.linalg.svd(F - centre * np.eye(n), compute_uv=False)
        cut = max(threshold * norm, 10 * spread)
        geometric = int(np.sum(sv < cut))
        clusters.append((complex(centre), len(members), geometric, float(sv[-1])))
        if geometric < len(members):
            defective = True
    return DiagonalizabilityReport(w, gap, cond, defective, clusters)


def match_eigenvalues(reference, values):
    """Permutation of ``values`` minimising the total distance to ``reference``."""
    reference = np.asarray(reference)
    values = np.asarray(values)
    cost = np.abs(reference[:, None] - values[None, :])
    _, cols = linear_sum_assignment(cost)
    return values[cols]


def monodromy_of_assembly(assembly: SystemAssembly, eta: float = None,
                          tol: float = 1e-10) -> Monodromy:
    eta = assembly.eta if eta is None else eta
    return integrate_monodromy(lambda t: assembly.A(t, eta), assembly.period, tol)
