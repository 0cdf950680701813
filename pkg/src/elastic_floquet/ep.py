"""First order asymptotic exceptional points of a single resonator in three dimensions.

The static coupling of one resonator is ``B0 = (eps/|D|) C`` with the Hermitian
capacitance block ``C``; only the first direction is modulated,
``B1(t) = diag(xi_1(t), 0, 0) B0``. A pair of square root eigenvalues that are
congruent modulo ``i Omega`` becomes a Jordan block of ``F0 + eta F1`` when
exactly one of the two resonant couplings between them vanishes.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .capacitance import CapacitanceTensor
from .errors import (AssumptionViolationError, DegenerateCaseError, ExcludedCaseError,
                     ModulationInsufficientError, NoEPOnBranchError, NotAnEigenvalueError)
from .floquet import (DEFECT_THRESHOLD, diagonalizability_report, effective_pair_eigenvalues,
                      truncated_exponents)
from .modulation import ModulationProfile, assemble_B0, assemble_B1_coeffs, lift_first_order

MEMBERSHIP_TOL = 1e-10
VANISH_TOL = 1e-12
PARTNER_TOL = 1e-10
CONGRUENCE_TOL = 1e-8
REAL_PART_TOL = 1e-10
DEFAULT_ETA = 1e-2


@dataclass(frozen=True)
class EPParameters:
    """Capacitance entries, contrast, volume and the harmonics of ``xi_1``.

    ``c22`` and ``c33`` default to ``c11``.
    """

    c11: float
    c12: complex
    c13: complex
    c23: complex
    epsilon: float = 1.0
    volume: float = 1.0
    c22: float = None
    c33: float = None
    xi1: tuple = ()          # ((m, coefficient), ...)

    def __post_init__(self):
        if self.c22 is None:
            object.__setattr__(self, "c22", self.c11)
        if self.c33 is None:
            object.__setattr__(self, "c33", self.c11)
        for name in ("c11", "c22", "c33"):
            object.__setattr__(self, name, float(np.real(getattr(self, name))))
        for name in ("c12", "c13", "c23"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        if not self.epsilon > 0 or not self.volume > 0:
            raise ValueError("contrast and volume must be positive")
        xi = tuple(sorted((int(m), complex(v)) for m, v in dict(self.xi1).items()))
        if any(m == 0 and v != 0 for m, v in xi):
            raise AssumptionViolationError("xi_1 must have zero mean")
        object.__setattr__(self, "xi1", xi)

    @property
    def scale(self) -> float:
        """``eps / |D|``."""
        return self.epsilon / self.volume

    def with_(self, **kw) -> "EPParameters":
        return replace(self, **kw)

    def with_modulation(self, xi1: dict) -> "EPParameters":
        return replace(self, xi1=tuple(dict(xi1).items()))

    def capacitance(self) -> np.ndarray:
        c12, c13, c23 = self.c12, self.c13, self.c23
        return np.array([[self.c11, c12, c13],
                         [np.conj(c12), self.c22, c23],
                         [np.conj(c13), np.conj(c23), self.c33]], dtype=complex)

    def tensor(self) -> CapacitanceTensor:
        return CapacitanceTensor(self.capacitance(), 3)

    def B0(self) -> np.ndarray:
        return assemble_B0(self.tensor(), np.ones(3), [self.volume], self.epsilon)

    def profile(self, Omega: float) -> ModulationProfile:
        harmonics = dict(self.xi1)
        M = max([abs(m) for m in harmonics] + [1])
        coeff = np.zeros((1, 3, 2 * M + 1), dtype=complex)
        for m, v in harmonics.items():
            coeff[0, 0, m + M] = v
        return ModulationProfile(coeff, Omega, max_harmonic_cap=max(M, 32))

    def assembly(self, Omega: float):
        prof = self.profile(Omega)
        C = self.tensor()
        B0 = assemble_B0(C, np.ones(3), [self.volume], self.epsilon)
        B1 = assemble_B1_coeffs(C, np.ones(3), [self.volume], self.epsilon, prof)
        return lift_first_order(B0, B1, Omega)

    def to_dict(self) -> dict:
        out = {}
        for k, v in asdict(self).items():
            if isinstance(v, complex):
                out[k] = [v.real, v.imag]
            elif k == "xi1":
                out[k] = [[m, c.real, c.imag] for m, c in v]
            else:
                out[k] = v
        return out

    @classmethod
    def from_dict(cls, d) -> "EPParameters":
        kw = dict(d)
        for k in ("c12", "c13", "c23"):
            if isinstance(kw.get(k), (list, tuple)):
                kw[k] = complex(*kw[k])
        if "xi1" in kw:
            kw["xi1"] = tuple((int(m), complex(re, im)) for m, re, im in kw["xi1"])
        return cls(**kw)


# ----------------------------------------------------------------------------
# polynomial building blocks

def f_of(x, p: EPParameters):
    """Linear companion ``c13 |D| x + eps (c12 c23 - c11 c13)``."""
    return p.c13 * p.volume * x + p.epsilon * (p.c12 * p.c23 - p.c11 * p.c13)


def g_of(x, p: EPParameters):
    """Quadratic companion whose roots silence the lower-left transformed coupling."""
    c12b = np.conj(p.c12)
    e, V = p.epsilon, p.volume
    return (p.c23 * V ** 2 * x ** 2 + (-c12b * p.c13 - 2 * p.c11 * p.c23) * V * e * x
            + e ** 2 * (p.c11 ** 2 * p.c23 + p.c11 * c12b * p.c13
                        - p.c23 * (abs(p.c13) ** 2 + abs(p.c23) ** 2)))


def _g_magnitude(x, p):
    c12b = np.conj(p.c12)
    e, V = p.epsilon, p.volume
    return (abs(p.c23) * V ** 2 * abs(x) ** 2 + abs(-c12b * p.c13 - 2 * p.c11 * p.c23) * V * e * abs(x)
            + e ** 2 * (p.c11 ** 2 * abs(p.c23) + abs(p.c11 * c12b * p.c13)
                        + abs(p.c23) * (abs(p.c13) ** 2 + abs(p.c23) ** 2)))


def _f_magnitude(x, p):
    return abs(p.c13) * p.volume * abs(x) + p.epsilon * (abs(p.c12 * p.c23) + abs(p.c11 * p.c13))


def offdiag_mass(p: EPParameters) -> float:
    return abs(p.c12) ** 2 + abs(p.c13) ** 2 + abs(p.c23) ** 2


def triple_product(p: EPParameters) -> float:
    """``c12 conj(c13) c23 + conj(c12) c13 conj(c23)`` (real)."""
    v = p.c12 * np.conj(p.c13) * p.c23
    return 2 * v.real


def det_B0(p: EPParameters) -> float:
    s = p.scale
    return s ** 3 * (p.c11 * p.c22 * p.c33 - p.c11 * abs(p.c23) ** 2 - p.c22 * abs(p.c13) ** 2
                     - p.c33 * abs(p.c12) ** 2 + triple_product(p))


def characteristic_residual(x, p: EPParameters):
    """``det(B0 - x I)`` through the explicit cubic in ``x``."""
    s = p.scale
    tr = p.c11 + p.c22 + p.c33
    pair = p.c11 * p.c22 + p.c11 * p.c33 + p.c22 * p.c33 - offdiag_mass(p)
    return -x ** 3 + s * tr * x ** 2 - s ** 2 * pair * x + det_B0(p)


def _cubic_scale(x, p):
    s = p.scale
    cmax = max(abs(p.c11), abs(p.c22), abs(p.c33), abs(p.c12), abs(p.c13), abs(p.c23))
    return max(abs(x), s * cmax) ** 3


def discriminant(p: EPParameters) -> float:
    """Sign-carrying discriminant; negative means three distinct real squared eigenvalues."""
    return p.scale ** 6 * (triple_product(p) ** 2 / 4 - offdiag_mass(p) ** 3 / 27)


def eigenvector_formula(x, p: EPParameters) -> np.ndarray:
    """Closed form eigenvector of ``B0`` for the squared eigenvalue ``x``."""
    e, V = p.epsilon, p.volume
    return np.array([
        e / V ** 2 * (-p.c13 * p.c22 * e + p.c12 * p.c23 * e + p.c13 * V * x),
        e / V ** 2 * (-p.c11 * p.c23 * e + p.c23 * V * x + np.conj(p.c12) * p.c13 * e),
        ((p.c11 * e - V * x) * (p.c22 * e - V * x) - abs(p.c12) ** 2 * e ** 2) / V ** 2,
    ], dtype=complex)


def transformed_entries_formula(x1, x2, x3, p: EPParameters, xi=1.0):
    """Closed forms of ``(S^{-1} B1 S)_{12}`` and ``_{21}`` for the closed form eigenbasis."""
    e, V = p.epsilon, p.volume
    k = p.c12 * p.c23 ** 2 - np.conj(p.c12) * p.c13 ** 2
    e12 = xi * x2 * f_of(x2, p) * g_of(x1, p) / (V ** 2 * e * (x1 - x2) * (x1 - x3) * k)
    # overall sign fixed against a direct similarity transform (x2 - x1, not x1 - x2)
    e21 = xi * x1 * f_of(x1, p) * g_of(x2, p) / (V ** 2 * e * (x2 - x1) * (x2 - x3) * k)
    return e12, e21


def deflate_cubic(known, total, product):
    """Remaining roots of a monic cubic with root sum ``total`` and product ``product``."""
    if known == 0:
        raise ZeroDivisionError("cannot deflate at a zero root")
    b = -(total - known)
    c = product / known
    disc = np.sqrt(complex(b * b - 4 * c))
    # stable quadratic roots
    q = -0.5 * (b + disc if (np.conj(b) * disc).real >= 0 else b - disc)
    r1 = q
    r2 = c / q if q != 0 else 0j
    return complex(r1), complex(r2)


def vieta_complete(known, p: EPParameters, tol: float = MEMBERSHIP_TOL):
    """The two squared eigenvalues accompanying ``known``.

    Raises
    ------
    ZeroDivisionError
        If ``known`` is zero.
    NotAnEigenvalueError
        If ``known`` does not satisfy the characteristic cubic.
    """
    if known == 0:
        raise ZeroDivisionError("known squared eigenvalue must be nonzero")
    res = abs(characteristic_residual(known, p)) / _cubic_scale(known, p)
    if res > tol:
        raise NotAnEigenvalueError(f"relative characteristic residual {res:.3e} exceeds {tol:.0e}")
    total = p.scale * (p.c11 + p.c22 + p.c33)
    return deflate_cubic(known, total, det_B0(p))


def complex_sqrt_branches(z):
    """Both square roots of ``z``; the first has the sign of ``Im z`` in its imaginary part."""
    z = complex(z)
    a, b = z.real, z.imag
    if a != 0 and b != 0:
        r = abs(z)
        # the smaller of the two radicands cancels; recover it from the product |b|/2
        if a > 0:
            re = np.sqrt((r + a) / 2)
            im = abs(b) / (2 * re)
        else:
            im = np.sqrt((r - a) / 2)
            re = abs(b) / (2 * im)
        w = complex(re, np.sign(b) * im)
    else:
        w = complex(np.sqrt(z))
    return w, -w


def pair_modulation_frequency(a, b, n):
    """Modulation frequency for a real root congruent with the conjugate pair ``a +- i b``."""
    return np.sqrt((np.hypot(a, b) - a) / 2) / n


def congruence_residual(l1, l2, Omega):
    """Real part mismatch and distance of ``Im(l1 - l2)/Omega`` to the nearest integer."""
    ratio = (l1 - l2).imag / Omega
    m = int(np.round(ratio))
    return abs(l1.real - l2.real), abs(ratio - m), m


# ----------------------------------------------------------------------------
# certificates

@dataclass
class Residual:
    name: str
    value: float
    tol: float
    relation: str  # "<" or ">"

    @property
    def passed(self) -> bool:
        v = self.value
        return bool(np.isfinite(v) and (v < self.tol if self.relation == "<" else v > self.tol))


@dataclass
class EPCertificate:
    params: EPParameters
    Omega: float
    n: int
    eta: float
    branch: tuple = None            # (lambda_1, lambda_2)
    pair: tuple = None              # indices in the A0 eigenbasis
    k_star: int = None
    residuals: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    defective: bool = False
    route: str = "certify"

    @property
    def valid(self) -> bool:
        return self.pair is not None and self.defective and all(r.passed for r in self.residuals)

    def failures(self):
        return [r.name for r in self.residuals if not r.passed]

    def to_dict(self) -> dict:
        def cplx(z):
            return None if z is None else [float(np.real(z)), float(np.imag(z))]
        return {
            "route": self.route,
            "parameters": self.params.to_dict(),
            "branch": None if self.branch is None else {"lambda_1": cplx(self.branch[0]),
                                                        "lambda_2": cplx(self.branch[1])},
            "Omega": self.Omega,
            "n": self.n,
            "eta": self.eta,
            "k_star": self.k_star,
            "pair": None if self.pair is None else list(map(int, self.pair)),
            "residuals": [{"name": r.name, "value": float(r.value), "tolerance": r.tol,
                           "relation": r.relation, "passed": r.passed} for r in self.residuals],
            "defective": bool(self.defective),
            "diagnostics": {k: (cplx(v) if isinstance(v, complex) else v)
                            for k, v in self.diagnostics.items()},
            "valid": bool(self.valid),
        }


def standing_residuals(p: EPParameters, eigenvalues=None) -> list:
    """Residuals of the structural constraints on the parameters."""
    cmax = max(abs(p.c11), abs(p.c12), abs(p.c13), abs(p.c23), 1e-300)
    s = p.scale
    out = [
        Residual("simplification c11=c22=c33", max(abs(p.c11 - p.c22), abs(p.c11 - p.c33)) / cmax,
                 1e-12, "<"),
        Residual("det(B0) nonzero", abs(det_B0(p)) / (s * cmax) ** 3, 1e-10, ">"),
        Residual("eigenmatrix factor nonzero",
                 abs(p.c12 * p.c23 ** 2 - np.conj(p.c12) * p.c13 ** 2) / cmax ** 3, 1e-10, ">"),
        Residual("discriminant negative", -discriminant(p) / (s * cmax) ** 6, 0.0, ">"),
        Residual("c12 nonzero", abs(p.c12) / cmax, 1e-10, ">"),
    ]
    if eigenvalues is None:
        eigenvalues = np.linalg.eigvals(p.B0())
    worst = np.inf
    for x in eigenvalues:
        rows = s * np.array([[p.c11 - x / s, p.c12, p.c13],
                             [np.conj(p.c12), p.c22 - x / s, p.c23]])
        sv = np.linalg.svd(rows, compute_uv=False)
        worst = min(worst, sv[-1] / max(sv[0], 1e-300))
    out.append(Residual("rows non-proportional", worst, 1e-10, ">"))
    return out


def certify(params: EPParameters, Omega: float, n: int = None, eta: float = DEFAULT_ETA,
            pair=None) -> EPCertificate:
    """Verify the EP conditions for a parameter set and modulation frequency.

    Condition (1): a pair of square root eigenvalues of ``B0`` congruent modulo
    ``i Omega``. Condition (2): exactly one of the two resonant couplings of the
    pair vanishes. The certificate additionally requires ``F0 + eta F1`` to be
    defective.

    Parameters
    ----------
    params : EPParameters
    Omega : float
    n : int, optional
        Expected ``|Im(lambda_1 - lambda_2)| / Omega``; recorded only.
    eta : float
    pair : tuple of int, optional
        Restrict to this pair of indices in the ``A0`` eigenbasis.
    """
    assembly = params.assembly(Omega)
    trunc = truncated_exponents(assembly)
    f0 = np.diag(trunc.F0)
    mu = np.concatenate([trunc.sqrt_eigenvalues, -trunc.sqrt_eigenvalues])
    cert = EPCertificate(params, Omega, n, eta)
    cert.residuals = standing_residuals(params, trunc.eigenvalues)
    candidates = [pair] if pair is not None else trunc.degenerate_pairs
    cert.diagnostics["degenerate_pairs"] = [list(map(int, q)) for q in trunc.degenerate_pairs]
    chosen, best = None, None
    for k, l in candidates:
        b, c = trunc.coupling(k, l), trunc.coupling(l, k)
        one = (abs(b) < VANISH_TOL) != (abs(c) < VANISH_TOL)
        partner_ok = max(abs(b), abs(c)) > PARTNER_TOL
        if one and partner_ok:
            chosen = (k, l)
            break
        if best is None:
            best = (k, l)
    chosen = chosen or best
    F = trunc.matrix(eta)
    report = diagonalizability_report(F)
    cert.defective = report.defective
    cert.diagnostics["eigenvector_condition"] = report.condition
    cert.diagnostics["clusters"] = [[c[0].real, c[0].imag, c[1], c[2], c[3]] for c in report.clusters]
    if chosen is None:
        cert.residuals.append(Residual("congruent pair exists", 0.0, 0.5, ">"))
        return cert
    k, l = chosen
    cert.pair = (k, l)
    cert.branch = (complex(mu[k]), complex(mu[l]))
    real_gap, int_gap, m = congruence_residual(mu[k], mu[l], Omega)
    cert.n = abs(m) if n is None else n
    b, c = trunc.coupling(k, l), trunc.coupling(l, k)
    n_idx = trunc.folding
    # the nonvanishing direction fixes the harmonic that must be present
    if abs(b) >= abs(c):
        cert.k_star = int(n_idx[k] - n_idx[l])
    else:
        cert.k_star = int(n_idx[l] - n_idx[k])
    vanishing, partner = (c, b) if abs(b) >= abs(c) else (b, c)
    lam = trunc.sqrt_eigenvalues
    i, j = k % len(lam), l % len(lam)
    Sinv = np.linalg.inv(trunc.S)
    xi = dict(params.xi1)
    raw = {}
    for (a, bb), mm in (((i, j), int(n_idx[k] - n_idx[l])), ((j, i), int(n_idx[l] - n_idx[k]))):
        B1 = assembly.B1.get(mm)
        raw[(a, bb)] = 0j if B1 is None else complex((Sinv @ B1 @ trunc.S)[a, bb])
    pe = effective_pair_eigenvalues(f0[k], trunc.F1[k, k], trunc.F1[l, l], b, c, eta)
    sv = np.linalg.svd(F - f0[k] * np.eye(F.shape[0]), compute_uv=False)
    norm = np.linalg.norm(F, 2)
    cert.residuals += [
        Residual("congruence real parts", real_gap, REAL_PART_TOL, "<"),
        Residual("congruence integer ratio", int_gap, CONGRUENCE_TOL, "<"),
        Residual("congruence |l1 - l2 - i m Omega|",
                 abs(mu[k] - mu[l] - 1j * m * Omega), CONGRUENCE_TOL, "<"),
        Residual("vanishing coupling", abs(vanishing), VANISH_TOL, "<"),
        Residual("partner coupling nonzero", abs(partner), PARTNER_TOL, ">"),
        Residual("required harmonic present", abs(xi.get(cert.k_star, 0j)), 0.0, ">"),
        Residual("pair eigengap", abs(pe[0] - pe[1]), 1e-12, "<"),
        Residual("rank deficiency of F - f0 I", sv[-1] / max(norm, 1e-300), DEFECT_THRESHOLD, "<"),
    ]
    cert.diagnostics.update({
        "coupling_kl": complex(b), "coupling_lk": complex(c),
        "transformed_ij": raw[(i, j)], "transformed_ji": raw[(j, i)],
        "folding_k": int(n_idx[k]), "folding_l": int(n_idx[l]),
        "f0": complex(f0[k]), "congruence_multiple": m,
    })
    return cert


# ----------------------------------------------------------------------------
# constructive recipes

def _branch_pick(x_primary, others, branch):
    """Square roots for a branch spec ``(s2, which, s1)``."""
    s2, which, s1 = branch
    w2 = complex_sqrt_branches(x_primary)[0 if s2 > 0 else 1]
    w1 = complex_sqrt_branches(others[which])[0 if s1 > 0 else 1]
    return w2, w1


def _finish(p, x_first, x_second, x_third, branch_roots, n, modulation, route, eta):
    lam_first, lam_second = branch_roots  # lam_first couples to lam_second
    if abs(lam_first.real - lam_second.real) > REAL_PART_TOL:
        raise NoEPOnBranchError(
            f"real parts differ by {abs(lam_first.real - lam_second.real):.3e} on this branch")
    Omega = abs((lam_first - lam_second).imag) / n
    if Omega == 0:
        raise NoEPOnBranchError("the two square roots coincide")
    assembly = p.with_modulation({1: 0.0}).assembly(Omega)
    trunc = truncated_exponents(assembly)
    mu = np.concatenate([trunc.sqrt_eigenvalues, -trunc.sqrt_eigenvalues])
    k = int(np.argmin(np.abs(mu - lam_first)))
    l = int(np.argmin(np.abs(mu - lam_second)))
    nk, nl = int(trunc.folding[k]), int(trunc.folding[l])
    # the nonvanishing coupling carries harmonic n_k - n_l (row of lam_first)
    k_star = nk - nl
    if modulation is None:
        modulation = {k_star: 0.5, -k_star: 0.5}
    if abs(dict(modulation).get(k_star, 0)) == 0:
        raise ModulationInsufficientError(f"xi_1 lacks the harmonic {k_star}")
    p = p.with_modulation(modulation)
    cert = certify(p, Omega, n, eta, pair=(min(k, l), max(k, l)))
    cert.route = route
    cert.k_star = k_star
    cert.diagnostics["squared_eigenvalues"] = [[complex(v).real, complex(v).imag]
                                               for v in (x_first, x_second, x_third)]
    return cert


def classify_case1_root(x2, others, tol=1e-12):
    """Route a Case 1 root to the real or complex configuration or to an excluded case."""
    scale = max(abs(x2), 1e-300)
    conj_pair = (abs(others[0].imag) > tol * scale and abs(others[0] - np.conj(others[1])) < 1e-9 * scale)
    if abs(x2.imag) <= tol * scale:
        if x2.real < 0 and conj_pair:
            raise ExcludedCaseError("negative real root with a conjugate pair cannot match real parts")
        return "real-conjugate" if conj_pair else "real-real"
    gamma2 = others[0] if abs(others[0].imag) < abs(others[1].imag) else others[1]
    if gamma2.real < 0:
        raise ExcludedCaseError("complex root with a negative real companion cannot match real parts")
    return "complex"


def case1_construct(p: EPParameters, branch=(1, 0, 1), n: int = 1, modulation=None,
                    eta: float = DEFAULT_ETA) -> EPCertificate:
    """EP from the linear companion root ``f(lambda_2^2) = 0``.

    Parameters
    ----------
    p : EPParameters
    branch : tuple
        ``(s2, which, s1)``: sign of the root of ``lambda_2^2``, which of the two
        remaining squared eigenvalues pairs with it, and the sign of its root.
    n : int
        Number of modulation periods separating the pair.
    modulation : dict, optional
        Harmonics of ``xi_1``; defaults to ``cos(k* Omega t)``.

    Raises
    ------
    NotAnEigenvalueError, DegenerateCaseError, ExcludedCaseError,
    NoEPOnBranchError, ModulationInsufficientError
    """
    if p.c13 == 0:
        raise ExcludedCaseError("the linear companion needs c13 != 0")
    x2 = p.epsilon * (p.c11 * p.c13 - p.c12 * p.c23) / (p.c13 * p.volume)
    if x2 == 0:
        raise ExcludedCaseError("the companion root vanishes")
    res = abs(characteristic_residual(x2, p)) / _cubic_scale(x2, p)
    if res > MEMBERSHIP_TOL:
        raise NotAnEigenvalueError(f"companion root is not an eigenvalue (residual {res:.3e})")
    gval = abs(g_of(x2, p)) / _g_magnitude(x2, p)
    if gval < MEMBERSHIP_TOL:
        raise DegenerateCaseError(
            f"g vanishes at the companion root (relative |g| = {gval:.3e}); both couplings of the "
            "pair vanish together")
    y2, z2 = vieta_complete(x2, p)
    kind = classify_case1_root(x2, (y2, z2))
    w2, w1 = _branch_pick(x2, (y2, z2), branch)
    # f(lambda_2^2) = 0 removes the (1,2) coupling; the (2,1) one carries harmonic n_2 - n_1
    cert = _finish(p, (y2, z2)[branch[1]], x2, (y2, z2)[1 - branch[1]], (w2, w1), n, modulation,
                   "case1", eta)
    cert.diagnostics["configuration"] = kind
    cert.diagnostics["relative |g(lambda_2^2)|"] = float(gval)
    if kind == "real-conjugate":
        lhs = (2 * p.c11 * p.c13 - 5 * p.c12 * p.c23) ** 2 / (4 * p.c13)
        rhs = (p.c11 ** 3 - p.c11 * offdiag_mass(p) + triple_product(p)) / (p.c11 * p.c13 - p.c12 * p.c23)
        cert.diagnostics["displayed real-part matching residual"] = float(abs(lhs - rhs))
    return cert


def zeta(p: EPParameters) -> complex:
    """Square root entering the quadratic companion roots (taken verbatim)."""
    c12b = np.conj(p.c12)
    return complex(np.sqrt(complex(c12b ** 2 * p.c13 ** 2 + 4 * abs(p.c13) ** 2 * p.c23 ** 2
                                   + 4 * abs(p.c23) ** 2 * p.c23 ** 2)))


def case2_roots(p: EPParameters):
    """The two roots ``lambda_{1+-}^2`` of the quadratic companion."""
    if p.c23 == 0:
        raise ExcludedCaseError("c23 = 0 makes the linear companion vanish at the root")
    z = zeta(p)
    base = (np.conj(p.c12) * p.c13 + 2 * p.c11 * p.c23) / (2 * p.c23)
    return p.scale * (base + z / (2 * p.c23)), p.scale * (base - z / (2 * p.c23))


def case2_membership_formula(p: EPParameters, sign: int) -> complex:
    """Displayed expansion of ``det(B0 - lambda_{1+-}^2 I)``."""
    c12, c13, c23 = p.c12, p.c13, p.c23
    c12b = np.conj(c12)
    z = zeta(p)
    body = (-2 * c12b * c13 * c23 ** 2 * (abs(c13) ** 2 + abs(c23) ** 2) - c12b ** 3 * c13 ** 3
            + abs(c12) ** 2 * c12b * c13 * c23 ** 2 + 2 * c12 * np.conj(c13) * c23 ** 4
            + 2 * c12b * c13 * c23 ** 3 * np.conj(c23)
            + sign * (abs(c12) ** 2 * c23 ** 2 - c12b ** 2 * c13 ** 2) * z)
    return p.epsilon ** 3 / (2 * c23 ** 3 * p.volume ** 3) * body


def conjugate_root_conditions(p: EPParameters) -> dict:
    """Residuals of the conjugate-root conditions for the quadratic companion."""
    z = zeta(p)
    base = (np.conj(p.c12) * p.c13 + 2 * p.c11 * p.c23) / (2 * p.c23)
    return {
        "equal real parts": float(p.c23.real * z.real - p.c23.imag * z.imag),
        "opposite imaginary parts": float(base.imag),
        "nonvanishing imaginary parts": float(p.c23.real * z.imag + p.c23.imag * z.real),
    }


def conjugate_companion_roots(p: EPParameters, tol: float = 1e-10) -> bool:
    """True when the two quadratic companion roots are a genuine complex conjugate pair."""
    plus, minus = case2_roots(p)
    scale = max(abs(plus), abs(minus), 1e-300)
    return bool(abs(plus - np.conj(minus)) <= tol * scale and abs(plus.imag) > tol * scale)


def case2_construct(p: EPParameters, branch=(1, 0, 1), n: int = 1, root_sign: int = 1,
                    modulation=None, eta: float = DEFAULT_ETA) -> EPCertificate:
    """EP from a root of the quadratic companion ``g(lambda_1^2) = 0``.

    ``branch = (s1, which, s2)`` chooses the root sign of ``lambda_1^2``, the partner
    among the remaining squared eigenvalues, and its root sign. In the conjugate
    configuration the partner is forced to the real remaining eigenvalue.
    """
    plus, minus = case2_roots(p)
    x1 = plus if root_sign > 0 else minus
    res = abs(characteristic_residual(x1, p)) / _cubic_scale(x1, p)
    if res > MEMBERSHIP_TOL:
        raise NotAnEigenvalueError(f"quadratic companion root is not an eigenvalue ({res:.3e})")
    fval = abs(f_of(x1, p)) / _f_magnitude(x1, p)
    if fval < MEMBERSHIP_TOL:
        raise DegenerateCaseError(
            f"f vanishes at the quadratic companion root (relative |f| = {fval:.3e}); both "
            "couplings of the pair vanish together")
    y2, z2 = vieta_complete(x1, p)
    conds = conjugate_root_conditions(p)
    # the displayed conditions are diagnostics; conjugacy is decided on the roots themselves
    conjugate = conjugate_companion_roots(p)
    which = branch[1]
    if conjugate:
        which = int(np.argmin([abs(y2.imag), abs(z2.imag)]))
    w1 = complex_sqrt_branches(x1)[0 if branch[0] > 0 else 1]
    w2 = complex_sqrt_branches((y2, z2)[which])[0 if branch[2] > 0 else 1]
    # lambda_1 is the row whose coupling vanishes; lambda_2 carries the partner
    cert = _finish(p, (y2, z2)[which], x1, (y2, z2)[1 - which], (w2, w1), n, modulation,
                   "case2", eta)
    cert.diagnostics["configuration"] = "conjugate" if conjugate else "non-conjugate"
    cert.diagnostics["conjugate_root_conditions"] = conds
    cert.diagnostics["relative |f(lambda_1^2)|"] = float(fval)
    cert.diagnostics["displayed membership"] = abs(case2_membership_formula(p, root_sign))
    return cert


def fourier_selective_construct(p: EPParameters, pair=None, n: int = 1, amplitude: complex = 1.0,
                                eta: float = DEFAULT_ETA, detuning: complex = 0.0) -> EPCertificate:
    """EP from a one-sided modulation harmonic.

    Two squared eigenvalues ``x_a, x_b < 0`` give square roots ``i sqrt|x|`` with
    equal (zero) real parts. Choosing ``Omega = |Im(lambda_a - lambda_b)| / n`` makes
    them congruent; modulating with ``xi_1 = amplitude e^{i k* Omega t}`` (plus
    ``detuning`` on the opposite harmonic) keeps one resonant coupling and
    removes the other.

    Parameters
    ----------
    pair : tuple of int, optional
        Indices into the ascending squared eigenvalues; defaults to the two most negative.
    detuning : complex
        Coefficient put on the complementary harmonic ``-k*``.
    """
    x = np.sort_complex(np.linalg.eigvals(p.B0()))
    x = x.real if np.all(np.abs(x.imag) < 1e-12 * np.max(np.abs(x))) else x
    neg = [i for i, v in enumerate(x) if np.isreal(v) and v < 0]
    if pair is None:
        if len(neg) < 2:
            raise NoEPOnBranchError("fewer than two negative squared eigenvalues")
        pair = (neg[0], neg[1])
    a, b = pair
    if x[a].real >= 0 or x[b].real >= 0 or np.iscomplex(x[a]) or np.iscomplex(x[b]):
        raise NoEPOnBranchError("the chosen squared eigenvalues must be negative reals")
    lam_a = 1j * np.sqrt(-float(np.real(x[a])))
    lam_b = 1j * np.sqrt(-float(np.real(x[b])))
    Omega = abs((lam_a - lam_b).imag) / n
    trunc = truncated_exponents(p.with_modulation({1: 0.0}).assembly(Omega))
    mu = np.concatenate([trunc.sqrt_eigenvalues, -trunc.sqrt_eigenvalues])
    k = int(np.argmin(np.abs(mu - lam_a)))
    l = int(np.argmin(np.abs(mu - lam_b)))
    k_star = int(trunc.folding[k] - trunc.folding[l])
    modulation = {k_star: amplitude}
    if detuning:
        modulation[-k_star] = detuning
    q = p.with_modulation(modulation)
    cert = certify(q, Omega, n, eta, pair=(min(k, l), max(k, l)))
    cert.route = "fourier-selective"
    cert.k_star = k_star
    cert.branch = (complex(lam_a), complex(lam_b))
    return cert


# ----------------------------------------------------------------------------
# parameter search

@dataclass
class SearchAttempt:
    start: complex
    c12: complex = None
    params: EPParameters = None
    outcome: str = ""
    certificate: EPCertificate = None


@dataclass
class SearchResult:
    route: str
    attempts: list

    @property
    def certificates(self):
        return [a.certificate for a in self.attempts if a.certificate is not None]

    @property
    def valid(self):
        return [c for c in self.certificates if c.valid]


def damped_newton(residual, z0: complex, tol: float = 1e-14, max_iter: int = 100,
                  step: float = 1e-7):
    """Damped Newton iteration for a non-holomorphic complex equation in one unknown.

    The Jacobian is the real 2x2 derivative by central differences; steps are halved
    until the residual norm decreases.
    """
    z = complex(z0)

    def vec(w):
        r = residual(w)
        return np.array([r.real, r.imag])

    r = vec(z)
    for _ in range(max_iter):
        nr = np.linalg.norm(r)
        if nr < tol:
            return z, nr
        h = step * max(1.0, abs(z))
        J = np.column_stack([(vec(z + h) - vec(z - h)) / (2 * h),
                             (vec(z + 1j * h) - vec(z - 1j * h)) / (2 * h)])
        try:
            d = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return z, nr
        t = 1.0
        while t > 1e-6:
            cand = z + t * complex(d[0], d[1])
            rc = vec(cand)
            if np.linalg.norm(rc) < nr:
                z, r = cand, rc
                break
            t /= 2
        else:
            return z, nr
    return z, float(np.linalg.norm(r))


def case1_membership(p: EPParameters) -> complex:
    """Displayed numerator of ``det(B0 - lambda_2^2 I)`` at the linear companion root."""
    c12, c13, c23 = p.c12, p.c13, p.c23
    return (c12 ** 3 * c23 ** 3 - c12 * c13 ** 2 * c23 * (abs(c12) ** 2 + abs(c23) ** 2)
            + np.conj(c12) * c13 ** 4 * np.conj(c23))


def _shift_negative(p: EPParameters, margin: float = 0.5) -> EPParameters:
    """Shift the diagonal so every squared eigenvalue is negative.

    A common shift of ``c11 = c22 = c33`` moves all squared eigenvalues and both
    companion roots by the same amount, so membership is preserved.
    """
    top = float(np.max(np.linalg.eigvals(p.B0()).real)) / p.scale
    if top < -margin:
        return p
    c11 = p.c11 - top - margin
    return p.with_(c11=c11, c22=c11, c33=c11)


def _distinct(found, z, tol=1e-8):
    return all(abs(z - w) > tol * max(1.0, abs(z)) for w in found)


def search_case1(c13, c23, c11=-2.0, epsilon=1.0, volume=1.0, n=1, starts=None, seed=0,
                 branches=None) -> SearchResult:
    """Find ``c12`` with the linear companion root on the spectrum and try every branch."""
    rng = np.random.default_rng(seed)
    if starts is None:
        starts = list(rng.normal(size=12) + 1j * rng.normal(size=12))
    base = EPParameters(c11, 1.0, c13, c23, epsilon, volume)

    def res(z):
        return case1_membership(base.with_(c12=z)) / z

    return _run_search("case1", base, starts, res, n, branches or
                       [(s2, w, s1) for s2 in (1, -1) for w in (0, 1) for s1 in (1, -1)],
                       lambda q, br: case1_construct(q, br, n))


def search_case2(c13, c23, c11=-2.0, epsilon=1.0, volume=1.0, n=1, starts=None, seed=0,
                 root_sign=1, branches=None) -> SearchResult:
    """Find ``c12`` with a quadratic companion root on the spectrum and try every branch."""
    rng = np.random.default_rng(seed)
    if starts is None:
        starts = list(rng.normal(size=12) + 1j * rng.normal(size=12))
    base = EPParameters(c11, 1.0, c13, c23, epsilon, volume)

    def res(z):
        q = base.with_(c12=z)
        x = case2_roots(q)[0 if root_sign > 0 else 1]
        return characteristic_residual(x, q) / (z * q.scale ** 3)

    return _run_search("case2", base, starts, res, n, branches or
                       [(s1, w, s2) for s1 in (1, -1) for w in (0, 1) for s2 in (1, -1)],
                       lambda q, br: case2_construct(q, br, n, root_sign))


def _run_search(route, base, starts, residual, n, branches, construct):
    attempts, found = [], []
    for z0 in starts:
        att = SearchAttempt(complex(z0))
        attempts.append(att)
        z, r = damped_newton(residual, z0)
        att.c12 = z
        if r > 1e-12 or abs(z) < 1e-3:
            att.outcome = f"newton did not converge to a nonzero root (|res|={r:.2e}, |c12|={abs(z):.2e})"
            continue
        if not _distinct(found, z):
            att.outcome = "duplicate root"
            continue
        found.append(z)
        q = _shift_negative(base.with_(c12=z))
        att.params = q
        errors = []
        for br in branches:
            try:
                cert = construct(q, br)
            except (ExcludedCaseError, NoEPOnBranchError, DegenerateCaseError,
                    NotAnEigenvalueError, ModulationInsufficientError) as exc:
                errors.append(f"{br}: {type(exc).__name__}: {exc}")
                continue
            if att.certificate is None or (cert.valid and not att.certificate.valid):
                att.certificate = cert
        att.outcome = "certificate" if att.certificate is not None else "; ".join(sorted(set(errors)))
    return SearchResult(route, attempts)


# ----------------------------------------------------------------------------
# two dimensional single resonator

@dataclass
class Appendix2DReport:
    varsigma: float
    phi_plus: float
    phi_minus: float
    det_proxy: float
    identity_residual: float
    identity_scale: float
    excluded: bool
    candidate: bool


def appendix_2d_check(c11: float, c22: float, c12: complex, tol: float = 1e-12) -> Appendix2DReport:
    """Both factors that would have to vanish for a two dimensional EP.

    ``phi_+- = 2|c12|^2 + c11 (c11 - c22 +- varsigma)`` with
    ``varsigma = sqrt((c11 - c22)^2 + 4 |c12|^2)``; their product equals
    ``4 |c12|^2 (|c12|^2 - c11 c22)``.
    """
    p = abs(c12) ** 2
    vs = np.sqrt((c11 - c22) ** 2 + 4 * p)
    php = 2 * p + c11 * (c11 - c22 + vs)
    phm = 2 * p + c11 * (c11 - c22 - vs)
    rhs = 4 * p * (p - c11 * c22)
    scale = (2 * p + abs(c11) * (abs(c11 - c22) + vs)) ** 2
    residual = abs(php * phm - rhs)
    det_proxy = p - c11 * c22
    # the smaller factor cancels catastrophically; take it from the product instead,
    # ordered so that tiny |c12| does not underflow
    if abs(php) >= abs(phm) and php != 0:
        phm = (4 * p / php) * det_proxy
    elif phm != 0:
        php = (4 * p / phm) * det_proxy
    size = max(abs(c11), abs(c22), np.sqrt(p), 1e-300)
    excluded = p <= tol * size ** 2 or abs(det_proxy) <= tol * size ** 2
    candidate = (not excluded) and (php == 0 or phm == 0)
    return Appendix2DReport(float(vs), float(php), float(phm), float(det_proxy),
                            float(residual), float(scale), bool(excluded),
                            bool(candidate))
