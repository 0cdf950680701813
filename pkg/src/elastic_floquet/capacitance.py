"""Single layer discretisation, capacitance tensors and the static spectrum.

Unknowns are ordered node-major: entry ``2 a + s`` is component ``s`` at
global node ``a``. The capacitance tensor is a ``(dN, dN)`` array whose
``(i, j)`` block holds, in column ``s``, the vector obtained by integrating
over boundary ``i`` the density generated by the load ``e_s`` on boundary ``j``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidCapacitanceError, ResolutionError, SingularOperatorError
from .geometry import BoundaryNodes, ResonatorGeometry
from .green import BackgroundMedium, kelvin_constants
from .lattice import check_quasimomentum
from .periodic_kernel import PeriodicRemainder

CONDITION_LIMIT = 1e12
SYMMETRY_TOL = 1e-10


def kress_weights(n: int) -> np.ndarray:
    """Product quadrature matrix for ``log(4 sin^2((t - tau)/2))`` on ``n`` equispaced nodes.

    ``R[i, j]`` integrates the log weight against the trigonometric interpolant
    of the data at node ``j``, evaluated at target node ``i``.
    """
    if n % 2:
        raise ValueError("log quadrature needs an even node count")
    m = n // 2
    t = 2 * np.pi * np.arange(n) / n
    diff = t[:, None] - t[None, :]
    ks = np.arange(1, m)
    acc = np.zeros((n, n))
    for k in ks:
        acc += np.cos(k * diff) / k
    return -(2 * np.pi / m) * acc - (np.pi / m ** 2) * np.cos(m * diff)


@dataclass
class LayerOperatorMatrix:
    """Nystrom matrix of the static single layer operator.

    Attributes
    ----------
    matrix : (2P, 2P) complex
        Acts on nodal densities: ``(S phi)_a ~ sum_b K_ab phi_b w_b``.
    kernel : (2P, 2P) complex
        Hermitian kernel matrix ``K`` (``matrix = kernel @ diag(weights)``).
    weights : (2P,) arclength weights repeated per component.
    offsets : start index (in nodes) of each boundary.
    """

    matrix: np.ndarray
    kernel: np.ndarray
    weights: np.ndarray
    offsets: np.ndarray
    nodes: list
    alpha: np.ndarray
    q_max: float
    n_nodes: int
    condition: float = field(default=np.nan)

    @property
    def n_resonators(self) -> int:
        return len(self.nodes)


def _self_block(nodes: BoundaryNodes, medium, remainder_block, R):
    n = len(nodes.t)
    a, b = kelvin_constants(medium)
    h = 2 * np.pi / n
    x = nodes.points
    d = x[:, None, :] - x[None, :, :]
    dist2 = np.einsum("abi,abi->ab", d, d)
    sin2 = 4 * np.sin((nodes.t[:, None] - nodes.t[None, :]) / 2) ** 2
    diag = np.eye(n, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        smooth_log = np.where(diag, np.log(nodes.speed ** 2)[:, None] * np.ones(n),
                              np.log(np.where(diag, 1.0, dist2) / np.where(diag, 1.0, sin2)))
        unit = np.where(diag[..., None], 0.0, d / np.sqrt(np.where(diag, 1.0, dist2))[..., None])
    tangent = nodes.velocity / nodes.speed[:, None]
    unit_outer = unit[..., :, None] * unit[..., None, :]
    unit_outer[diag] = tangent[:, :, None] * tangent[:, None, :]
    eye = np.eye(2)
    block = ((a / (4 * np.pi)) * (R / h + smooth_log)[..., None, None] * eye
             - (b / (2 * np.pi)) * unit_outer + remainder_block)
    return block


def _kelvin_pairs(medium, x, y):
    a, b = kelvin_constants(medium)
    d = x[:, None, :] - y[None, :, :]
    dist2 = np.einsum("abi,abi->ab", d, d)
    return ((a / (4 * np.pi)) * np.log(dist2)[..., None, None] * np.eye(2)
            - (b / (2 * np.pi)) * d[..., :, None] * d[..., None, :] / dist2[..., None, None])


def _to_matrix(blocks):
    p, q = blocks.shape[:2]
    return blocks.transpose(0, 2, 1, 3).reshape(2 * p, 2 * q)


def assemble_single_layer(geometry: ResonatorGeometry, medium: BackgroundMedium, alpha,
                          q_max: float, n_nodes: int, check_condition: bool = True,
                          remainder: PeriodicRemainder = None) -> LayerOperatorMatrix:
    """Nystrom discretisation of the static single layer operator.

    The Kelvin part of the kernel is integrated with a log-aware product rule on
    each boundary; the smooth quasiperiodic remainder and all interactions
    between distinct boundaries use the trapezoid rule.

    Parameters
    ----------
    geometry : ResonatorGeometry
    medium : BackgroundMedium
    alpha : array_like, shape (2,)
    q_max : float
        Reciprocal truncation radius of the periodic remainder.
    n_nodes : int
        Nodes per boundary (even).

    Raises
    ------
    ForbiddenQuasimomentumError
        For ``alpha`` in the dual lattice.
    ResolutionError
        If the condition number exceeds ``1e12``.
    """
    lattice = geometry.lattice
    alpha = check_quasimomentum(alpha, lattice)
    medium.check(2)
    nodes = geometry.discretize(n_nodes)
    x = np.concatenate([b.points for b in nodes])
    span = float(np.max(np.linalg.norm(x[:, None] - x[None], axis=-1)))
    rem = remainder or PeriodicRemainder(medium, lattice, alpha, q_max, span=span * 1.001 + 1e-9)
    blocks = rem.pairwise(x)
    offsets = np.cumsum([0] + [len(b.t) for b in nodes])
    R = kress_weights(n_nodes)
    for i, bi in enumerate(nodes):
        si = slice(offsets[i], offsets[i + 1])
        for j, bj in enumerate(nodes):
            sj = slice(offsets[j], offsets[j + 1])
            if i == j:
                blocks[si, sj] = _self_block(bi, medium, blocks[si, sj], R)
            else:
                blocks[si, sj] += _kelvin_pairs(medium, bi.points, bj.points)
    kernel = _to_matrix(blocks)
    weights = np.repeat(np.concatenate([b.weights for b in nodes]), 2)
    matrix = kernel * weights[None, :]
    out = LayerOperatorMatrix(matrix, kernel, weights, offsets, nodes, alpha, q_max, n_nodes)
    if check_condition:
        out.condition = float(np.linalg.cond(matrix))
        if not np.isfinite(out.condition) or out.condition > CONDITION_LIMIT:
            raise ResolutionError(f"layer operator condition number {out.condition:.3e} exceeds "
                                  f"{CONDITION_LIMIT:.0e}")
    return out


@dataclass
class CapacitanceTensor:
    """Capacitance data of ``N`` resonators in dimension ``d``.

    ``matrix[d*i + s', d*j + s]`` is component ``s'`` of the capacitance vector
    for load direction ``s`` on resonator ``j`` integrated over resonator ``i``.
    """

    matrix: np.ndarray
    dimension: int
    alpha: np.ndarray = None

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        n = self.matrix.shape[0]
        if self.matrix.shape != (n, n) or n % self.dimension:
            raise ValueError("capacitance matrix must be square with size a multiple of d")
        if self.alpha is not None:
            self.alpha = np.asarray(self.alpha, dtype=float)

    @property
    def n_resonators(self) -> int:
        return self.matrix.shape[0] // self.dimension

    def block(self, i, j) -> np.ndarray:
        d = self.dimension
        return self.matrix[d * i:d * (i + 1), d * j:d * (j + 1)]

    def symmetry_residual(self) -> float:
        """``max |C - C^H| / max |C|``, zero when the conjugation symmetry holds."""
        scale = np.max(np.abs(self.matrix))
        if scale == 0:
            return 0.0
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)) / scale)

    def to_dict(self) -> dict:
        d = self.dimension
        blocks = []
        for i in range(self.n_resonators):
            for j in range(self.n_resonators):
                b = self.block(i, j)
                blocks.append({"i": i, "j": j,
                               "entries": [[float(v.real), float(v.imag)] for v in b.ravel()]})
        return {
            "dimension": d,
            "N": self.n_resonators,
            "alpha": None if self.alpha is None else [float(v) for v in self.alpha],
            "layout": "row-major d x d blocks, entry (s', s) = component s' of the load-s vector",
            "blocks": blocks,
        }


def capacitance_tensor(layer: LayerOperatorMatrix) -> CapacitanceTensor:
    """Capacitance vectors from the discretised single layer operator.

    For each resonator ``j`` and direction ``s`` solve ``S phi = e_s`` on
    boundary ``j`` (zero elsewhere) and integrate ``phi`` over every boundary.
    """
    n_res = layer.n_resonators
    n_unknown = layer.matrix.shape[0]
    rhs = np.zeros((n_unknown, 2 * n_res))
    for j in range(n_res):
        for s in range(2):
            rhs[2 * layer.offsets[j] + s:2 * layer.offsets[j + 1]:2, 2 * j + s] = 1.0
    try:
        phi = np.linalg.solve(layer.matrix, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularOperatorError(f"single layer solve failed: {exc}") from exc
    if not np.all(np.isfinite(phi)):
        raise SingularOperatorError("single layer solve produced non-finite densities")
    # integrating over boundary i picks rows with the same indicator pattern
    C = rhs.T @ (layer.weights[:, None] * phi)
    return CapacitanceTensor(C, 2, layer.alpha)


def compute_capacitance(geometry, medium, alpha, q_max, n_nodes, check_condition=True):
    """Assemble and invert in one call."""
    layer = assemble_single_layer(geometry, medium, alpha, q_max, n_nodes, check_condition)
    return capacitance_tensor(layer)


def load_capacitance(data, dimension: int = None, tol: float = SYMMETRY_TOL) -> CapacitanceTensor:
    """Validate user supplied capacitance data.

    Parameters
    ----------
    data : dict or array_like
        Either the mapping produced by :meth:`CapacitanceTensor.to_dict` or a
        square complex array (then ``dimension`` is required).
    tol : float
        Admissible relative violation of ``C = C^H``.

    Raises
    ------
    InvalidCapacitanceError
        If the conjugation symmetry is violated; the message names the worst entry.
    """
    alpha = None
    if isinstance(data, dict):
        d = int(data["dimension"])
        n = int(data["N"])
        alpha = data.get("alpha")
        M = np.full((d * n, d * n), np.nan, dtype=complex)
        for blk in data["blocks"]:
            i, j = int(blk["i"]), int(blk["j"])
            vals = np.array(blk["entries"], dtype=float)
            if vals.shape != (d * d, 2):
                raise InvalidCapacitanceError(f"block ({i},{j}) must hold {d*d} (re, im) pairs")
            M[d * i:d * (i + 1), d * j:d * (j + 1)] = (vals[:, 0] + 1j * vals[:, 1]).reshape(d, d)
        if np.any(np.isnan(M)):
            raise InvalidCapacitanceError("capacitance data is missing blocks")
    else:
        if dimension is None:
            raise ValueError("dimension is required for raw arrays")
        d = dimension
        M = np.asarray(data, dtype=complex)
    tensor = CapacitanceTensor(M, d, alpha)
    diff = np.abs(tensor.matrix - tensor.matrix.conj().T)
    scale = max(np.max(np.abs(tensor.matrix)), np.finfo(float).tiny)
    worst = np.unravel_index(np.argmax(diff), diff.shape)
    if diff[worst] > tol * scale:
        a, b = worst
        raise InvalidCapacitanceError(
            f"conjugation symmetry violated at resonators ({a // d},{b // d}), "
            f"directions ({b % d},{a % d}): |C - conj(C^T)| = {diff[worst]:.3e}")
    return tensor


def canonical_sqrt(z) -> np.ndarray:
    """Principal square root with non-negative real part; pure imaginary ties get Im >= 0."""
    w = np.sqrt(np.asarray(z, dtype=complex))
    tie = w.real == 0
    return np.where(tie, 1j * np.abs(w.imag), w)


@dataclass
class StaticSpectrum:
    xi: np.ndarray
    omega: np.ndarray
    epsilon: float
    H: np.ndarray


def block_scaling(rho, volumes, dimension) -> np.ndarray:
    """Row scaling ``1/(|D_i| rho_s)`` for every unknown, node-major."""
    volumes = np.asarray(volumes, dtype=float)
    rho = np.broadcast_to(np.asarray(rho, dtype=float), (dimension,))
    if np.any(volumes <= 0) or np.any(rho <= 0):
        raise ValueError("volumes and densities must be positive")
    return (1.0 / volumes[:, None] / rho[None, :]).ravel()


def static_spectrum(C: CapacitanceTensor, rho, volumes, epsilon: float) -> StaticSpectrum:
    """Subwavelength frequencies ``omega = sqrt(-eps xi)`` with ``xi`` in ``spec(H)``.

    Parameters
    ----------
    C : CapacitanceTensor
    rho : array_like, shape (d,)
        Diagonal of the resonator density.
    volumes : array_like, shape (N,)
    epsilon : float
        Density contrast.
    """
    if len(np.atleast_1d(volumes)) != C.n_resonators:
        raise ValueError("one volume per resonator is required")
    H = block_scaling(rho, volumes, C.dimension)[:, None] * C.matrix
    xi = np.linalg.eigvals(H)
    omega = canonical_sqrt(-epsilon * xi)
    order = np.lexsort((omega.imag, omega.real))
    return StaticSpectrum(xi[order], omega[order], epsilon, H)
