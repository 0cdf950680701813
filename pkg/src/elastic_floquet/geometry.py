"""Smooth closed resonator boundaries in two dimensions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import Lattice


class Curve:
    """Closed curve parametrised by ``t`` in ``[0, 2 pi)``, positively oriented."""

    def position(self, t):
        raise NotImplementedError

    def derivative(self, t):
        raise NotImplementedError

    def contains(self, p) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Circle(Curve):
    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def position(self, t):
        t = np.asarray(t, dtype=float)
        c = np.asarray(self.center, dtype=float)
        return c + self.radius * np.stack([np.cos(t), np.sin(t)], axis=-1)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        return self.radius * np.stack([-np.sin(t), np.cos(t)], axis=-1)

    def contains(self, p):
        p = np.asarray(p, dtype=float) - np.asarray(self.center, dtype=float)
        return np.einsum("...i,...i->...", p, p) < self.radius ** 2

    @property
    def area(self) -> float:
        return np.pi * self.radius ** 2


@dataclass(frozen=True)
class StarCurve(Curve):
    """Star shaped curve ``c + r(t) (cos t, sin t)``.

    ``r(t) = r0 + sum_k a_k cos(k t) + b_k sin(k t)`` with ``k = 1, 2, ...``.
    """

    center: tuple
    r0: float
    cos_coeffs: tuple = ()
    sin_coeffs: tuple = ()

    def _radius(self, t):
        r = np.full_like(t, self.r0, dtype=float)
        dr = np.zeros_like(r)
        for k, a in enumerate(self.cos_coeffs, start=1):
            r += a * np.cos(k * t)
            dr -= k * a * np.sin(k * t)
        for k, b in enumerate(self.sin_coeffs, start=1):
            r += b * np.sin(k * t)
            dr += k * b * np.cos(k * t)
        return r, dr

    def position(self, t):
        t = np.asarray(t, dtype=float)
        r, _ = self._radius(t)
        return np.asarray(self.center, dtype=float) + r[..., None] * np.stack(
            [np.cos(t), np.sin(t)], axis=-1)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        r, dr = self._radius(t)
        c, s = np.cos(t), np.sin(t)
        return np.stack([dr * c - r * s, dr * s + r * c], axis=-1)

    def contains(self, p):
        p = np.asarray(p, dtype=float) - np.asarray(self.center, dtype=float)
        ang = np.arctan2(p[..., 1], p[..., 0])
        r, _ = self._radius(ang)
        return np.hypot(p[..., 0], p[..., 1]) < r


@dataclass
class BoundaryNodes:
    """Equispaced parameter nodes on one curve.

    Attributes
    ----------
    t : (n,) parameter values ``2 pi j / n``
    points : (n, 2)
    velocity : (n, 2) derivative with respect to ``t``
    speed : (n,) ``|x'(t)|``
    normals : (n, 2) outward unit normals
    weights : (n,) arclength trapezoid weights ``(2 pi / n) |x'(t)|``
    """

    t: np.ndarray
    points: np.ndarray
    velocity: np.ndarray
    speed: np.ndarray
    normals: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_curve(cls, curve: Curve, n: int) -> "BoundaryNodes":
        if n < 4 or n % 2:
            raise ValueError("node count must be an even integer >= 4")
        t = 2 * np.pi * np.arange(n) / n
        x = curve.position(t)
        v = curve.derivative(t)
        speed = np.hypot(v[:, 0], v[:, 1])
        normals = np.stack([v[:, 1], -v[:, 0]], axis=-1) / speed[:, None]
        return cls(t, x, v, speed, normals, 2 * np.pi / n * speed)

    @property
    def length(self) -> float:
        return float(self.weights.sum())

    @property
    def area(self) -> float:
        # divergence theorem: |D| = (1/2) \oint (x y' - y x') dt
        x, v = self.points, self.velocity
        return 0.5 * float(np.sum(x[:, 0] * v[:, 1] - x[:, 1] * v[:, 0])) * 2 * np.pi / len(self.t)


class ResonatorGeometry:
    """Disjoint resonators inside one periodic cell.

    Parameters
    ----------
    curves : sequence of Curve
    lattice : Lattice
        Two dimensional lattice; every curve must lie inside the cell spanned by its basis.
    """

    def __init__(self, curves, lattice: Lattice, check: bool = True, samples: int = 512):
        if lattice.dimension != 2:
            raise ValueError("boundary discretisation is only available in two dimensions")
        self.curves = list(curves)
        self.lattice = lattice
        if not self.curves:
            raise ValueError("at least one resonator is required")
        if check:
            self._validate(samples)

    def _validate(self, samples):
        t = 2 * np.pi * np.arange(samples) / samples
        pts = [c.position(t) for c in self.curves]
        for i, p in enumerate(pts):
            frac = self.lattice.fractional(p)
            if np.any(frac <= 0) or np.any(frac >= 1):
                raise ValueError(f"resonator {i} is not contained in the unit cell")
            if self.discretize_one(i, samples).area <= 0:
                raise ValueError(f"resonator {i} is not positively oriented")
        for i in range(len(pts)):
            for j in range(len(pts)):
                if i != j and np.any(self.curves[i].contains(pts[j])):
                    raise ValueError(f"resonators {i} and {j} intersect")

    def __len__(self):
        return len(self.curves)

    def discretize_one(self, i, n) -> BoundaryNodes:
        return BoundaryNodes.from_curve(self.curves[i], n)

    def discretize(self, n: int):
        return [BoundaryNodes.from_curve(c, n) for c in self.curves]

    def volumes(self, n: int = 256) -> np.ndarray:
        """Enclosed areas from the discretised boundaries."""
        return np.array([b.area for b in self.discretize(n)])
