"""Ewald spheres, their dual surfaces, and orthonormal frames."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from ..errors import DegenerateGeometryError


def _as_vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {arr.shape}")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SphereDescriptor:
    center: np.ndarray
    radius: float
    dim: int

    def __post_init__(self):
        center = _frozen(_as_vector(self.center))
        object.__setattr__(self, "center", center)
        if self.dim < 2 or center.shape[0] != self.dim:
            raise ValueError(f"center has length {center.shape[0]}, dim={self.dim}")
        if not np.all(np.isfinite(center)):
            raise ValueError("sphere center must be finite")
        if not (self.radius > 0 and np.isfinite(self.radius)):
            raise ValueError(f"sphere radius must be positive, got {self.radius}")

    def residual(self, points) -> np.ndarray:
        """Signed distance of ``points`` (shape (..., dim)) from the sphere."""
        points = np.asarray(points, dtype=float)
        return np.linalg.norm(points - self.center, axis=-1) - self.radius


@dataclass(frozen=True)
class Hyperplane:
    """The set ``{y : normal . y = offset}`` with a unit ``normal``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        normal = _frozen(_as_vector(self.normal))
        object.__setattr__(self, "normal", normal)
        if abs(np.linalg.norm(normal) - 1.0) > 1e-12:
            raise ValueError("hyperplane normal must have unit norm")

    @property
    def dim(self) -> int:
        return self.normal.shape[0]

    def residual(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return points @ self.normal - self.offset


SurfaceDescriptor = Union[SphereDescriptor, Hyperplane]


def _nonzero_norm(v: np.ndarray, name: str) -> float:
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise DegenerateGeometryError(f"{name} must be a nonzero vector")
    return norm


def ewald_sphere_ab(eta, a: float, b: float) -> SphereDescriptor:
    """Sphere ``{xi : |xi - a eta| = b |eta|}``."""
    eta = _as_vector(eta)
    norm = _nonzero_norm(eta, "eta")
    if b <= 0:
        raise ValueError("b must be positive")
    return SphereDescriptor(center=a * eta, radius=b * norm, dim=eta.shape[0])


def nr_surface_ab(xi, a: float, b: float) -> SphereDescriptor:
    """Sphere ``{eta : |xi - a eta| = b |eta|}`` for ``a != b``."""
    xi = _as_vector(xi)
    norm = _nonzero_norm(xi, "xi")
    if a == b:
        raise ValueError("the dual surface is a hyperplane when a == b")
    gap = a * a - b * b
    return SphereDescriptor(center=(a / gap) * xi, radius=b * norm / abs(gap), dim=xi.shape[0])


def ewald_sphere(eta, r: float) -> SphereDescriptor:
    """Modified Ewald sphere: center ``eta/2`` and radius ``r|eta|/2``.

    >>> ewald_sphere([2.0, 0.0, 0.0], 1.0).radius
    1.0
    """
    if r <= 0:
        raise ValueError(f"r must be positive, got {r}")
    return ewald_sphere_ab(eta, 0.5, 0.5 * r)


def nr_surface(xi, r: float) -> SurfaceDescriptor:
    """All ``eta`` whose Ewald sphere ``Gamma_r(eta)`` contains ``xi``.

    A sphere of center ``2 xi / (1 - r^2)`` and radius ``2 r |xi| / |1 - r^2|``
    when ``r != 1``; for ``r == 1`` the hyperplane ``xi . eta = |xi|^2``.
    """
    xi = _as_vector(xi)
    norm = _nonzero_norm(xi, "xi")
    if r <= 0:
        raise ValueError(f"r must be positive, got {r}")
    if r == 1:
        return Hyperplane(normal=xi / norm, offset=norm)
    return nr_surface_ab(xi, 0.5, 0.5 * r)


def orthonormal_complement(axis) -> np.ndarray:
    """Rows spanning the orthogonal complement of ``axis``.

    Deterministic Gram-Schmidt against the standard basis, starting from
    ``e_0``; when ``axis`` lies within 1e-8 of ``e_0`` the start moves to
    ``e_1``. Returns an array of shape ``(n - 1, n)``.
    """
    axis = _as_vector(axis)
    u = axis / _nonzero_norm(axis, "axis")
    n = u.shape[0]
    start = 0 if np.linalg.norm(u - np.eye(n)[0]) > 1e-8 and np.linalg.norm(u + np.eye(n)[0]) > 1e-8 else 1
    basis = [u]
    for k in list(range(start, n)) + list(range(0, start)):
        v = np.eye(n)[k]
        for _ in range(2):  # second pass restores orthogonality lost to cancellation
            for b in basis:
                v = v - (v @ b) * b
        nv = np.linalg.norm(v)
        if nv > 1e-6:
            basis.append(v / nv)
        if len(basis) == n:
            break
    return np.array(basis[1:])


def rotation_to_axis(axis) -> np.ndarray:
    """Orthogonal matrix whose last column is ``axis / |axis|``.

    Applied to reference nodes whose polar axis is the last coordinate, it
    moves that pole onto ``axis``.
    """
    axis = _as_vector(axis)
    u = axis / _nonzero_norm(axis, "axis")
    comp = orthonormal_complement(u)
    return np.column_stack([*comp, u])
