"""Quadrature rules on the unit sphere S^{n-1} for n = 2, 3.

All rules are product rules in a polar angle measured from a pole (the last
coordinate axis) times an equispaced azimuth. ``rotated`` moves the pole to an
arbitrary axis, which is how the Ewald-sphere integrals align their nodes with
``eta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from ..errors import UnsupportedDimensionError
from .surfaces import SphereDescriptor, rotation_to_axis

SUPPORTED_DIMS = (2, 3)


def sphere_area(n: int) -> float:
    """Surface measure ``|S^{n-1}|`` of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


@lru_cache(maxsize=None)
def _gauss(m: int):
    x, w = leggauss(m)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_on(a: float, b: float, m: int):
    """Gauss-Legendre nodes and weights on ``[a, b]``."""
    x, w = _gauss(m)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def composite_gauss(edges, m: int):
    """Gauss-Legendre rule with ``m`` nodes on each panel between ``edges``."""
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            x, w = gauss_on(a, b, m)
            nodes.append(x)
            weights.append(w)
    if not nodes:
        return np.empty(0), np.empty(0)
    return np.concatenate(nodes), np.concatenate(weights)


def _even_count(order: int) -> int:
    return 2 * math.ceil((order + 1) / 2)


@dataclass(frozen=True)
class SphericalQuadrature:
    """Nodes on the unit sphere with positive weights summing to its area."""

    dim: int
    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != self.dim or nodes.shape[0] != weights.shape[0]:
            raise ValueError("nodes must have shape (m, dim) matching weights (m,)")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.weights.shape[0]

    def rotated(self, axis) -> "SphericalQuadrature":
        """Same rule with its pole moved onto ``axis``."""
        rot = rotation_to_axis(axis)
        if rot.shape[0] != self.dim:
            raise ValueError("axis dimension does not match the quadrature")
        return SphericalQuadrature(self.dim, self.nodes @ rot.T, self.weights, self.order)


def _polar_nodes(dim: int, theta: np.ndarray, w_theta: np.ndarray, n_azimuth: int):
    """Assemble a product rule from polar angles in [0, pi] (pole = last axis)."""
    if dim == 2:
        # the full circle is the polar angle on [0, pi] and its mirror image
        phi = np.concatenate([theta, -theta])
        w = np.concatenate([w_theta, w_theta])
        return np.column_stack([np.sin(phi), np.cos(phi)]), w
    psi = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
    th, ps = np.meshgrid(theta, psi, indexing="ij")
    sin_th = np.sin(th)
    nodes = np.stack([sin_th * np.cos(ps), sin_th * np.sin(ps), np.cos(th)], axis=-1)
    w = (w_theta * np.sin(theta))[:, None] * np.full(n_azimuth, 2.0 * np.pi / n_azimuth)
    return nodes.reshape(-1, 3), w.reshape(-1)


def _check_dim(n: int):
    if n not in SUPPORTED_DIMS:
        raise UnsupportedDimensionError(f"sphere quadrature supports n in {SUPPORTED_DIMS}, got {n}")


def sphere_quadrature(n: int, order: int) -> SphericalQuadrature:
    """Product rule exact for spherical polynomials of degree <= ``order``.

    n=2 uses equispaced angles; n=3 uses Gauss-Legendre in the polar cosine
    times an equispaced azimuth. Both node sets are closed under the antipodal
    map.
    """
    _check_dim(n)
    if order < 4:
        raise ValueError(f"order must be >= 4, got {order}")
    m = _even_count(order)
    if n == 2:
        phi = 2.0 * np.pi * np.arange(m) / m
        nodes = np.column_stack([np.sin(phi), np.cos(phi)])
        return SphericalQuadrature(2, nodes, np.full(m, 2.0 * np.pi / m), order)
    t, wt = _gauss(math.ceil((order + 1) / 2))
    psi = 2.0 * np.pi * np.arange(m) / m
    tt, pp = np.meshgrid(t, psi, indexing="ij")
    s = np.sqrt(1.0 - tt**2)
    nodes = np.stack([s * np.cos(pp), s * np.sin(pp), tt], axis=-1).reshape(-1, 3)
    weights = (wt[:, None] * np.full(m, 2.0 * np.pi / m)).reshape(-1)
    return SphericalQuadrature(3, nodes, weights, order)


def graded_sphere_quadrature(n: int, order: int = 16, levels: int = 24,
                             ratio: float = 0.25, n_azimuth: int | None = None) -> SphericalQuadrature:
    """Product rule whose polar panels are graded geometrically toward both poles.

    Used for integrands sharply peaked at the poles, such as Ewald-sphere
    integrands near ``xi = 0`` and ``xi = eta`` once the pole is aligned with
    ``eta``. Each panel carries ``ceil((order + 1) / 2)`` Gauss points; the
    smallest panel next to a pole has width ``(pi/2) * ratio**levels``.
    """
    _check_dim(n)
    if order < 4:
        raise ValueError(f"order must be >= 4, got {order}")
    if not 0 < ratio < 1 or levels < 0:
        raise ValueError("need 0 < ratio < 1 and levels >= 0")
    half = 0.5 * np.pi
    edges = [0.0] + [half * ratio**k for k in range(levels, 0, -1)] + [half]
    theta, w = composite_gauss(edges, max(4, math.ceil((order + 1) / 2)))
    theta = np.concatenate([theta, np.pi - theta[::-1]])
    w = np.concatenate([w, w[::-1]])
    n_az = _even_count(order) if n_azimuth is None else n_azimuth
    if n_az % 2:
        raise ValueError("n_azimuth must be even so the rule is antipodally symmetric")
    nodes, weights = _polar_nodes(n, theta, w, n_az)
    # Gauss panels integrate sin(theta) only to ~1e-12; pin the total mass
    weights *= sphere_area(n) / weights.sum()
    return SphericalQuadrature(n, nodes, weights, order)


def integrate_sphere(f, s: SphereDescriptor, q: SphericalQuadrature):
    """Approximate the surface integral of ``f`` over the sphere ``s``.

    ``f`` receives an array of points of shape ``(m, dim)`` and must return
    ``m`` values. Returns ``sum_i w_i rho^{n-1} f(center + rho node_i)``.
    """
    if q.dim != s.dim:
        raise ValueError(f"quadrature dim {q.dim} != sphere dim {s.dim}")
    points = s.center + s.radius * q.nodes
    values = np.asarray(f(points))
    return s.radius ** (s.dim - 1) * np.sum(q.weights * values)
