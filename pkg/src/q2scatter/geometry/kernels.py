"""Near-singular distance kernels integrated over spheres.

For a sphere of radius ``rho`` and a point ``x`` at distance ``D`` from its
center, any kernel ``g(|x - y|)`` integrates as

    |S^{n-2}| rho^{n-1} int_0^pi g(d(theta)) sin(theta)^{n-2} dtheta,
    d(theta)^2 = (D - rho)^2 + 4 D rho sin(theta/2)^2,

with ``theta`` measured from the point of the sphere nearest to ``x``. The
polar integral uses Gauss panels graded geometrically toward ``theta = 0``.
"""

from __future__ import annotations

import numpy as np

from ..errors import DivergentIntegralError
from .quadrature import composite_gauss, sphere_area
from .surfaces import SphereDescriptor


def _graded_polar_rule(levels: int, points: int, ratio: float = 0.5):
    edges = [0.0] + [np.pi * ratio**k for k in range(levels, 0, -1)] + [np.pi]
    return composite_gauss(np.array(edges), points)


def radial_kernel_on_sphere(g, x, s: SphereDescriptor, levels: int = 48, points: int = 12) -> float:
    """Integral of ``g(|x - y|)`` over the sphere ``s`` with graded panels."""
    x = np.asarray(x, dtype=float)
    n = s.dim
    D = float(np.linalg.norm(x - s.center))
    rho = s.radius
    theta, w = _graded_polar_rule(levels, points)
    d = np.sqrt((D - rho) ** 2 + 4.0 * D * rho * np.sin(0.5 * theta) ** 2)
    polar = np.sum(w * g(d) * np.sin(theta) ** (n - 2))
    return float(sphere_area(n - 1) * rho ** (n - 1) * polar)


def _on_sphere(x, s: SphereDescriptor) -> bool:
    return abs(np.linalg.norm(np.asarray(x, dtype=float) - s.center) - s.radius) <= 1e-14 * s.radius


def kernel_integral_ab(x, s: SphereDescriptor, a: float, b: float, refine: int = 1) -> float:
    """Integral of ``|x - y|^{-a} <x - y>^{-b}`` over the sphere ``s``.

    Bounded independently of the sphere when ``a + b > n - 1`` and
    ``a < n - 1``. ``refine`` doubles the grading depth and per-panel order
    that many times minus one.
    """
    if a < 0 or b < 0:
        raise ValueError("a and b must be non-negative")
    if a >= s.dim - 1 and _on_sphere(x, s):
        raise DivergentIntegralError(f"|x-y|^-{a} is not integrable on the sphere through x")

    def g(d):
        return d ** (-a) * (1.0 + d * d) ** (-0.5 * b)

    return radial_kernel_on_sphere(g, x, s, levels=48 * refine, points=12 * refine)


def kernel_integral_lambda(x, s: SphereDescriptor, lam: float, n: int | None = None,
                           refine: int = 1) -> float:
    """Integral of ``|x - y|^{-(n - 1 - 2 lam)}`` over ``s``; at most ``C rho^{2 lam}``."""
    n = s.dim if n is None else n
    if n != s.dim:
        raise ValueError("n does not match the sphere dimension")
    if not 0 < lam <= (n - 1) / 2:
        raise ValueError(f"lambda must lie in (0, {(n - 1) / 2}], got {lam}")
    return kernel_integral_ab(x, s, a=n - 1 - 2 * lam, b=0.0, refine=refine)
