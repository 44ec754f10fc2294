"""Radial potentials described by their Fourier transform.

Convention: ``q_hat(xi) = int exp(-i x . xi) q(x) dx``. Every profile maps a
radius ``|xi|`` to ``q_hat`` and carries its radial derivative, which gives
the transform of ``x_i q`` as ``i (xi_i/|xi|) profile'(|xi|)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.special import jv, spherical_jn

from .errors import NotSquareIntegrableError, UnsupportedDimensionError

RadialFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class RadialFourierProfile:
    """Fourier-side radial profile of a potential plus regularity metadata.

    ``nominal_regularity`` is the supremum of the Sobolev exponents the
    potential belongs to; membership is always the strict inequality.
    """

    dim: int
    profile: RadialFn
    profile_derivative: RadialFn
    nominal_regularity: float
    label: str
    fourier_support_radius: float | None = None
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        if self.fourier_support_radius is not None and not self.fourier_support_radius > 0:
            raise ValueError("fourier_support_radius must be positive when given")

    @property
    def band_limited(self) -> bool:
        return self.fourier_support_radius is not None

    def __call__(self, xi) -> np.ndarray:
        """``q_hat`` at points of shape ``(..., dim)``."""
        return eval_fourier(self, xi)

    def scaled(self, c: complex) -> "RadialFourierProfile":
        """Profile of ``c * q``; same metadata."""
        base, deriv = self.profile, self.profile_derivative
        return RadialFourierProfile(
            dim=self.dim,
            profile=lambda rho: c * base(rho),
            profile_derivative=lambda rho: c * deriv(rho),
            nominal_regularity=self.nominal_regularity,
            label=self.label,
            fourier_support_radius=self.fourier_support_radius,
            params={**self.params, "scale": c},
        )


def _radius(rho) -> np.ndarray:
    return np.asarray(rho, dtype=float)


def power_profile(s: float, n: int) -> RadialFourierProfile:
    """``<rho>^{-s}``, a member of ``W^{beta,2}`` exactly for ``beta < s - n/2``."""
    if s <= n / 2:
        raise NotSquareIntegrableError(f"<rho>^-{s} is not square integrable in R^{n}")

    def profile(rho):
        rho = _radius(rho)
        return (1.0 + rho * rho) ** (-0.5 * s)

    def derivative(rho):
        rho = _radius(rho)
        return -s * rho * (1.0 + rho * rho) ** (-0.5 * s - 1.0)

    return RadialFourierProfile(n, profile, derivative, s - n / 2, f"power(s={s:g})",
                                params={"s": s})


def gaussian_profile(a: float, n: int) -> RadialFourierProfile:
    if a <= 0:
        raise ValueError(f"a must be positive, got {a}")

    def profile(rho):
        rho = _radius(rho)
        return np.exp(-a * rho * rho)

    def derivative(rho):
        rho = _radius(rho)
        return -2.0 * a * rho * np.exp(-a * rho * rho)

    return RadialFourierProfile(n, profile, derivative, math.inf, f"gaussian(a={a:g})",
                                params={"a": a})


_SERIES_CUTOFF = 1e-3


def _sph_j1_over_u(u):
    small = u < _SERIES_CUTOFF
    safe = np.where(small, 1.0, u)
    return np.where(small, 1.0 / 3.0 - u * u / 30.0, spherical_jn(1, safe) / safe)


def _sph_j2_over_u(u):
    small = u < _SERIES_CUTOFF
    safe = np.where(small, 1.0, u)
    return np.where(small, u / 15.0 - u**3 / 210.0, spherical_jn(2, safe) / safe)


def _j1_over_u(u):
    small = u < _SERIES_CUTOFF
    safe = np.where(small, 1.0, u)
    return np.where(small, 0.5 - u * u / 16.0, jv(1, safe) / safe)


def _j2_over_u(u):
    small = u < _SERIES_CUTOFF
    safe = np.where(small, 1.0, u)
    return np.where(small, u / 8.0 - u**3 / 96.0, jv(2, safe) / safe)


def ball_indicator_profile(R: float, n: int) -> RadialFourierProfile:
    """Transform of the indicator of the ball of radius ``R``.

    n=3: ``4 pi (sin(R rho) - R rho cos(R rho)) / rho^3``; n=2: ``2 pi R J_1(R rho)/rho``.
    Written through ``j_1(u)/u`` and ``J_1(u)/u`` so the origin is regular.
    """
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    if n == 3:
        def profile(rho):
            return 4.0 * np.pi * R**3 * _sph_j1_over_u(R * _radius(rho))

        def derivative(rho):
            return -4.0 * np.pi * R**4 * _sph_j2_over_u(R * _radius(rho))
    elif n == 2:
        def profile(rho):
            return 2.0 * np.pi * R**2 * _j1_over_u(R * _radius(rho))

        def derivative(rho):
            return -2.0 * np.pi * R**3 * _j2_over_u(R * _radius(rho))
    else:
        raise UnsupportedDimensionError(f"ball indicator supports n in (2, 3), got {n}")
    return RadialFourierProfile(n, profile, derivative, 0.5, f"ball(R={R:g})", params={"R": R})


def bandlimited_profile(rho0: float, m: int, n: int) -> RadialFourierProfile:
    """``(1 - (rho/rho0)^2)^m`` inside ``rho0`` and exactly zero beyond."""
    if rho0 <= 0:
        raise ValueError(f"rho0 must be positive, got {rho0}")
    if m < 1 or int(m) != m:
        raise ValueError(f"m must be a positive integer, got {m}")
    m = int(m)

    def profile(rho):
        rho = _radius(rho)
        base = 1.0 - (rho / rho0) ** 2
        return np.where(rho < rho0, np.maximum(base, 0.0) ** m, 0.0)

    def derivative(rho):
        rho = _radius(rho)
        base = 1.0 - (rho / rho0) ** 2
        inner = -2.0 * m * rho / rho0**2 * np.maximum(base, 0.0) ** (m - 1)
        return np.where(rho < rho0, inner, 0.0)

    return RadialFourierProfile(n, profile, derivative, math.inf, f"bandlimited(rho0={rho0:g},m={m})",
                                fourier_support_radius=float(rho0), params={"rho0": rho0, "m": m})


@dataclass(frozen=True)
class DominatedProfile:
    """A profile together with a radial envelope meant to bound it pointwise."""

    target: RadialFourierProfile
    envelope: RadialFourierProfile

    def is_dominated(self, radii) -> bool:
        radii = _radius(radii)
        return bool(np.all(np.abs(self.target.profile(radii)) <= np.abs(self.envelope.profile(radii))))


def _check_points(p: RadialFourierProfile, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != p.dim:
        raise ValueError(f"points have dimension {xi.shape[-1]}, profile has {p.dim}")
    return xi


def eval_fourier(p: RadialFourierProfile, xi) -> np.ndarray:
    """``q_hat`` at ``xi`` (shape ``(..., n)``); radial and even by construction."""
    xi = _check_points(p, xi)
    return np.asarray(p.profile(np.linalg.norm(xi, axis=-1)))


def coordinate_weighted_fourier(p: RadialFourierProfile, i: int, xi) -> np.ndarray:
    """Transform of ``x_i q``: ``i (xi_i/|xi|) profile'(|xi|)``.

    At ``xi = 0`` the value is 0 when ``profile'(0)`` vanishes (smooth
    profiles); otherwise the direction is undefined and ``ValueError`` is raised.
    """
    xi = _check_points(p, xi)
    if not 0 <= i < p.dim:
        raise IndexError(f"axis {i} out of range for dim {p.dim}")
    rho = np.linalg.norm(xi, axis=-1)
    deriv = np.asarray(p.profile_derivative(rho))
    at_origin = rho == 0
    if np.any(at_origin):
        d0 = np.asarray(p.profile_derivative(np.zeros(1)))[0]
        if not np.isfinite(d0) or d0 != 0:
            raise ValueError("x_i q has no well-defined transform at xi = 0 for this profile")
    unit = np.where(at_origin, 0.0, xi[..., i] / np.where(at_origin, 1.0, rho))
    return 1j * unit * deriv


def coordinate_evaluator(p: RadialFourierProfile, i: int) -> Callable[[np.ndarray], np.ndarray]:
    """Callable ``xi -> coordinate_weighted_fourier(p, i, xi)``."""
    return lambda xi: coordinate_weighted_fourier(p, i, xi)


PROFILE_FACTORIES = {
    "power": lambda n, **kw: power_profile(kw["s"], n),
    "gaussian": lambda n, **kw: gaussian_profile(kw.get("a", 1.0), n),
    "ball": lambda n, **kw: ball_indicator_profile(kw.get("R", 1.0), n),
    "bandlimited": lambda n, **kw: bandlimited_profile(kw.get("rho0", 1.0), int(kw.get("m", 2)), n),
}


def profile_from_spec(kind: str, n: int, params: Mapping[str, float] | None = None,
                      scale: float = 1.0) -> RadialFourierProfile:
    """Build a profile from a family name and parameters (used by config files)."""
    try:
        factory = PROFILE_FACTORIES[kind]
    except KeyError:
        raise ValueError(f"unknown profile family {kind!r}; known: {sorted(PROFILE_FACTORIES)}") from None
    prof = factory(n, **dict(params or {}))
    return prof if scale == 1.0 else prof.scaled(scale)
