"""Fourier-side norms of radial data and power-law decay fits.

Radial integrals carry the full sphere area ``|S^{n-1}|`` and no ``(2 pi)^{-n}``
factor. Divergence is reported as ``math.inf`` and detected by a ratio test
on integrals over dyadic blocks ``[2^k, 2^{k+1}]``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .errors import DivergentIntegralError, InsufficientDataError
from .geometry.quadrature import composite_gauss, sphere_area
from .potentials import RadialFourierProfile

#: block ratios at or above ``1 - RATIO_TOL`` count as non-decaying
RATIO_TOL = 1e-9
#: consecutive non-decaying blocks that flag divergence
DIVERGENT_RUN = 4


class NormKind(enum.Enum):
    SOBOLEV_L2 = "sobolev"
    LP_ALPHA = "lp_alpha"
    HOLDER_VIA_L1 = "holder_l1"


@dataclass(frozen=True)
class NormSpec:
    kind: NormKind
    alpha_or_beta: float
    weight_delta: int = 0
    p: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.alpha_or_beta):
            raise ValueError("alpha_or_beta must be finite")
        if self.p < 1 or not math.isfinite(self.p):
            raise ValueError(f"p must be a finite real >= 1, got {self.p}")
        if self.weight_delta not in (0, 1):
            raise ValueError(f"weight_delta must be 0 or 1, got {self.weight_delta}")


def _tail_from_blocks(blocks: np.ndarray) -> float:
    """Geometric tail past the last block, or ``inf`` if the blocks stop decaying."""
    if blocks.shape[0] < DIVERGENT_RUN + 1 or blocks[-1] == 0:
        return 0.0
    ratios = blocks[-DIVERGENT_RUN:] / blocks[-DIVERGENT_RUN - 1:-1]
    if np.all(ratios >= 1.0 - RATIO_TOL):
        return math.inf
    ratio = float(ratios[-1])
    if ratio >= 1.0:
        # isolated growth in oscillatory data; fall back to the mean ratio
        ratio = float(np.exp(np.mean(np.log(ratios))))
        if ratio >= 1.0 - RATIO_TOL:
            return math.inf
    return float(blocks[-1]) * ratio / (1.0 - ratio)


def _radial_integral(integrand, max_octave: int = 16, points: int = 16) -> float:
    """``int_0^inf integrand(rho) d rho`` on [0, 1] plus dyadic blocks with a tail.

    Blocks are split into panels of width at most 1 up to ``2^12`` and into
    4096 panels beyond, so oscillations of unit period stay resolved where
    they still matter.
    """
    x, w = composite_gauss(np.linspace(0.0, 1.0, 9), points)
    head_vals = np.asarray(integrand(x))
    if not np.all(np.isfinite(head_vals)):
        raise DivergentIntegralError("integrand is not finite near the origin")
    head = float(np.sum(w * head_vals))
    blocks = []
    for k in range(max_octave):
        lo, hi = 2.0**k, 2.0 ** (k + 1)
        panels = int(min(hi - lo, 4096))
        x, w = composite_gauss(np.linspace(lo, hi, panels + 1), points)
        blocks.append(float(np.sum(w * np.asarray(integrand(x)))))
    blocks = np.array(blocks)
    tail = _tail_from_blocks(blocks)
    if math.isinf(tail):
        return math.inf
    return head + float(np.sum(blocks)) + tail


def weighted_sobolev_norm(p: RadialFourierProfile, beta: float, delta: int = 0) -> float:
    """``W^{beta,2}_delta`` norm of a radial potential from its Fourier profile.

    ``delta = 1`` adds the norms of ``x_i q``; summed over ``i`` their
    transforms contribute ``|profile'(rho)|^2``. Returns ``math.inf`` when the
    dyadic ratio test flags divergence.
    """
    if delta not in (0, 1):
        raise ValueError(f"delta must be 0 or 1, got {delta}")
    n = p.dim

    def integrand(rho):
        dens = np.abs(p.profile(rho)) ** 2
        if delta:
            dens = dens + np.abs(p.profile_derivative(rho)) ** 2
        # log form avoids inf * 0 for fast-decaying profiles at large beta
        with np.errstate(divide="ignore", over="ignore"):
            logs = beta * np.log1p(rho * rho) + np.log(dens) + (n - 1) * np.log(rho)
        return np.where(dens > 0, np.exp(logs), 0.0)

    value = _radial_integral(integrand)
    if math.isinf(value):
        return math.inf
    return math.sqrt(sphere_area(n) * value)


def _check_grid(radii, values):
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values)
    if radii.ndim != 1 or radii.shape != values.shape:
        raise ValueError("radii and values must be 1-D arrays of equal length")
    if radii.shape[0] < 3:
        raise InsufficientDataError("need at least 3 radial samples")
    if np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be positive and strictly increasing")
    return radii, values


def l1_alpha_norm(radii, values, alpha: float, n: int) -> float:
    """``|S^{n-1}| int <rho>^alpha |f(rho)| rho^{n-1} d rho`` from radial samples.

    Samples should be log-spaced (several per octave). Simpson's rule in
    ``log rho`` covers the sampled range; the piece below the first radius
    uses the first sample as a constant; the piece beyond the last radius is
    a geometric continuation of the per-octave integrals, or ``inf`` when
    they stop decaying.
    """
    radii, values = _check_grid(radii, values)
    g = (1.0 + radii**2) ** (0.5 * alpha) * np.abs(values) * radii**n  # extra rho from d log rho
    logr = np.log(radii)
    body = float(simpson(g, x=logr))
    head = float(g[0]) / n
    octaves = np.floor(np.log2(radii / radii[0]) + 1e-9).astype(int)
    blocks = []
    for k in range(octaves[-1]):
        sel = (octaves == k) | (octaves == k + 1) & (np.isclose(radii, radii[0] * 2.0 ** (k + 1)))
        if np.count_nonzero(sel) >= 2:
            blocks.append(float(np.trapezoid(g[sel], logr[sel])))
    tail = _tail_from_blocks(np.array(blocks))
    if math.isinf(tail):
        return math.inf
    return sphere_area(n) * (head + body + tail)


def holder_upper_bound(radii, values, alpha: float, n: int) -> float:
    """Hoelder-norm bound ``C * l1_alpha_norm`` with the unspecified ``C`` set to 1."""
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    return l1_alpha_norm(radii, values, alpha, n)


def holder_kernel_inequality(xi, t, alpha: float) -> np.ndarray:
    """Margin ``2 |xi|^a |t|^a - |exp(i xi.t) - 1|`` for rows of ``xi`` and ``t``.

    Non-negative entries mean the elementary bound holds.
    """
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    t = np.atleast_2d(np.asarray(t, dtype=float))
    phase = np.sum(xi * t, axis=-1)
    lhs = np.abs(np.expm1(1j * phase))
    rhs = 2.0 * (np.linalg.norm(xi, axis=-1) * np.linalg.norm(t, axis=-1)) ** alpha
    return rhs - lhs


@dataclass(frozen=True)
class DecayFit:
    """Least-squares power law ``magnitude ~ exp(intercept) * radius^-exponent``."""

    exponent: float
    intercept: float
    r2: float
    sample_range: tuple[float, float]
    dropped: int = 0

    def __post_init__(self):
        if not 0.0 <= self.r2 <= 1.0:
            raise ValueError(f"r2 must lie in [0, 1], got {self.r2}")
        if not self.sample_range[0] < self.sample_range[1]:
            raise ValueError("sample_range must be increasing")


MIN_FIT_SAMPLES = 8


def fit_decay_exponent(radii, magnitudes) -> DecayFit:
    """Fit a line to ``(log radius, log magnitude)``; exponent is minus the slope.

    Non-positive magnitudes are dropped and counted in ``DecayFit.dropped``.
    """
    radii = np.asarray(radii, dtype=float)
    mags = np.abs(np.asarray(magnitudes, dtype=float))
    if radii.shape != mags.shape or radii.ndim != 1:
        raise ValueError("radii and magnitudes must be 1-D arrays of equal length")
    if np.any(np.diff(radii) <= 0) or np.any(radii <= 0):
        raise ValueError("radii must be positive and strictly increasing")
    keep = mags > 0
    if np.count_nonzero(keep) < MIN_FIT_SAMPLES:
        raise InsufficientDataError(
            f"need >= {MIN_FIT_SAMPLES} positive samples, got {np.count_nonzero(keep)}")
    x, y = np.log(radii[keep]), np.log(mags[keep])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    if ss_tot <= 1e-24 * max(1.0, float(np.sum(y * y))):
        r2 = 1.0
    else:
        r2 = float(min(1.0, max(0.0, 1.0 - ss_res / ss_tot)))
    return DecayFit(float(-slope), float(intercept), r2,
                    (float(radii[keep][0]), float(radii[keep][-1])), int(np.count_nonzero(~keep)))


def membership_threshold(d: float, n: int) -> float:
    """Sobolev threshold ``d - n/2`` for radial data decaying like ``rho^-d``."""
    if not math.isfinite(d):
        raise ValueError("decay exponent must be finite")
    return d - n / 2


def dyadic_envelope(radii, values, per_octave: int = 1):
    """Block maxima of ``|values|`` over consecutive dyadic intervals.

    Returns ``(block_start_radii, maxima)``; useful before fitting decay of
    oscillating data.
    """
    radii = np.asarray(radii, dtype=float)
    mags = np.abs(np.asarray(values))
    idx = np.floor(per_octave * np.log2(radii / radii[0]) + 1e-9).astype(int)
    starts, maxima = [], []
    for k in np.unique(idx):
        sel = idx == k
        if np.count_nonzero(sel) and k < idx[-1]:
            starts.append(radii[0] * 2.0 ** (k / per_octave))
            maxima.append(mags[sel].max())
    return np.array(starts), np.array(maxima)


def evaluate_norm(spec: NormSpec, profile: RadialFourierProfile, radii=None) -> float:
    """Dispatch a ``NormSpec``; the sample-based kinds use ``radii`` (log-spaced)."""
    if spec.kind is NormKind.SOBOLEV_L2:
        return weighted_sobolev_norm(profile, spec.alpha_or_beta, spec.weight_delta)
    if radii is None:
        radii = np.logspace(-10, 20, 30 * 16 + 1, base=2.0)
    values = profile.profile(np.asarray(radii, dtype=float))
    if spec.kind is NormKind.LP_ALPHA:
        if spec.p == 1:
            return l1_alpha_norm(radii, values, spec.alpha_or_beta, profile.dim)
        powered = np.abs(values) ** spec.p
        value = l1_alpha_norm(radii, powered, spec.p * spec.alpha_or_beta, profile.dim)
        return value ** (1.0 / spec.p)
    return holder_upper_bound(radii, values, spec.alpha_or_beta, profile.dim)
