"""Quadratic backscattering term: sphere operators, principal value, oracle.

For ``eta != 0`` and ``r > 0`` the Ewald sphere ``Gamma_r(eta)`` has center
``eta/2`` and radius ``r|eta|/2``. With ``M(r)`` the plain surface integral of
``q_hat(xi) q_hat(eta - xi)`` over it::

    S_r = 2 M(r) / (|eta| (1 + r))
    P   = PV int_0^inf S_r / (1 - r) dr
    Q2  = S_1 + P           (``q2_paper``)
        = -i pi S_1 + P     (limit of the outgoing resolvent integral)

Sphere integrals use a polar product rule graded toward both poles and
rotated so the poles sit on ``+-eta``, where the integrand peaks once
``|eta|`` is large.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import (ConfigError, ConvergenceWarning, DegenerateGeometryError, NotApplicableError,
                     StepSizeError, TruncationWarning)
from .geometry.quadrature import SphericalQuadrature, composite_gauss, graded_sphere_quadrature
from .geometry.surfaces import rotation_to_axis
from .potentials import RadialFourierProfile, coordinate_evaluator

Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PVConfig:
    """Tunables of the principal-value and oracle quadratures.

    ``eps_ladder`` holds dimensionless widths ``w``; the oracle uses
    ``eps = w (|eta|/2)^2`` so the resolvent width in ``r`` is ``w`` for
    every ``eta``. ``tau`` is kept for reporting the proof's window
    ``delta / <eta>^tau`` and does not enter the evaluation.
    """

    delta: float = 0.5
    tau: float = 2.0
    r_max: float = 8.0
    n_r_inner: int = 16
    n_r_outer: int = 16
    sphere_order: int = 16
    sphere_levels: int = 24
    eps_ladder: tuple[float, ...] = (0.08, 0.04, 0.02, 0.01)
    inner_extra_levels: int = 4
    tail_tolerance: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "eps_ladder", tuple(float(e) for e in self.eps_ladder))
        if not 0 < self.delta < 1:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.tau > 1:
            raise ConfigError(f"tau must exceed 1, got {self.tau}")
        if not self.r_max > 1 + self.delta:
            raise ConfigError(f"r_max must exceed 1 + delta = {1 + self.delta}, got {self.r_max}")
        for name in ("n_r_inner", "n_r_outer", "sphere_levels"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.sphere_order < 4:
            raise ConfigError("sphere_order must be >= 4")
        ladder = np.array(self.eps_ladder)
        if ladder.size and (np.any(ladder <= 0) or np.any(np.diff(ladder) >= 0)):
            raise ConfigError("eps_ladder must be positive and strictly decreasing")

    def refined(self, factor: int = 2) -> "PVConfig":
        """All quadrature counts multiplied by ``factor``."""
        return replace(self, n_r_inner=self.n_r_inner * factor, n_r_outer=self.n_r_outer * factor,
                       sphere_order=self.sphere_order * factor,
                       sphere_levels=self.sphere_levels + 4 * (factor - 1))

    def eta_window(self, eta_norm: float) -> float:
        """The proof's shrinking window ``delta / <eta>^tau`` (diagnostic only)."""
        return self.delta / (1.0 + eta_norm**2) ** (0.5 * self.tau)


@dataclass(frozen=True)
class DispersionSample:
    eta: np.ndarray
    s1_value: complex
    pv_value: complex
    q2_paper: complex
    q2_plemelj: complex
    r: float | None = None
    oracle_value: complex | None = None
    residuals: Mapping[str, float] = field(default_factory=dict)

    @classmethod
    def build(cls, eta, s1: complex, pv: complex, **kw) -> "DispersionSample":
        s1, pv = complex(s1), complex(pv)
        return cls(np.asarray(eta, dtype=float), s1, pv, s1 + pv, -1j * math.pi * s1 + pv, **kw)


@dataclass(frozen=True)
class CutoffSample:
    """``chi(eta) * Q2`` in both forms, next to the uncut sample."""

    chi: float
    q2_paper: complex
    q2_plemelj: complex
    base: DispersionSample


def cutoff_chi(xi, C0: float):
    """Smooth radial step: 0 for ``|xi| <= C0``, 1 for ``|xi| >= 2 C0``.

    Built from ``f(x) = exp(-1/x)`` as ``f(s) / (f(s) + f(1 - s))`` with
    ``s = |xi|/C0 - 1``; monotone and C-infinity.
    """
    if C0 <= 0:
        raise ValueError(f"C0 must be positive, got {C0}")
    rho = np.linalg.norm(np.atleast_1d(np.asarray(xi, dtype=float)), axis=-1)
    s = rho / C0 - 1.0

    def f(x):
        with np.errstate(divide="ignore"):
            return np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)

    a, b = f(s), f(1.0 - s)
    out = a / (a + b)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------- sphere sums

@lru_cache(maxsize=32)
def default_sphere_rule(n: int, order: int, levels: int) -> SphericalQuadrature:
    return graded_sphere_quadrature(n, order=order, levels=levels)


def _eta(eta) -> tuple[np.ndarray, float]:
    eta = np.asarray(eta, dtype=float)
    norm = float(np.linalg.norm(eta))
    if eta.ndim != 1 or norm == 0.0:
        raise DegenerateGeometryError("eta must be a nonzero vector")
    return eta, norm


def _rule_for(eta: np.ndarray, geo: SphericalQuadrature | None, cfg: PVConfig | None):
    n = eta.shape[0]
    if geo is None:
        cfg = cfg or PVConfig()
        geo = default_sphere_rule(n, cfg.sphere_order, cfg.sphere_levels)
    if geo.dim != n:
        raise ValueError(f"quadrature dim {geo.dim} does not match eta of length {n}")
    return geo.nodes @ rotation_to_axis(eta).T, geo.weights


def sphere_sums(f1: Evaluator, f2: Evaluator, eta, rs, geo: SphericalQuadrature | None = None,
                cfg: PVConfig | None = None, absolute: bool = False, chunk_nodes: int = 400_000):
    """``M(r) = int_{Gamma_r(eta)} f1(xi) f2(eta - xi) dsigma`` for each ``r`` in ``rs``.

    With ``absolute`` the integrand is ``|f1| |f2|``.
    """
    eta, norm = _eta(eta)
    rs = np.atleast_1d(np.asarray(rs, dtype=float))
    if np.any(rs <= 0):
        raise ValueError("r must be positive")
    nodes, weights = _rule_for(eta, geo, cfg)
    n = eta.shape[0]
    out = np.zeros(rs.shape[0], dtype=complex)
    step = max(1, chunk_nodes // nodes.shape[0])
    for start in range(0, rs.shape[0], step):
        rho = 0.5 * norm * rs[start:start + step]
        xi = 0.5 * eta + rho[:, None, None] * nodes[None, :, :]
        v1, v2 = np.asarray(f1(xi)), np.asarray(f2(eta - xi))
        vals = np.abs(v1) * np.abs(v2) if absolute else v1 * v2
        out[start:start + step] = rho ** (n - 1) * (vals @ weights)
    return out


def _real_if_real(values):
    values = np.asarray(values)
    if np.iscomplexobj(values) and not np.any(values.imag):
        return values.real
    return values


def k_r(f1: Evaluator, f2: Evaluator, eta, r, geo: SphericalQuadrature | None = None,
        cfg: PVConfig | None = None):
    """``(1/|eta|) int_{Gamma_r(eta)} |f1(xi)| |f2(eta - xi)| dsigma``."""
    _, norm = _eta(eta)
    vals = sphere_sums(f1, f2, eta, r, geo, cfg, absolute=True).real / norm
    return float(vals[0]) if np.ndim(r) == 0 else vals


def s_r(q: Evaluator, eta, r, geo: SphericalQuadrature | None = None, cfg: PVConfig | None = None):
    """``2/(|eta|(1+r)) int_{Gamma_r(eta)} q_hat(xi) q_hat(eta - xi) dsigma``.

    Scalar ``r`` gives a scalar; an array gives an array. Real output when
    the profile is real.
    """
    _, norm = _eta(eta)
    rs = np.atleast_1d(np.asarray(r, dtype=float))
    vals = _real_if_real(2.0 * sphere_sums(q, q, eta, rs, geo, cfg) / (norm * (1.0 + rs)))
    return vals[0].item() if np.ndim(r) == 0 else vals


def s_r_support_bounds(q: RadialFourierProfile, eta) -> tuple[float, float]:
    """Interval of ``r`` outside which ``S_r`` vanishes for a band-limited profile."""
    if getattr(q, "fourier_support_radius", None) is None:
        raise NotApplicableError("support bounds need a band-limited profile")
    _, norm = _eta(eta)
    ratio = 2.0 * q.fourier_support_radius / norm
    return max(0.0, 1.0 - ratio), 1.0 + ratio


def ds_r_dr(q: Evaluator, eta, r: float, h: float = 1e-2, geo: SphericalQuadrature | None = None,
            cfg: PVConfig | None = None, rtol: float = 1e-4) -> complex:
    """``d S_r / dr`` by central differences, Richardson-refined over ``h, h/2, h/4``.

    The two Richardson values from ``(h, h/2)`` and ``(h/2, h/4)`` must
    agree to ``rtol``; otherwise ``StepSizeError``.
    """
    if not 0 < h < r:
        raise ValueError(f"need 0 < h < r, got h={h}, r={r}")
    hs = np.array([h, h / 2, h / 4])
    vals = s_r(q, eta, np.concatenate([r + hs, r - hs]), geo, cfg)
    d = (vals[:3] - vals[3:]) / (2.0 * hs)
    rich1 = (4.0 * d[1] - d[0]) / 3.0
    rich2 = (4.0 * d[2] - d[1]) / 3.0
    atol = 1e-12 * float(np.max(np.abs(vals))) / h
    if abs(rich1 - rich2) > rtol * abs(rich2) + atol:
        raise StepSizeError(f"Richardson values {rich1} and {rich2} disagree beyond rtol={rtol}")
    return complex(rich2) if np.iscomplexobj(rich2) else float(rich2)


def kpoint_rhs(q: RadialFourierProfile, eta, r: float, geo: SphericalQuadrature | None = None,
               cfg: PVConfig | None = None) -> float:
    """``K_r(q, q) + |eta| sum_i K_r(x_i q, q)`` with the constants dropped."""
    eta, norm = _eta(eta)
    total = k_r(q, q, eta, r, geo, cfg)
    for i in range(eta.shape[0]):
        total += norm * k_r(coordinate_evaluator(q, i), q, eta, r, geo, cfg)
    return float(total)


# ---------------------------------------------------------- principal value

@dataclass(frozen=True)
class PVResult:
    value: complex
    inner: complex
    outer: complex
    r_cut: float
    tail_estimate: float
    s1_value: complex


def _inner_edges(delta: float, levels: int):
    """Breakpoints in ``(0, delta]`` graded geometrically toward 0."""
    return np.array([0.0] + [delta * 2.0**-j for j in range(levels, -1, -1)])


def _outer_blocks(delta: float, lo_limit: float, hi_limit: float, breaks=()):
    """Dyadic blocks ``[1 + delta 2^k, 1 + delta 2^{k+1}]`` and their mirrors."""
    edges = {1.0 + delta, 1.0 - delta}
    k = 0
    while 1.0 + delta * 2.0**k < hi_limit:
        edges.add(min(1.0 + delta * 2.0 ** (k + 1), hi_limit))
        k += 1
    k = 0
    while 1.0 - delta * 2.0**k > lo_limit:
        edges.add(max(1.0 - delta * 2.0 ** (k + 1), lo_limit))
        k += 1
    edges.update(b for b in breaks if lo_limit < b < hi_limit)
    edges = sorted(e for e in edges if lo_limit <= e <= hi_limit)
    return [(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a and not (1 - delta < 0.5 * (a + b) < 1 + delta)]


def _tail_estimate(q: Evaluator, eta, r_cut: float, geo, cfg) -> float:
    """Size of ``int_{r_cut}^inf 2 K_r / ((1 + r)(r - 1)) dr`` from a power-law fit."""
    rs = r_cut * np.array([1.0, 2.0, 4.0])
    t = 2.0 * k_r(q, q, eta, rs, geo, cfg) / ((1.0 + rs) * (rs - 1.0))
    # underflow past r_cut means the tail is below double precision anyway
    positive = np.flatnonzero(t > 0)
    count = positive[-1] + 1 if positive.size and np.all(positive == np.arange(positive.size)) else 0
    if count < 2:
        return 0.0 if t[0] == 0 or np.all(t[1:] == 0) else math.inf
    gamma = -np.polyfit(np.log(rs[:count]), np.log(t[:count]), 1)[0]
    if gamma <= 1.0:
        return math.inf
    return float(t[0] * r_cut / (gamma - 1.0))


def principal_value(q: Evaluator, eta, cfg: PVConfig | None = None,
                    geo: SphericalQuadrature | None = None) -> PVResult:
    """``PV int_0^inf S_r / (1 - r) dr`` truncated at ``r_cut``, with diagnostics.

    Inside ``|1 - r| <= delta`` the integrand is ``(S_r - S_1)/(1 - r)`` (the
    subtracted ``S_1/(1 - r)`` has zero principal value there), on panels
    graded toward ``r = 1`` down to about ``1/(16|eta|)``. Outside, dyadic
    blocks carry ``S_r/(1 - r)`` up to ``r_cut``: ``r_max``, or the support
    bound for band-limited profiles.
    """
    cfg = cfg or PVConfig()
    eta, norm = _eta(eta)
    delta = cfg.delta
    band = getattr(q, "fourier_support_radius", None)
    lo_limit, hi_limit, breaks = 0.0, cfg.r_max, ()
    if band is not None:
        r_lo, r_hi = s_r_support_bounds(q, eta)
        hi_limit = min(cfg.r_max, r_hi)
        breaks = (r_lo, r_hi)
    s1 = s_r(q, eta, 1.0, geo, cfg)

    levels = max(0, math.ceil(math.log2(max(norm * delta, 1.0)))) + cfg.inner_extra_levels
    u, wu = composite_gauss(_inner_edges(delta, levels), cfg.n_r_inner)
    r_in = np.concatenate([1.0 - u, 1.0 + u])
    w_in = np.concatenate([wu, wu])
    vals = s_r(q, eta, r_in, geo, cfg)
    inner = np.sum(w_in * (vals - s1) / (1.0 - r_in))

    blocks = _outer_blocks(delta, lo_limit, hi_limit, breaks)
    outer = 0.0
    if blocks:
        edges_r, w_r = [], []
        for a, b in blocks:
            x, w = composite_gauss(np.array([a, b]), cfg.n_r_outer)
            edges_r.append(x)
            w_r.append(w)
        r_out = np.concatenate(edges_r)
        w_out = np.concatenate(w_r)
        outer = np.sum(w_out * s_r(q, eta, r_out, geo, cfg) / (1.0 - r_out))

    tail = 0.0
    if band is None or hi_limit < breaks[1]:
        tail = _tail_estimate(q, eta, hi_limit, geo, cfg)
    value = inner + outer
    return PVResult(value, inner, outer, hi_limit, tail, s1)


def pv_eval(q: Evaluator, eta, cfg: PVConfig | None = None, geo: SphericalQuadrature | None = None):
    """Principal value ``P(q)(eta)``; warns with ``TruncationWarning`` if the tail is large."""
    cfg = cfg or PVConfig()
    res = principal_value(q, eta, cfg, geo)
    if res.tail_estimate > cfg.tail_tolerance * abs(res.value):
        warnings.warn(f"tail beyond r={res.r_cut:g} estimated at {res.tail_estimate:.3g}, "
                      f"{res.tail_estimate / max(abs(res.value), 1e-300):.2%} of |P|",
                      TruncationWarning, stacklevel=2)
    return res.value


def q2_hat(q: Evaluator, eta, cfg: PVConfig | None = None,
           geo: SphericalQuadrature | None = None) -> DispersionSample:
    """``S_1``, ``P`` and both combinations at one frequency."""
    cfg = cfg or PVConfig()
    res = principal_value(q, eta, cfg, geo)
    return DispersionSample.build(eta, res.s1_value, res.value,
                                  residuals={"tail_estimate": res.tail_estimate, "r_cut": res.r_cut})


def q2_tilde_hat(q: Evaluator, eta, cfg: PVConfig | None, C0: float,
                 geo: SphericalQuadrature | None = None) -> CutoffSample:
    """``chi(eta) Q2(eta)``; the sample is computed even where ``chi`` vanishes."""
    chi = cutoff_chi(eta, C0)
    base = q2_hat(q, eta, cfg, geo)
    return CutoffSample(chi, chi * base.q2_paper, chi * base.q2_plemelj, base)


# --------------------------------------------------------------- the oracle

@dataclass(frozen=True)
class OracleResult:
    value: complex
    ladder: tuple[float, ...]
    integrals: tuple[complex, ...]
    extrapolations: tuple[complex, ...]


def _oracle_breaks(width: float, r_max: float):
    pts = {0.0, 1.0, r_max}
    w = width
    while w < 1.0:
        pts.update((1.0 - w, 1.0 + w))
        w *= 2.0
    w = 2.0
    while 1.0 + w < r_max:
        pts.add(1.0 + w)
        w *= 2.0
    return np.array(sorted(p for p in pts if 0.0 <= p <= r_max))


def resolvent_integral(q: Evaluator, eta, width: float, cfg: PVConfig | None = None,
                       geo: SphericalQuadrature | None = None, points: int = 16) -> complex:
    """``int q_hat(xi) q_hat(eta - xi) / ((|eta|/2)^2 - |xi - eta/2|^2 + i eps) d xi``.

    ``eps = width (|eta|/2)^2``. By the co-area formula over the spheres
    ``Gamma_r(eta)`` this is ``int_0^{r_max} M(r) (|eta|/2) / ((|eta|/2)^2 (1 - r^2) + i eps) dr``;
    the ``r`` panels are graded around 1 at the scale ``width``.
    """
    cfg = cfg or PVConfig()
    eta, norm = _eta(eta)
    half = 0.5 * norm
    r, w = composite_gauss(_oracle_breaks(width, cfg.r_max), points)
    m = sphere_sums(q, q, eta, r, geo, cfg)
    eps = width * half * half
    return complex(np.sum(w * m * half / (half * half * (1.0 - r * r) + 1j * eps)))


def _extrapolate(widths: np.ndarray, values: np.ndarray) -> complex:
    """Value at width 0 of the interpolating polynomial."""
    vander = np.vander(widths, widths.shape[0], increasing=True)
    return complex(np.linalg.solve(vander, values)[0])


def extrapolations_settle(extraps) -> bool:
    """True when successive extrapolations approach each other monotonically."""
    diffs = np.abs(np.diff(np.asarray(extraps)))
    scale = max(abs(extraps[-1]), 1e-300)
    return not (diffs.shape[0] >= 2 and np.any(diffs[1:] > diffs[:-1]) and diffs[-1] > 1e-12 * scale)


def q2_resolvent_oracle(q: Evaluator, eta, cfg: PVConfig | None = None,
                        geo: SphericalQuadrature | None = None, detail: bool = False,
                        warn: bool = True):
    """Limit ``eps -> 0`` of the resolvent integral, by polynomial extrapolation.

    The ladder must have at least three widths. Extrapolations from the
    last ``k`` widths, ``k = 2 .. len(ladder)``, should approach each other;
    if their successive differences do not shrink a ``ConvergenceWarning``
    is issued.
    """
    cfg = cfg or PVConfig()
    ladder = np.array(cfg.eps_ladder)
    if ladder.shape[0] < 3:
        raise ConfigError(f"the oracle needs at least 3 ladder widths, got {ladder.shape[0]}")
    ints = np.array([resolvent_integral(q, eta, w, cfg, geo) for w in ladder])
    extraps = [_extrapolate(ladder[-k:], ints[-k:]) for k in range(2, ladder.shape[0] + 1)]
    if warn and not extrapolations_settle(extraps):
        warnings.warn("resolvent extrapolations do not settle monotonically", ConvergenceWarning,
                      stacklevel=2)
    value = extraps[-1]
    if detail:
        return OracleResult(value, tuple(ladder), tuple(ints), tuple(extraps))
    return value


def sample_directions(n: int, count: int, seed: int) -> np.ndarray:
    """Deterministic unit vectors from ``numpy.random.default_rng(seed)``."""
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(count, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


__all__: Sequence[str] = (
    "PVConfig", "DispersionSample", "CutoffSample", "PVResult", "OracleResult", "cutoff_chi",
    "sphere_sums", "k_r", "s_r", "s_r_support_bounds", "ds_r_dr", "kpoint_rhs", "principal_value",
    "pv_eval", "q2_hat", "q2_tilde_hat", "resolvent_integral", "q2_resolvent_oracle",
    "default_sphere_rule", "sample_directions", "extrapolations_settle",
)
