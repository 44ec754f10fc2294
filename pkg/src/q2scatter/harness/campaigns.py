"""The four experiment campaigns.

Each campaign turns an ``ExperimentConfig`` into a ``RunReport``. Work over
frequencies (or sample points) is a thread-pool map whose results are
collected in input order, so tables do not depend on the worker count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

from .. import dispersion as disp
from ..errors import ConfigError
from ..geometry import (
    SphereDescriptor,
    fubini_sides,
    gaussian_pair_case,
    integrate_sphere,
    kernel_integral_ab,
    kernel_integral_lambda,
    leckband_integrate,
    santalo_sides,
    sphere_area,
    sphere_quadrature,
)
from ..norms import fit_decay_exponent, holder_kernel_inequality
from ..potentials import power_profile, profile_from_spec
from .config import ExperimentConfig
from .report import RunReport, Table, Verdict

T = TypeVar("T")
R = TypeVar("R")

HEURISTIC_NOTE = ("heuristic: regularity is inferred from the pointwise decay of |Q2| along one ray "
                  "via the threshold d - n/2, exact only for monotone power-law envelopes")


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int) -> list[R]:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def geometric_radii(lo: float, hi: float, per_octave: int) -> np.ndarray:
    """Radii ``lo * 2^(k/per_octave)`` up to ``hi`` (inclusive within rounding)."""
    if per_octave < 1:
        raise ConfigError("per_octave must be at least 1")
    count = int(math.floor(per_octave * math.log2(hi / lo) + 1e-9)) + 1
    return lo * 2.0 ** (np.arange(count) / per_octave)


def relative_gap(x: complex, y: complex) -> float:
    scale = max(abs(x), abs(y))
    return 0.0 if scale == 0 else abs(x - y) / scale


# -------------------------------------------------------------------- verify

FUBINI_PAIRS = ((0.5, 0.25), (0.5, 1.0))
FUBINI_TOLERANCE = 1e-3
SANTALO_TOLERANCE = 1e-10
LECKBAND_TOLERANCE = 1e-6
MASS_TOLERANCE = 1e-10
KERNEL_REFINEMENT_TOLERANCE = 0.01


def _random_polynomial(rng: np.random.Generator, degree: int = 4):
    exps = [(i, j, k) for i in range(degree + 1) for j in range(degree + 1 - i)
            for k in range(degree + 1 - i - j)]
    coef = rng.normal(size=len(exps))

    def f(w):
        w = np.asarray(w)
        out = np.zeros(w.shape[:-1])
        for c, (i, j, k) in zip(coef, exps):
            out = out + c * w[..., 0] ** i * w[..., 1] ** j * w[..., 2] ** k
        return out

    return f


def _santalo_suite(cfg: ExperimentConfig, rng, report: RunReport, rows: list):
    if cfg.dimension != 3:
        report.notes.append("santalo: skipped, unsupported-dimension (needs n >= 3; only n = 3 implemented)")
        rows.append(["santalo", "skipped", "", "", "unsupported-dimension"])
        return
    q = sphere_quadrature(3, 8)
    lhs, rhs, _ = santalo_sides(lambda w: np.ones(w.shape[:-1]), q)
    target = 8.0 * math.pi**2
    gap = max(abs(lhs - target), abs(rhs - target)) / target
    rows.append(["santalo_constant", "all", gap, MASS_TOLERANCE, f"lhs={lhs!r} rhs={rhs!r}"])
    report.verdicts.append(Verdict("santalo_constant", gap <= MASS_TOLERANCE, gap, MASS_TOLERANCE))
    worst = 0.0
    for i in range(min(20, cfg.section("verify")["samples"])):
        f = _random_polynomial(rng)
        lhs, rhs, scale = santalo_sides(f, q)
        res = abs(lhs - rhs) / scale
        worst = max(worst, res)
        rows.append(["santalo_polynomial", i, res, SANTALO_TOLERANCE, ""])
    report.verdicts.append(Verdict("santalo_polynomial", worst <= SANTALO_TOLERANCE, worst, SANTALO_TOLERANCE))


def _unit(rng, n):
    v = rng.normal(size=n)
    return v / np.linalg.norm(v)


def _fubini_suite(cfg: ExperimentConfig, rng, report: RunReport, rows: list, threads: int):
    n = cfg.dimension
    axis = _unit(rng, n)
    perp = _unit(rng, n)
    perp = perp - (perp @ axis) * axis
    perp /= np.linalg.norm(perp)
    refine = cfg.section("verify")["fubini_refinement"]
    jobs = [(a, b, 1) for a, b in FUBINI_PAIRS] + ([(a, b, 2) for a, b in FUBINI_PAIRS] if refine else [])

    # plane fibers are cheap but the base rule is under-resolved there
    scale = 1 if n == 3 else 2

    def run(job):
        a, b, level = job
        f, eta_box, xi_box = gaussian_pair_case(a, b, axis, perp)
        lhs, rhs = fubini_sides(f, a, b, eta_box, xi_box, panels=2 * level * scale, points=10,
                                sphere_order=16 * level * scale)
        return relative_gap(lhs, rhs)

    results = parallel_map(run, jobs, threads)
    base = {}
    for (a, b, level), res in zip(jobs, results):
        rows.append([f"fubini_a{a:g}_b{b:g}", f"refine{level}", res, FUBINI_TOLERANCE, ""])
        if level == 1:
            base[(a, b)] = res
            report.verdicts.append(Verdict(f"fubini_a{a:g}_b{b:g}", res < FUBINI_TOLERANCE, res, FUBINI_TOLERANCE))
        else:
            ok = res < base[(a, b)]
            report.verdicts.append(Verdict(f"fubini_refinement_a{a:g}_b{b:g}", ok, res, base[(a, b)],
                                           "residual must drop under 2x refinement"))


def _leckband_suite(cfg: ExperimentConfig, rng, report: RunReport, rows: list):
    scale = float(cfg.section("verify")["leckband_density_scale"])
    samples = cfg.section("verify")["samples"]
    worst_mass = 0.0
    for n in (2, 3):
        q = sphere_quadrature(n, 96)
        worst = 0.0
        for i in range(samples):
            x = _unit(rng, n) * rng.uniform(0.1, 3.0)
            b = rng.uniform(0.1, 3.0)
            c, k, d = rng.uniform(0.05, 0.5), rng.uniform(0.5, 2.0), rng.uniform(-0.5, 0.5)

            def h(t, c=c, k=k, d=d):
                t = np.asarray(t)
                return np.exp(-c * t * t) * (1.0 + d * np.cos(k * t))

            got = leckband_integrate(h, x, b, n, density_scale=scale)
            ref = integrate_sphere(lambda z: h(np.linalg.norm(z, axis=-1)), SphereDescriptor(x, b, n), q)
            worst = max(worst, abs(got - ref) / abs(ref))
            mass = leckband_integrate(lambda t: np.ones_like(t), x, b, n, density_scale=scale)
            worst_mass = max(worst_mass, abs(mass - sphere_area(n) * b ** (n - 1)) / (sphere_area(n) * b ** (n - 1)))
        rows.append([f"leckband_n{n}", samples, worst, LECKBAND_TOLERANCE, ""])
        report.verdicts.append(Verdict(f"leckband_n{n}", worst <= LECKBAND_TOLERANCE, worst, LECKBAND_TOLERANCE))
    rows.append(["leckband_mass", 2 * samples, worst_mass, MASS_TOLERANCE, ""])
    report.verdicts.append(Verdict("leckband_mass", worst_mass <= MASS_TOLERANCE, worst_mass, MASS_TOLERANCE))


def kernel_parameters(n: int) -> tuple[float, float, float]:
    """``(a, b, lambda)`` used by the uniform-bound checks in dimension ``n``."""
    return (1.0, 1.5, 0.5) if n == 3 else (0.5, 1.0, 0.25)


def kernel_samples(rng, n: int, count: int):
    """Random ``(x, sphere)`` pairs with ``rho`` log-uniform in ``[1e-2, 1e3]``.

    A third of the points lie exactly on the sphere, the rest at relative
    offsets in ``[-1, 3]``.
    """
    out = []
    for i in range(count):
        rho = 10.0 ** rng.uniform(-2.0, 3.0)
        center = rng.normal(size=n)
        u = _unit(rng, n)
        offset = 0.0 if i % 3 == 0 else rng.uniform(-1.0, 3.0)
        out.append((center + rho * (1.0 + offset) * u, SphereDescriptor(center, rho, n)))
    return out


def kernel_maxima(samples, n: int, refine: int) -> tuple[float, float]:
    a, b, lam = kernel_parameters(n)
    ab = max(kernel_integral_ab(x, s, a, b, refine=refine) for x, s in samples)
    lam_max = max(kernel_integral_lambda(x, s, lam, refine=refine) / s.radius ** (2 * lam) for x, s in samples)
    return ab, lam_max


def _kernel_suite(cfg: ExperimentConfig, rng, report: RunReport, rows: list):
    n = cfg.dimension
    samples = kernel_samples(rng, n, cfg.section("verify")["kernel_samples"])
    base = kernel_maxima(samples, n, 1)
    fine = kernel_maxima(samples, n, 2)
    for name, lo, hi in (("kernel_ab_uniform", base[0], fine[0]), ("kernel_lambda_uniform", base[1], fine[1])):
        change = abs(hi - lo) / hi
        ok = math.isfinite(lo) and math.isfinite(hi) and change < KERNEL_REFINEMENT_TOLERANCE
        rows.append([name, len(samples), change, KERNEL_REFINEMENT_TOLERANCE, f"max={lo!r} refined={hi!r}"])
        report.verdicts.append(Verdict(name, ok, change, KERNEL_REFINEMENT_TOLERANCE, f"max {hi:.6g}"))


def holder_samples(rng, n: int, count: int):
    """Pairs ``(xi, t)`` with ``|xi| |t| <= 1`` over six decades of ``|xi|``."""
    xi = rng.normal(size=(count, n))
    xi *= (10.0 ** rng.uniform(-3, 3, size=count) / np.linalg.norm(xi, axis=1))[:, None]
    t = rng.normal(size=(count, n))
    t *= (rng.uniform(0, 1, size=count) / np.linalg.norm(t, axis=1) / np.linalg.norm(xi, axis=1))[:, None]
    return xi, t


def _holder_suite(cfg: ExperimentConfig, rng, report: RunReport, rows: list):
    xi, t = holder_samples(rng, cfg.dimension, cfg.section("verify")["holder_samples"])
    worst = math.inf
    for alpha in (0.25, 0.5, 0.75):
        margin = float(np.min(holder_kernel_inequality(xi, t, alpha)))
        worst = min(worst, margin)
        rows.append([f"holder_alpha{alpha:g}", xi.shape[0], margin, 0.0, "min of 2|xi|^a|t|^a - |e^{i xi.t}-1|"])
    report.verdicts.append(Verdict("holder_kernel", worst >= 0.0, worst, 0.0))


def run_verify(cfg: ExperimentConfig) -> RunReport:
    """Identity and bound suites on seeded random inputs."""
    start = time.perf_counter()
    report = RunReport(cfg)
    rows: list = []
    rng = np.random.default_rng(cfg.seed)
    suite_rngs = [np.random.default_rng(s) for s in rng.integers(0, 2**63 - 1, size=5)]
    _santalo_suite(cfg, suite_rngs[0], report, rows)
    _fubini_suite(cfg, suite_rngs[1], report, rows, cfg.threads)
    _leckband_suite(cfg, suite_rngs[2], report, rows)
    _kernel_suite(cfg, suite_rngs[3], report, rows)
    _holder_suite(cfg, suite_rngs[4], report, rows)
    report.tables["results"] = Table(["check", "case", "value", "threshold", "note"], rows)
    report.wall_clock_seconds = time.perf_counter() - start
    return report


# ------------------------------------------------------------------------ q2

def _profile(cfg: ExperimentConfig):
    spec = cfg.section("profile")
    try:
        return profile_from_spec(spec["kind"], cfg.dimension, spec.get("params", {}),
                                 float(spec.get("scale", 1.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad profile specification: {exc}") from None


Q2_COLUMNS = ["R", "chi", "s1_re", "s1_im", "pv_re", "pv_im", "q2_paper_re", "q2_paper_im",
              "q2_plemelj_re", "q2_plemelj_im", "tail_estimate", "rotation_gap", "flag"]


def _q2_row(q, R: float, direction, second, pv_cfg, C0):
    res = disp.principal_value(q, R * direction, pv_cfg)
    sample = disp.DispersionSample.build(R * direction, res.s1_value, res.value)
    chi = disp.cutoff_chi(R * direction, C0)
    gap = 0.0
    if second is not None:
        other = disp.principal_value(q, R * second, pv_cfg)
        gap = max(relative_gap(res.s1_value, other.s1_value), relative_gap(res.value, other.value))
    flags = []
    if not (np.isfinite(sample.q2_paper) and np.isfinite(sample.q2_plemelj)):
        flags.append("nonfinite")
    if res.tail_estimate > pv_cfg.tail_tolerance * abs(res.value):
        flags.append("truncation")
    paper, plem = chi * sample.q2_paper, chi * sample.q2_plemelj
    return [R, chi, sample.s1_value.real, sample.s1_value.imag, sample.pv_value.real, sample.pv_value.imag,
            paper.real, paper.imag, plem.real, plem.imag, res.tail_estimate, gap, ";".join(flags)]


def run_q2_scan(cfg: ExperimentConfig) -> RunReport:
    """``chi * Q2`` along a ray over geometric radii, with a second direction for rotation checks."""
    start = time.perf_counter()
    report = RunReport(cfg)
    q = _profile(cfg)
    pv_cfg = cfg.pv
    direction, second = cfg.directions()
    ray = cfg.section("ray")
    radii = geometric_radii(ray["radius_min"], ray["radius_max"], ray["per_octave"])
    rows = parallel_map(lambda R: _q2_row(q, float(R), direction, second, pv_cfg, cfg.raw["C0"]),
                        radii, cfg.threads)
    report.tables["results"] = Table(Q2_COLUMNS, rows)
    worst_gap = max(r[11] for r in rows)
    report.verdicts.append(Verdict("rotation_invariance", worst_gap <= 1e-10, worst_gap, 1e-10))
    flagged = [f"R={r[0]:g}:{r[12]}" for r in rows if r[12]]
    report.verdicts.append(Verdict("finite_values", not any("nonfinite" in r[12] for r in rows), None, None))
    if flagged:
        report.notes.append("flagged rows: " + ", ".join(flagged))
    report.wall_clock_seconds = time.perf_counter() - start
    return report


# -------------------------------------------------------------------- oracle

ORACLE_COLUMNS = ["eta_norm", "eta_direction", "q2_plemelj_re", "q2_plemelj_im", "oracle_re", "oracle_im",
                  "relative_error", "extrapolation_spread", "settled", "tail_estimate", "truncated"]


def oracle_etas(cfg: ExperimentConfig) -> list[np.ndarray]:
    """``count`` frequencies with geometric magnitudes and seeded random directions."""
    sec = cfg.section("oracle")
    count = int(sec["count"])
    mags = np.geomspace(sec["eta_min"], sec["eta_max"], count)
    dirs = disp.sample_directions(cfg.dimension, count, cfg.seed)
    return [m * d for m, d in zip(mags, dirs)]


def _oracle_row(q, eta, pv_cfg):
    res = disp.principal_value(q, eta, pv_cfg)
    sample = disp.DispersionSample.build(eta, res.s1_value, res.value)
    orc = disp.q2_resolvent_oracle(q, eta, pv_cfg, detail=True, warn=False)
    err = relative_gap(orc.value, sample.q2_plemelj)
    spread = abs(orc.extrapolations[-1] - orc.extrapolations[-2])
    norm = float(np.linalg.norm(eta))
    direction = " ".join(format(c, ".17g") for c in eta / norm)
    return [norm, direction, sample.q2_plemelj.real, sample.q2_plemelj.imag, orc.value.real, orc.value.imag,
            err, spread, disp.extrapolations_settle(orc.extrapolations), res.tail_estimate,
            res.tail_estimate > pv_cfg.tail_tolerance * abs(res.value)]


def run_oracle_compare(cfg: ExperimentConfig) -> RunReport:
    """Resolvent-limit oracle against ``-i pi S_1 + P`` at sampled frequencies."""
    start = time.perf_counter()
    pv_cfg = cfg.pv
    if len(pv_cfg.eps_ladder) < 3:
        raise ConfigError(f"the oracle needs at least 3 ladder widths, got {len(pv_cfg.eps_ladder)}")
    report = RunReport(cfg)
    q = _profile(cfg)
    rows = parallel_map(lambda eta: _oracle_row(q, eta, pv_cfg), oracle_etas(cfg), cfg.threads)
    report.tables["results"] = Table(ORACLE_COLUMNS, rows)
    errs = np.array([r[6] for r in rows])
    sec = cfg.section("oracle")
    med, worst = float(np.median(errs)), float(np.max(errs))
    report.verdicts.append(Verdict("oracle_median", med <= sec["median_tolerance"], med, sec["median_tolerance"]))
    report.verdicts.append(Verdict("oracle_max", worst <= sec["max_tolerance"], worst, sec["max_tolerance"]))
    unsettled = [f"{r[0]:.6g}" for r in rows if not r[8]]
    if unsettled:
        report.notes.append("extrapolation did not settle monotonically at |eta| = " + ", ".join(unsettled))
    truncated = [f"{r[0]:.6g}" for r in rows if r[10]]
    if truncated:
        report.notes.append(f"r_max={pv_cfg.r_max:g} truncates both sides at |eta| = " + ", ".join(truncated)
                            + "; raise pv.r_max for untruncated values")
    report.wall_clock_seconds = time.perf_counter() - start
    return report


# -------------------------------------------------------------- epsilon scan

def predicted_gain(beta: float, n: int) -> float:
    """Optimal regularity gain ``min(beta - (n - 4)/2, 1)`` for radial potentials."""
    return min(beta - (n - 4) / 2, 1.0)


def kink_location(n: int) -> float:
    return (n - 2) / 2


def kink_slopes(betas, values, n: int):
    """Secant slopes below and above the kink.

    Below: from the smallest ``beta`` to the first grid point past the kink.
    Above: from that point to the largest ``beta``. ``None`` if the grid
    does not straddle the kink with room on the upper side.
    """
    betas = np.asarray(betas, dtype=float)
    values = np.asarray(values, dtype=float)
    kink = kink_location(n)
    past = np.flatnonzero(betas > kink)
    if betas[0] >= kink or past.size == 0 or past[0] == len(betas) - 1:
        return None
    j = past[0]
    below = (values[j] - values[0]) / (betas[j] - betas[0])
    above = (values[-1] - values[j]) / (betas[-1] - betas[j])
    return below, above


SCAN_COLUMNS = ["beta", "R", "q2_paper_re", "q2_paper_im", "q2_plemelj_re", "q2_plemelj_im", "tail_estimate"]
FIT_COLUMNS = ["beta", "s", "decay_exponent", "alpha_hat", "target", "margin", "r2", "status"]


def run_epsilon_scan(cfg: ExperimentConfig) -> RunReport:
    """Decay of ``|Q2|`` along a ray for the power family, against ``beta + eps(beta)``."""
    start = time.perf_counter()
    report = RunReport(cfg)
    n = cfg.dimension
    sec = cfg.section("epsilon_scan")
    pv_cfg = cfg.pv
    direction, _ = cfg.directions()
    radii = geometric_radii(sec["radius_min"], sec["radius_max"], sec["per_octave"])
    floor = min(0.0, (n - 4) / 2)
    betas = []
    for beta in sec["betas"]:
        if beta < floor:
            report.notes.append(f"beta={beta:g} skipped: out-of-theorem-range (needs beta >= {floor:g})")
        else:
            betas.append(float(beta))
    profiles = {beta: power_profile(beta + n / 2, n) for beta in betas}
    jobs = [(beta, float(R)) for beta in betas for R in radii]

    def run(job):
        beta, R = job
        res = disp.principal_value(profiles[beta], R * direction, pv_cfg)
        smp = disp.DispersionSample.build(R * direction, res.s1_value, res.value)
        chi = disp.cutoff_chi(R * direction, cfg.raw["C0"])
        return [beta, R, (chi * smp.q2_paper).real, (chi * smp.q2_paper).imag,
                (chi * smp.q2_plemelj).real, (chi * smp.q2_plemelj).imag, res.tail_estimate]

    rows = parallel_map(run, jobs, cfg.threads)
    report.tables["results"] = Table(SCAN_COLUMNS, rows)

    fits = []
    alpha_hats = []
    for beta in betas:
        mine = [r for r in rows if r[0] == beta]
        if sec["form"] == "plemelj":
            mags = [abs(complex(r[4], r[5])) for r in mine]
        else:
            mags = [abs(complex(r[2], r[3])) for r in mine]
        fit = fit_decay_exponent([r[1] for r in mine], mags)
        alpha_hat = fit.exponent - n / 2
        target = beta + predicted_gain(beta, n)
        margin = alpha_hat - target
        status = "inconclusive" if fit.r2 < sec["min_r2"] else ("pass" if abs(margin) <= sec["tolerance"] else "fail")
        fits.append([beta, beta + n / 2, fit.exponent, alpha_hat, target, margin, fit.r2, status])
        alpha_hats.append(alpha_hat)
        report.verdicts.append(Verdict(f"epsilon_beta{beta:g}", status == "pass", margin, sec["tolerance"],
                                       f"alpha_hat={alpha_hat:.4f} target={target:.4f} r2={fit.r2:.5f} {status}"))
    report.tables["fits"] = Table(FIT_COLUMNS, fits)

    slopes = kink_slopes(betas, alpha_hats, n) if betas else None
    if slopes is not None:
        predicted = kink_slopes(betas, [b + predicted_gain(b, n) for b in betas], n)
        drop, expected = slopes[0] - slopes[1], predicted[0] - predicted[1]
        ok = drop >= 0.5 * expected
        report.verdicts.append(Verdict("epsilon_kink", ok, drop, 0.5 * expected,
                                       f"slopes below/above kink {slopes[0]:.4f}/{slopes[1]:.4f}, "
                                       f"predicted {predicted[0]:.4f}/{predicted[1]:.4f}"))
    else:
        report.notes.append("kink check skipped: beta grid does not straddle the kink")
    report.notes.append(HEURISTIC_NOTE)
    report.wall_clock_seconds = time.perf_counter() - start
    return report


CAMPAIGN_RUNNERS = {
    "verify": run_verify,
    "q2": run_q2_scan,
    "oracle": run_oracle_compare,
    "epsilon-scan": run_epsilon_scan,
}


def run_campaign(cfg: ExperimentConfig) -> RunReport:
    return CAMPAIGN_RUNNERS[cfg.campaign](cfg)
