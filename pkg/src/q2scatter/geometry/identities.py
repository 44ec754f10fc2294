"""Geometric-measure identities on Ewald spheres, checked by quadrature.

Each ``*_residual`` function evaluates both sides of an identity with
independent nested quadratures and returns their relative difference.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import roots_jacobi

from ..errors import DegenerateGeometryError, UnsupportedDimensionError
from .quadrature import SphericalQuadrature, _gauss, composite_gauss, gauss_on, sphere_area, sphere_quadrature
from .surfaces import orthonormal_complement


def _relative_gap(lhs, rhs, scale=None) -> float:
    scale = max(abs(lhs), abs(rhs)) if scale is None else scale
    if scale == 0:
        return 0.0
    return float(abs(lhs - rhs) / scale)


def integrate_hyperplane_disc(f, xi, q: SphericalQuadrature | None = None, n_radial: int = 32):
    """Integrate ``f`` over ``D(xi) = {v : v . xi = 0, |v| <= |xi|}``.

    Radial Gauss rule times a rule on the unit sphere of ``xi``'s orthogonal
    complement. For n=3 ``q`` is a circle rule (dim 2); for n=2 the complement
    sphere is the two points ``{-1, +1}`` and ``q`` is ignored.
    """
    xi = np.asarray(xi, dtype=float)
    n = xi.shape[0]
    radius = float(np.linalg.norm(xi))
    if radius == 0:
        raise DegenerateGeometryError("xi must be nonzero")
    frame = orthonormal_complement(xi)  # (n-1, n)
    if n == 2:
        dirs, w_dir = np.array([[1.0], [-1.0]]), np.ones(2)
    else:
        if q is None:
            q = sphere_quadrature(n - 1, 16)
        if q.dim != n - 1:
            raise ValueError(f"disc rule needs a quadrature of dim {n - 1}")
        dirs, w_dir = q.nodes, q.weights
    s, w_s = gauss_on(0.0, radius, n_radial)
    directions = dirs @ frame  # (m_dir, n)
    points = s[:, None, None] * directions[None, :, :]
    values = np.asarray(f(points.reshape(-1, n))).reshape(s.shape[0], -1)
    return np.sum((w_s * s ** (n - 2))[:, None] * w_dir[None, :] * values)


def _tensor_box_rule(box, panels: int, points: int):
    """Tensor Gauss rule on an axis-aligned box ``[(lo, hi), ...]``."""
    axes, wts = [], []
    for lo, hi in box:
        x, w = composite_gauss(np.linspace(lo, hi, panels + 1), points)
        axes.append(x)
        wts.append(w)
    grids = np.meshgrid(*axes, indexing="ij")
    wgrid = np.meshgrid(*wts, indexing="ij")
    nodes = np.stack([g.reshape(-1) for g in grids], axis=-1)
    weights = np.prod(np.stack([g.reshape(-1) for g in wgrid], axis=-1), axis=-1)
    return nodes, weights


def _unit_frames(u):
    """Rows ``(n-1)`` orthonormal to each unit vector in ``u`` (shape (m, n))."""
    m, n = u.shape
    if n == 2:
        return np.stack([-u[:, 1], u[:, 0]], axis=-1)[:, None, :]
    helper = np.zeros_like(u)
    use_y = np.abs(u[:, 0]) > 0.9
    helper[~use_y, 0] = 1.0
    helper[use_y, 1] = 1.0
    v1 = helper - np.sum(helper * u, axis=-1, keepdims=True) * u
    v1 /= np.linalg.norm(v1, axis=-1, keepdims=True)
    v2 = np.cross(u, v1)
    return np.stack([v1, v2], axis=1)


def _cap_rule(centers, radii, ball_center, ball_radius: float, order: int):
    """Nodes and weights on each sphere restricted to the cap inside a ball.

    The integrand vanishes outside ``ball``, so only the cap of polar angle
    ``theta_max`` around the direction of ``ball_center`` contributes. Gauss
    in the polar angle times an equispaced azimuth (n=3), or Gauss over the
    arc (n=2). Weights include ``rho^{n-1}`` and the area element.
    """
    m, n = centers.shape
    offset = ball_center[None, :] - centers
    d = np.linalg.norm(offset, axis=-1)
    cos_max = (radii**2 + d**2 - ball_radius**2) / np.where(d > 0, 2.0 * radii * d, 1.0)
    cos_max = np.where(d > 0, cos_max, np.where(radii <= ball_radius, -1.0, 2.0))
    active = cos_max < 1.0
    theta_max = np.arccos(np.clip(cos_max, -1.0, 1.0))
    axis = np.where(d[:, None] > 0, offset / np.where(d > 0, d, 1.0)[:, None], np.eye(n)[-1])
    frames = _unit_frames(axis)
    x, w = _gauss(max(4, order // 2))
    theta = 0.5 * theta_max[:, None] * (x[None, :] + 1.0)
    w_theta = 0.5 * theta_max[:, None] * w[None, :]
    if n == 2:
        theta = np.concatenate([theta, -theta], axis=1)
        w_theta = np.concatenate([w_theta, w_theta], axis=1)
        dirs = (np.cos(theta)[..., None] * axis[:, None, :]
                + np.sin(theta)[..., None] * frames[:, 0, None, :])
        weights = w_theta * radii[:, None]
    else:
        n_az = max(8, 2 * (order // 2))
        psi = 2.0 * np.pi * np.arange(n_az) / n_az
        ct, st = np.cos(theta)[:, :, None], np.sin(theta)[:, :, None]
        cp, sp = np.cos(psi)[None, None, :], np.sin(psi)[None, None, :]
        dirs = (ct[..., None] * axis[:, None, None, :]
                + (st * cp)[..., None] * frames[:, 0, None, None, :]
                + (st * sp)[..., None] * frames[:, 1, None, None, :]).reshape(m, -1, 3)
        weights = ((w_theta * np.sin(theta))[:, :, None] * np.full(n_az, 2.0 * np.pi / n_az)).reshape(m, -1)
        weights = weights * radii[:, None] ** 2
    weights = weights * active[:, None]
    points = centers[:, None, :] + radii[:, None, None] * dirs
    return points, weights


def _bounding_ball(box):
    box = np.asarray(box, dtype=float)
    center = box.mean(axis=1)
    return center, 0.5 * float(np.linalg.norm(box[:, 1] - box[:, 0]))


def _nested(f_pair, outer_nodes, outer_w, centers, radii, inner_box, order: int,
            weight_fn, outer_first: bool, chunk: int = 512):
    ball_c, ball_r = _bounding_ball(inner_box)
    total = 0.0
    for start in range(0, outer_nodes.shape[0], chunk):
        sl = slice(start, start + chunk)
        o = outer_nodes[sl]
        inner, w_in = _cap_rule(centers[sl], radii[sl], ball_c, ball_r, order)
        o_b = np.broadcast_to(o[:, None, :], inner.shape)
        vals = f_pair(o_b, inner) if outer_first else f_pair(inner, o_b)
        vals = vals * weight_fn(o_b, inner)
        total = total + np.sum(outer_w[sl] * np.sum(w_in * vals, axis=-1))
    return total


def fubini_sides(f, a: float, b: float, eta_box, xi_box, panels: int = 2,
                 points: int = 10, sphere_order: int = 16):
    """Both sides of the Ewald-sphere change of integration order.

    ``f(eta, xi)`` takes broadcastable arrays of shape ``(..., n)`` and must
    vanish unless ``eta`` lies in ``eta_box`` and ``xi`` in ``xi_box``. The
    outer volume integrals use a tensor Gauss rule on the box; the inner
    sphere integrals only cover the cap inside the ball circumscribing the
    other box.

    Returns ``(lhs, rhs)`` where::

        lhs = int d(eta) int_{|xi - a eta| = b|eta|} f dsigma(xi)
        rhs = int d(xi)  int_{|xi - a eta| = b|eta|} f |eta|/|xi| dsigma(eta)
    """
    if a == b:
        raise ValueError("a == b makes the dual fibres hyperplanes; not supported")
    if len(eta_box) not in (2, 3) or len(xi_box) != len(eta_box):
        raise UnsupportedDimensionError("boxes must both have dimension 2 or 3")

    eta_nodes, eta_w = _tensor_box_rule(eta_box, panels, points)
    eta_norm = np.linalg.norm(eta_nodes, axis=-1)
    keep = eta_norm > 0
    lhs = _nested(f, eta_nodes[keep], eta_w[keep], a * eta_nodes[keep], b * eta_norm[keep],
                  xi_box, sphere_order, lambda o, i: 1.0, outer_first=True)

    xi_nodes, xi_w = _tensor_box_rule(xi_box, panels, points)
    xi_norm = np.linalg.norm(xi_nodes, axis=-1)
    keep = xi_norm > 0
    gap = a * a - b * b

    def ratio(xi_pts, eta_pts):
        return np.linalg.norm(eta_pts, axis=-1) / np.linalg.norm(xi_pts, axis=-1)

    rhs = _nested(f, xi_nodes[keep], xi_w[keep], (a / gap) * xi_nodes[keep],
                  b * xi_norm[keep] / abs(gap), eta_box, sphere_order, ratio, outer_first=False)
    return lhs, rhs


def fubini_residual(f, a: float, b: float, eta_box, xi_box, panels: int = 2,
                    points: int = 10, sphere_order: int = 16) -> float:
    """Relative difference between the two sides computed by ``fubini_sides``."""
    lhs, rhs = fubini_sides(f, a, b, eta_box, xi_box, panels, points, sphere_order)
    return _relative_gap(lhs, rhs)


def gaussian_pair_case(a: float, b: float, axis, perp, distance: float = 4.0, width: float = 0.3,
                       box_halfwidth: float = 6.0):
    """Test integrand for ``fubini_sides``: Gaussians in ``eta`` and ``xi`` cut to boxes.

    ``eta`` is centered at ``distance * axis``; ``xi`` at the point
    ``a c + b |c| perp`` of that center's sphere (``perp`` should be a unit
    vector orthogonal to ``axis``). Each factor is multiplied by the
    indicator of its box of half-width ``box_halfwidth * width``, where the
    Gaussian is below ``exp(-box_halfwidth^2 / 2)``; this makes the support
    compact and keeps it away from the origin.

    Returns ``(f, eta_box, xi_box)``.
    """
    axis = np.asarray(axis, dtype=float)
    perp = np.asarray(perp, dtype=float)
    c_eta = distance * axis / np.linalg.norm(axis)
    c_xi = a * c_eta + b * distance * perp / np.linalg.norm(perp)
    half = box_halfwidth * width
    eta_box = [(c - half, c + half) for c in c_eta]
    xi_box = [(c - half, c + half) for c in c_xi]

    def factor(p, c):
        p = np.asarray(p)
        inside = np.all(np.abs(p - c) <= half, axis=-1)
        return np.where(inside, np.exp(-np.sum((p - c) ** 2, axis=-1) / (2.0 * width * width)), 0.0)

    def f(eta, xi):
        return factor(eta, c_eta) * factor(xi, c_xi)

    return f, eta_box, xi_box


def smooth_bump(points, center, radius: float):
    """C-infinity bump ``exp(1 - 1/(1 - s^2))`` with ``s = |x - center|/radius``."""
    s2 = np.sum((np.asarray(points) - np.asarray(center)) ** 2, axis=-1) / radius**2
    out = np.zeros(s2.shape)
    inside = s2 < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s2[inside]))
    return out


def santalo_sides(f, q: SphericalQuadrature, n_inner: int | None = None):
    """Great-subsphere average of ``f`` and ``|S^{n-2}|`` times its sphere integral.

    The inner integral over ``{omega : theta . omega = 0}`` runs over an
    equispaced circle in the orthonormal frame returned by
    ``orthonormal_complement(theta)``.
    """
    if q.dim != 3:
        raise UnsupportedDimensionError(f"Santalo check needs n >= 3 (supported: 3), got {q.dim}")
    m = n_inner or max(8, 2 * math.ceil((q.order + 1) / 2))
    psi = 2.0 * np.pi * np.arange(m) / m
    circle = np.column_stack([np.cos(psi), np.sin(psi)])
    frames = np.array([orthonormal_complement(theta) for theta in q.nodes])  # (k, 2, 3)
    omegas = np.einsum("mj,kjn->kmn", circle, frames)
    inner = (2.0 * np.pi / m) * np.sum(np.asarray(f(omegas.reshape(-1, 3))).reshape(len(q), m), axis=-1)
    lhs = np.sum(q.weights * inner)
    values = np.asarray(f(q.nodes))
    c = sphere_area(q.dim - 1)
    rhs = c * np.sum(q.weights * values)
    scale = c * np.sum(q.weights * np.abs(values))
    return lhs, rhs, scale


def santalo_residual(f, q: SphericalQuadrature) -> float:
    """Relative gap of the Santalo identity, scaled by ``|S^{n-2}| * int |f|``.

    Scaling by the integral of ``|f|`` keeps the residual meaningful for odd
    ``f`` whose two sides both vanish.
    """
    lhs, rhs, scale = santalo_sides(f, q)
    return _relative_gap(lhs, rhs, scale=scale)


def leckband_density(x, b: float, t, n: int, scale: float = 1.0):
    """Density in ``t = |z|`` of surface measure on the sphere ``S_b(x)``.

    Zero outside ``(||x| - b|, |x| + b)``.
    """
    xn = float(np.linalg.norm(x))
    t = np.asarray(t, dtype=float)
    lo, hi = abs(xn - b), xn + b
    inside = (t > lo) & (t < hi)
    p = (n - 3) / 2
    out = np.zeros(t.shape)
    ti = t[inside]
    const = scale * 2.0 ** (3 - n) * sphere_area(n - 1) * xn ** (2 - n) * b
    out[inside] = const * ti * ((hi**2 - ti**2) * (ti**2 - lo**2)) ** p
    return out


def leckband_integrate(h, x, b: float, n: int, nodes: int = 64, density_scale: float = 1.0):
    """Integral of ``h(|z|)`` over the sphere of radius ``b`` centered at ``x``.

    Rewritten in ``s = t^2`` the density is a Jacobi weight
    ``(s_hi - s)^p (s - s_lo)^p`` with ``p = (n-3)/2``, so Gauss-Jacobi nodes
    integrate it exactly and ``h`` only needs to be smooth in ``t^2``.
    ``density_scale`` multiplies the density; it exists so the verification
    campaign can inject a known fault.
    """
    xn = float(np.linalg.norm(x))
    if b <= 0:
        raise ValueError("b must be positive")
    p = (n - 3) / 2
    if xn == 0:
        # the density concentrates at t = b
        return density_scale * sphere_area(n) * b ** (n - 1) * h(np.array([b]))[0]
    s_lo, s_hi = (xn - b) ** 2, (xn + b) ** 2
    half, mid = 0.5 * (s_hi - s_lo), 0.5 * (s_hi + s_lo)
    u, w = roots_jacobi(nodes, p, p)
    s = mid + half * u
    const = density_scale * 2.0 ** (3 - n) * sphere_area(n - 1) * xn ** (2 - n) * b
    # dt = ds / (2t) cancels the factor t in the density
    return 0.5 * const * half ** (2 * p + 1) * np.sum(w * np.asarray(h(np.sqrt(s))))
