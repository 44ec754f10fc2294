import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from q2scatter.errors import DegenerateGeometryError, DivergentIntegralError, UnsupportedDimensionError
from q2scatter.geometry import (
    Hyperplane,
    SphereDescriptor,
    ewald_sphere,
    fubini_residual,
    gaussian_pair_case,
    graded_sphere_quadrature,
    integrate_hyperplane_disc,
    integrate_sphere,
    kernel_integral_ab,
    kernel_integral_lambda,
    leckband_density,
    leckband_integrate,
    nr_surface,
    orthonormal_complement,
    rotation_to_axis,
    santalo_residual,
    santalo_sides,
    sphere_area,
    sphere_quadrature,
)

vec3 = st.lists(st.floats(-10, 10), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 1e-3)


class TestSurfaces:
    def test_ewald_examples(self):
        s = ewald_sphere([2.0, 0.0, 0.0], 1.0)
        np.testing.assert_array_equal(s.center, [1.0, 0.0, 0.0])
        assert s.radius == 1.0
        s = ewald_sphere([0.0, 4.0], 0.5)
        np.testing.assert_array_equal(s.center, [0.0, 2.0])
        assert s.radius == 1.0 and s.dim == 2

    def test_zero_eta_rejected(self):
        with pytest.raises(DegenerateGeometryError):
            ewald_sphere([0.0, 0.0, 0.0], 1.0)
        with pytest.raises(DegenerateGeometryError):
            nr_surface([0.0, 0.0], 0.5)

    def test_nr_sphere(self):
        s = nr_surface([1.0, 0.0, 0.0], 0.5)
        np.testing.assert_allclose(s.center, [8 / 3, 0, 0], rtol=1e-15)
        assert s.radius == pytest.approx(4 / 3, rel=1e-15)
        eta = np.array([4.0, 0.0, 0.0])
        assert abs(s.residual(eta)) < 1e-14
        assert np.linalg.norm(np.array([1.0, 0, 0]) - eta / 2) == pytest.approx(0.5 * np.linalg.norm(eta / 2))

        s = nr_surface([0.0, 0.0, 3.0], 2.0)
        np.testing.assert_allclose(s.center, [0, 0, -2], atol=1e-15)
        assert s.radius == pytest.approx(4.0)

    def test_nr_hyperplane(self):
        h = nr_surface([1.0, 0.0, 0.0], 1.0)
        assert isinstance(h, Hyperplane)
        eta = np.array([1.0, 5.0, 0.0])
        assert h.residual(eta) == 0.0
        xi = np.array([1.0, 0.0, 0.0])
        assert np.linalg.norm(xi - eta / 2) == pytest.approx(np.linalg.norm(eta / 2))
        assert np.linalg.norm(eta / 2) == pytest.approx(math.sqrt(26) / 2)

    @given(vec3, st.floats(0.05, 5.0).filter(lambda r: abs(r - 1) > 1e-3))
    def test_dual_surface_contains_its_etas(self, xi, r):
        # every eta on N_r(xi) has xi on its Ewald sphere
        s = nr_surface(xi, r)
        q = sphere_quadrature(3, 6)
        etas = s.center + s.radius * q.nodes
        for eta in etas[::5]:
            if np.linalg.norm(eta) < 1e-9:
                continue
            g = ewald_sphere(eta, r)
            assert abs(g.residual(np.asarray(xi))) <= 1e-9 * max(1.0, g.radius)

    @given(vec3, st.floats(0.1, 4.0))
    def test_antipodal_map_preserves_ewald_sphere(self, eta, r):
        eta = np.asarray(eta)
        s = ewald_sphere(eta, r)
        pts = s.center + s.radius * graded_sphere_quadrature(3, 8, 4).nodes
        mirrored = eta - pts
        assert np.max(np.abs(s.residual(mirrored))) <= 1e-12 * max(1.0, s.radius)

    @given(vec3)
    def test_frames(self, axis):
        axis = np.asarray(axis)
        frame = orthonormal_complement(axis)
        np.testing.assert_allclose(frame @ frame.T, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(frame @ axis, 0, atol=1e-12 * np.linalg.norm(axis))
        rot = rotation_to_axis(axis)
        np.testing.assert_allclose(rot @ rot.T, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(rot @ [0, 0, 1], axis / np.linalg.norm(axis), atol=1e-12)

    def test_frame_fallback_is_deterministic(self):
        a = orthonormal_complement([1.0, 1e-10, 0.0])
        b = orthonormal_complement([1.0, 1e-10, 0.0])
        np.testing.assert_array_equal(a, b)


class TestQuadrature:
    @pytest.mark.parametrize("n", [2, 3])
    @pytest.mark.parametrize("order", [4, 9, 16])
    def test_weights_and_nodes(self, n, order):
        q = sphere_quadrature(n, order)
        assert abs(q.weights.sum() - sphere_area(n)) <= 1e-12 * sphere_area(n)
        assert np.all(q.weights > 0)
        assert np.max(np.abs(np.linalg.norm(q.nodes, axis=1) - 1)) <= 1e-12

    def test_examples(self):
        q3 = sphere_quadrature(3, 4)
        assert integrate_sphere(lambda p: np.ones(len(p)), SphereDescriptor([0, 0, 0], 1.0, 3), q3) == pytest.approx(4 * math.pi, rel=1e-14)
        assert integrate_sphere(lambda p: p[:, 0] ** 2, SphereDescriptor([0, 0, 0], 1.0, 3), q3) == pytest.approx(4 * math.pi / 3, rel=1e-13)
        q2 = sphere_quadrature(2, 4)
        assert integrate_sphere(lambda p: p[:, 0] ** 2, SphereDescriptor([0, 0], 1.0, 2), q2) == pytest.approx(math.pi, rel=1e-14)
        s2 = SphereDescriptor([1.0, -2.0, 0.5], 2.0, 3)
        assert integrate_sphere(lambda p: np.ones(len(p)), s2, q3) == pytest.approx(16 * math.pi, rel=1e-14)
        assert integrate_sphere(lambda p: np.zeros(len(p)), s2, q3) == 0.0

    def test_unsupported_dimension(self):
        with pytest.raises(UnsupportedDimensionError):
            sphere_quadrature(4, 8)
        with pytest.raises(ValueError):
            sphere_quadrature(3, 3)

    @pytest.mark.parametrize("order", [6, 10, 15])
    def test_polynomial_exactness(self, order):
        # monomial moments on S^2: exact values from the Gamma-function formula
        q = sphere_quadrature(3, order)
        unit = SphereDescriptor([0, 0, 0], 1.0, 3)
        for i in range(0, order + 1, 2):
            for j in range(0, order + 1 - i, 2):
                k = order - i - j if (order - i - j) % 2 == 0 else order - i - j - 1
                exact = 2 * math.gamma((i + 1) / 2) * math.gamma((j + 1) / 2) * math.gamma((k + 1) / 2) / math.gamma((i + j + k + 3) / 2)
                got = integrate_sphere(lambda p: p[:, 0] ** i * p[:, 1] ** j * p[:, 2] ** k, unit, q)
                assert got == pytest.approx(exact, rel=1e-12)

    def test_circle_exactness(self):
        q = sphere_quadrature(2, 12)
        unit = SphereDescriptor([0, 0], 1.0, 2)
        got = integrate_sphere(lambda p: p[:, 0] ** 6 * p[:, 1] ** 6, unit, q)
        assert got == pytest.approx(2 * math.gamma(3.5) ** 2 / math.gamma(7), rel=1e-12)

    def test_gaussian_self_convergence(self):
        s = SphereDescriptor([0.3, -0.2, 0.5], 1.5, 3)

        def f(p):
            return np.exp(-np.sum((p - 0.4) ** 2, axis=-1))

        a = integrate_sphere(f, s, sphere_quadrature(3, 24))
        b = integrate_sphere(f, s, sphere_quadrature(3, 48))
        assert abs(a - b) / abs(b) < 1e-8

    def test_antipodal_closure(self):
        for q in (sphere_quadrature(3, 8), sphere_quadrature(2, 8), graded_sphere_quadrature(3, 8, 6)):
            gaps = np.linalg.norm(q.nodes[:, None, :] + q.nodes[None, :, :], axis=-1).min(axis=1)
            assert gaps.max() < 1e-12

    def test_graded_rule_rotation(self):
        q = graded_sphere_quadrature(3, 8, 6)
        r = q.rotated([1.0, 1.0, 0.0])
        assert r.weights.sum() == pytest.approx(4 * math.pi, rel=1e-12)


class TestDisc:
    def test_area(self):
        assert integrate_hyperplane_disc(lambda v: np.ones(len(v)), [0.0, 2.0, 0.0]) == pytest.approx(4 * math.pi, rel=1e-13)

    def test_vanishing_integrand(self):
        xi = np.array([1.0, -2.0, 0.5])
        assert abs(integrate_hyperplane_disc(lambda v: v @ xi, xi)) < 1e-13

    def test_radial_gaussian(self):
        xi = np.array([0.5, 1.0, -1.0])
        R = np.linalg.norm(xi)
        got = integrate_hyperplane_disc(lambda v: np.exp(-np.sum(v * v, axis=-1)), xi)
        assert got == pytest.approx(math.pi * (1 - math.exp(-R * R)), rel=1e-8)

    def test_two_dimensions(self):
        got = integrate_hyperplane_disc(lambda v: np.ones(len(v)), [3.0, 4.0])
        assert got == pytest.approx(10.0, rel=1e-13)

    def test_zero_xi(self):
        with pytest.raises(DegenerateGeometryError):
            integrate_hyperplane_disc(lambda v: v[:, 0], [0.0, 0.0, 0.0])


class TestFubini:
    def test_zero_function(self):
        f = lambda eta, xi: np.zeros(eta.shape[:-1])
        box = [(1.0, 2.0)] * 3
        assert fubini_residual(f, 0.5, 0.25, box, box, panels=1, points=4, sphere_order=8) == 0.0

    def test_equal_parameters_rejected(self):
        box = [(1.0, 2.0)] * 3
        with pytest.raises(ValueError):
            fubini_residual(lambda e, x: np.ones(e.shape[:-1]), 0.5, 0.5, box, box)

    @pytest.mark.slow
    def test_truncated_gaussians_converge(self):
        axis = np.array([0.0, 0.0, 1.0])
        perp = np.array([1.0, 0.0, 0.0])
        f, eta_box, xi_box = gaussian_pair_case(0.5, 0.25, axis, perp)
        base = fubini_residual(f, 0.5, 0.25, eta_box, xi_box)
        fine = fubini_residual(f, 0.5, 0.25, eta_box, xi_box, panels=4, sphere_order=32)
        assert base < 1e-3
        assert fine < base


class TestSantalo:
    def test_constant(self):
        lhs, rhs, _ = santalo_sides(lambda w: np.ones(w.shape[:-1]), sphere_quadrature(3, 6))
        assert lhs == pytest.approx(8 * math.pi**2, rel=1e-14)
        assert rhs == pytest.approx(8 * math.pi**2, rel=1e-14)

    def test_odd_function(self):
        lhs, rhs, _ = santalo_sides(lambda w: w[..., 0], sphere_quadrature(3, 6))
        assert abs(lhs) < 1e-13 and abs(rhs) < 1e-13

    @pytest.mark.parametrize("order", [6, 8, 12])
    def test_quadratic(self, order):
        assert santalo_residual(lambda w: w[..., 0] ** 2, sphere_quadrature(3, order)) < 1e-10

    def test_smooth_nonpolynomial(self):
        f = lambda w: np.exp(0.7 * w[..., 0] - 0.3 * w[..., 2])
        assert santalo_residual(f, sphere_quadrature(3, 12)) < 1e-6

    def test_circle_unsupported(self):
        with pytest.raises(UnsupportedDimensionError):
            santalo_residual(lambda w: w[..., 0], sphere_quadrature(2, 8))


class TestLeckband:
    def test_support(self):
        x = np.array([2.0, 0.0, 0.0])
        vals = leckband_density(x, 1.0, np.array([0.5, 0.999, 3.0001, 4.0]), 3)
        np.testing.assert_array_equal(vals, 0.0)

    def test_point_value(self):
        assert leckband_density([0.0, 2.0, 0.0], 1.0, np.array([2.0]), 3)[0] == pytest.approx(2 * math.pi, rel=1e-15)

    @pytest.mark.parametrize("n", [2, 3])
    def test_total_mass(self, n):
        for xn, b in [(2.0, 1.0), (0.3, 1.7), (1.0, 1.0), (5.0, 0.1)]:
            x = np.zeros(n)
            x[0] = xn
            got = leckband_integrate(lambda t: np.ones_like(t), x, b, n)
            assert got == pytest.approx(sphere_area(n) * b ** (n - 1), rel=1e-10)

    def test_small_x_limit(self):
        for xn in (1e-6, 0.0):
            got = leckband_integrate(lambda t: np.ones_like(t), np.array([xn, 0, 0]), 1.3, 3)
            assert got == pytest.approx(4 * math.pi * 1.3**2, rel=1e-10)

    def test_mass_by_quadrature_of_density(self):
        from scipy.integrate import quad
        x = np.array([0.0, 1.2, 0.0])
        val, _ = quad(lambda t: leckband_density(x, 0.7, np.array([t]), 3)[0], 0.5, 1.9)
        assert val == pytest.approx(4 * math.pi * 0.49, rel=1e-10)

    @pytest.mark.parametrize("n", [2, 3])
    @settings(max_examples=25, deadline=None)
    @given(xn=st.floats(0.05, 4.0), b=st.floats(0.05, 4.0), c=st.floats(0.05, 1.0))
    def test_matches_sphere_quadrature(self, n, xn, b, c):
        x = np.zeros(n)
        x[-1] = xn
        h = lambda t: np.exp(-c * np.asarray(t) ** 2) * np.cos(0.5 * np.asarray(t))
        got = leckband_integrate(h, x, b, n)
        ref = integrate_sphere(lambda z: h(np.linalg.norm(z, axis=-1)), SphereDescriptor(x, b, n), sphere_quadrature(n, 96))
        assert abs(got - ref) <= 1e-6 * abs(ref) + 1e-14


class TestKernels:
    def test_center(self):
        s = SphereDescriptor([0.0, 0.0, 0.0], 1.0, 3)
        got = kernel_integral_ab(np.zeros(3), s, 1.0, 1.2)
        assert got == pytest.approx(4 * math.pi * 2 ** -0.6, rel=1e-10)

    def test_far_field(self):
        s = SphereDescriptor([0.0, 0.0, 0.0], 1.0, 3)
        D = 1e3
        got = kernel_integral_ab(np.array([0.0, 0.0, D + 1.0]), s, 1.0, 1.2)
        approx = 4 * math.pi * D ** -1.0 * (1 + D * D) ** -0.6
        assert abs(got - approx) / approx < 0.1

    def test_on_sphere_divergent(self):
        s = SphereDescriptor([0.0, 0.0, 0.0], 1.0, 3)
        with pytest.raises(DivergentIntegralError):
            kernel_integral_ab(np.array([1.0, 0.0, 0.0]), s, 2.0, 1.0)

    def test_on_sphere_bounded_over_scales(self):
        vals = []
        for rho in (1e-2, 1e-1, 1.0, 10.0, 1e2, 1e3):
            s = SphereDescriptor([0.0, 0.0, 0.0], rho, 3)
            vals.append(kernel_integral_ab(np.array([0.0, rho, 0.0]), s, 1.0, 1.5))
        assert max(vals) < 40.0
        assert all(np.isfinite(vals))

    def test_on_sphere_exact_value(self):
        # |x-y|^-1 over the unit sphere through x: 4 pi (potential of a shell)
        s = SphereDescriptor([0.0, 0.0, 0.0], 1.0, 3)
        got = kernel_integral_ab(np.array([1.0, 0.0, 0.0]), s, 1.0, 0.0)
        assert got == pytest.approx(4 * math.pi, rel=1e-4)

    def test_lambda_examples(self):
        s = SphereDescriptor([0.0, 0.0, 0.0], 2.0, 3)
        assert kernel_integral_lambda(np.array([5.0, 0, 0]), s, 1.0) == pytest.approx(16 * math.pi, rel=1e-12)
        unit = SphereDescriptor([0.0, 0.0, 0.0], 1.0, 3)
        assert kernel_integral_lambda(np.zeros(3), unit, 0.5) == pytest.approx(4 * math.pi, rel=1e-12)
        with pytest.raises(ValueError):
            kernel_integral_lambda(np.zeros(3), unit, 1.5)

    def test_lambda_scaling(self):
        ratios = []
        for rho in (1.0, 10.0, 100.0):
            s = SphereDescriptor([0.0, 0.0, 0.0], rho, 3)
            for u in ([1.0, 0, 0], [0, 0.6, 0.8]):
                ratios.append(kernel_integral_lambda(rho * np.array(u), s, 0.5) / rho)
        np.testing.assert_allclose(ratios, 4 * math.pi, rtol=1e-4)
