"""Spheres, hyperplanes, spherical quadrature and geometric-measure identities."""

from .identities import (
    fubini_residual,
    fubini_sides,
    gaussian_pair_case,
    integrate_hyperplane_disc,
    leckband_density,
    leckband_integrate,
    santalo_residual,
    santalo_sides,
    smooth_bump,
)
from .kernels import kernel_integral_ab, kernel_integral_lambda, radial_kernel_on_sphere
from .quadrature import (
    SphericalQuadrature,
    composite_gauss,
    gauss_on,
    graded_sphere_quadrature,
    integrate_sphere,
    sphere_area,
    sphere_quadrature,
)
from .surfaces import (
    Hyperplane,
    SphereDescriptor,
    SurfaceDescriptor,
    ewald_sphere,
    ewald_sphere_ab,
    nr_surface,
    nr_surface_ab,
    orthonormal_complement,
    rotation_to_axis,
)
