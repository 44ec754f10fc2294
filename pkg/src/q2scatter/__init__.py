"""Numerical study of the quadratic backscattering term of the Born series.

Subpackages and modules:

* ``geometry``: Ewald spheres, spherical quadrature, measure identities.
* ``potentials``: radial potentials given by their Fourier profile.
* ``norms``: weighted Sobolev and L1 norms, decay fits.
* ``dispersion``: sphere operators, principal value, resolvent oracle.
* ``harness``: configuration, campaigns and the CLI.
"""

__version__ = "0.1.0"
