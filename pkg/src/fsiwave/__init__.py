"""Time-domain acoustic scattering by a rough surface with an embedded elastic body.

The unbounded fluid is truncated by a hemisphere carrying the exact
Dirichlet-to-Neumann condition; Laplace-domain solves and a convolution
quadrature time stepper share the same finite element blocks.
"""

__version__ = "0.1.0"
