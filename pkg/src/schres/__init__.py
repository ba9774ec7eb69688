"""Scattering resonances of 2D Schrodinger operators -delta + V on a
truncated disk: FEM discretization, Dirichlet-to-Neumann boundary
closure, and a contour-integral spectral indicator eigensolver, with an
analytic constant-potential-disk oracle for validation."""

__version__ = "0.1.0"
