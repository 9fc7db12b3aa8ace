"""Numerics for special Lagrangian cylinders over Harvey-Lawson torus cones.

Subpackages by concern: exact link spectra (``lattice``), cylinder harmonic
mode algebra (``harmonics``), embedded geometry and moment maps
(``geometry``), quadrature grids (``quadrature``), measured graph quantities
(``excess``), the three-case decay iteration (``simulate``), and the command
line front end (``cli``).
"""

__version__ = "0.1.0"

from .lattice import eigenvalue_of, enumerate_modes, multiplicity, rigidity_report

__all__ = [
    "eigenvalue_of",
    "enumerate_modes",
    "multiplicity",
    "rigidity_report",
    "__version__",
]
