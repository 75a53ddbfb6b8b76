"""Numerical laboratory for the hyperbolic nonlinear Schroedinger equation on R x T.

Modules: ``lattice`` (grids, fields, projectors), ``propagator`` (linear
flows, kernels, Duhamel), ``oracles`` (closed-form measures with Monte
Carlo checks), ``strichartz`` (space-time norms and scaling fits),
``solver`` (split-step integrator, Picard map, scattering) and ``cli``.
"""

__version__ = "0.1.0"

from .lattice import DomainSpec, PhysicalField, SpectralField  # noqa: E402,F401
from .propagator import SymbolKind, evolve  # noqa: E402,F401
