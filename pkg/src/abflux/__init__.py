"""Finite-solenoid vector potentials and magnetic lattice operators.

Modules
-------
potential   closed-form and quadrature evaluations of the azimuthal
            vector-potential component of finite and infinite solenoids
operator    Peierls-coupled finite-difference magnetic Schrodinger
            operators on a truncated plane
resolvent   shifted sparse solves, exterior projection, resolvent distances
experiment  convergence sweeps: impermeable-wall limit, solenoid-length
            limit, and the two-limit commutation diagram
cli         command-line front end (``abflux`` entry point)

``abflux.kernels.BACKEND`` reports whether the compiled kernel extension
or the pure-Python fallback is active.
"""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
