"""Backend selection for the numerical kernels.

The compiled Cython extension is preferred when it importable; otherwise
the pure-Python implementation is used. ``BACKEND`` records the choice.
Set ``ABFLUX_BACKEND=python`` (or ``cython``) to force one side, e.g. for
the benchmark in ``benchmarks/bench_backends.py``.
"""

from __future__ import annotations

import os

_forced = os.environ.get("ABFLUX_BACKEND", "").strip().lower()

if _forced == "python":
    from . import _ellip_py as _impl

    BACKEND = "python"
elif _forced == "cython":
    from . import _ellip_cy as _impl  # type: ignore[no-redef]

    BACKEND = "cython"
else:
    try:
        from . import _ellip_cy as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        from . import _ellip_py as _impl

        BACKEND = "python"

ellipk = _impl.ellipk
ellipe = _impl.ellipe
ellipk_many = _impl.ellipk_many
ellipe_many = _impl.ellipe_many
profile_integrand = _impl.profile_integrand
finite_profile_integral = _impl.finite_profile_integral
finite_profile_integral_many = _impl.finite_profile_integral_many

__all__ = [
    "BACKEND",
    "ellipk",
    "ellipe",
    "ellipk_many",
    "ellipe_many",
    "profile_integrand",
    "finite_profile_integral",
    "finite_profile_integral_many",
]
