"""Build script for the optional compiled kernel extension.

The package works without the extension (a pure-Python backend is selected
at import time); building it just makes gauge-field assembly much faster.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "abflux._ellip_cy",
                ["src/abflux/_ellip_cy.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
