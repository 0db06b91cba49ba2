"""Build hook for the optional compiled core.

The package is fully functional without the extension (a NumPy fallback is
selected at import time); building it just makes the particle loops faster.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext = Extension(
        "ssph._speedups",
        ["src/ssph/_speedups.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext.optional = True
    ext_modules = cythonize([ext], language_level=3)
except ImportError:
    # No Cython available: install the pure-Python package.
    pass

setup(ext_modules=ext_modules)
