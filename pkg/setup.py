"""Build script for the optional compiled tensor kernels.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so a missing compiler or Cython is not fatal.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "oldroyd._kernels",
                ["src/oldroyd/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
