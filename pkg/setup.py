"""Build the optional compiled sampling kernel.

The package works without the extension (mclm.kernels falls back to the
numpy implementation at import time), so a failed cythonization is not
fatal to installation.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    import numpy as np
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "mclm._kernels",
                ["src/mclm/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
