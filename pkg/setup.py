"""Build hook for the optional compiled kernel extension.

The package is fully functional without the extension: claritk.kernels
falls back to the numpy implementation at import time.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "claritk.kernels._ckernels",
                ["src/claritk/kernels/_ckernels.pyx"],
                include_dirs=[np.get_include()],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
