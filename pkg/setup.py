from setuptools import setup, Extension

import numpy as np

# The compiled kernel is optional: windband.kernels falls back to the
# numpy implementation when windband._core is not importable.
try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "windband._core",
                ["src/windband/_core.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-ffast-math"],
                libraries=["mvec", "m"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
