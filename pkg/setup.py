import os

from setuptools import setup

ext_modules = []
if os.environ.get("RICCATI_FOLIATIONS_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "riccati_foliations._ckernels",
                    ["src/riccati_foliations/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False, "cdivision": True},
        )
    except ImportError:
        # no Cython at build time: the pure-Python kernels are used
        ext_modules = []

setup(ext_modules=ext_modules)
