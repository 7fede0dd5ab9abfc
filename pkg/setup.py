# Builds the optional compiled tokenizer kernels. The package works without
# them (precog._kernels_py is the fallback selected at import time), so a
# missing Cython is not fatal.
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("precog._kernels", ["src/precog/_kernels.pyx"])],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
