from setuptools import Extension, setup

# The compiled ray-tracing kernel is optional: if Cython (or a C compiler)
# is unavailable the package installs pure-Python only and
# terracorr.kernels falls back to the numpy implementation at import time.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("terracorr.kernels._native", ["src/terracorr/kernels/_native.pyx"])],
        language_level="3",
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
