from setuptools import Extension, setup
from Cython.Build import cythonize

ext = Extension(
    "mimosounder._core._kernels",
    ["src/mimosounder/_core/_kernels.pyx"],
)

setup(ext_modules=cythonize([ext], language_level="3"))
