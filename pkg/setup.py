import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "denoisebench._kernels",
        sources=["src/denoisebench/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        # -ffp-contract=off keeps block-match distances bit-identical to the
        # NumPy fallback (no FMA fusion inside the accumulation loops).
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
]

if cythonize is not None:
    extensions = cythonize(extensions, language_level=3)

setup(ext_modules=extensions)
