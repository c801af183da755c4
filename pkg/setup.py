import os

from setuptools import setup
from setuptools.extension import Extension

# The compiled EDT kernel is optional; segdist falls back to numpy without it.
ext_modules = []
if os.environ.get("SEGDIST_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "segdist._edt_core",
                    ["src/segdist/_edt_core.pyx"],
                    extra_compile_args=["-O3"],
                    optional=True,
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
