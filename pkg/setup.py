import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SCENEQ_SKIP_NATIVE") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "sceneq.kernels._native",
                    ["src/sceneq/kernels/_native.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # No Cython: the pure-Python kernel is used instead.
        ext_modules = []

setup(ext_modules=ext_modules)
