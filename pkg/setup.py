from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "latscat._core",
                ["src/latscat/_core.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # pure-python kernels are selected at import when the extension is absent
    extensions = []

setup(ext_modules=extensions)
