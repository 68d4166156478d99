from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext = Extension(
        "colfuse.kernels._ck",
        ["src/colfuse/kernels/_ck.pyx"],
        extra_compile_args=["-O3"],
    )
    # The package works without the extension (pure-Python fallback kicks in),
    # so a failed compile must not fail the install.
    ext.optional = True
    ext_modules = cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
