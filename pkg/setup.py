from setuptools import Extension, setup

# The RK4 integration kernel is the only hot loop; it is compiled with Cython
# when available.  Without Cython the package still works through the
# pure-Python kernel in dvccosc._kernel_py (selected at import time).
try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "dvccosc._kernel",
                ["src/dvccosc/_kernel.pyx"],
                # -ffp-contract=off keeps the compiled kernel bit-identical
                # to the pure-Python fallback (no FMA contraction).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
