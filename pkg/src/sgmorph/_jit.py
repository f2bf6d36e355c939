"""Numba dispatch.

Hot kernels are written once as plain Python/numpy and compiled with
``numba.njit`` when it is importable. Set ``SGMORPH_NUMBA=0`` before import
to force the uncompiled path (useful for debugging and for the benchmark).
"""
import os
import types

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and os.environ.get("SGMORPH_NUMBA", "1").lower() not in (
    "0",
    "false",
    "no",
    "off",
)


def njit(func, **helpers):
    """Compile ``func`` in nopython mode, or return it unchanged without numba.

    ``helpers`` rebinds global names seen by the compiled copy, so a pure
    Python kernel can call its own pure helpers while the compiled twin calls
    compiled ones.
    """
    if numba is None:
        return func
    if helpers:
        g = dict(func.__globals__)
        g.update(helpers)
        func = types.FunctionType(func.__code__, g, func.__name__, func.__defaults__,
                                  func.__closure__)
    return numba.njit(cache=True)(func)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
