"""Backend selection: numba-compiled kernels vs the pure-numpy reference path.

The environment variable ``BANDITIX_BACKEND`` picks the execution path for
simulation runs:

* ``numba`` — require the compiled kernels (ImportError if numba is missing),
* ``numpy`` — force the pure-numpy reference implementation,
* ``auto`` (default, also used when unset) — numba if importable, else numpy.

Both paths consume random streams identically and produce the same integer
outputs; float logs agree to rounding (numpy's pairwise reductions vs the
kernels' sequential loops differ in final ulps).
"""

import os

ENV_VAR = "BANDITIX_BACKEND"
_CHOICES = ("numba", "numpy", "auto")


def _numba_available():
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def resolve_backend(explicit=None):
    """Resolve the backend name to use: ``"numba"`` or ``"numpy"``.

    ``explicit`` overrides the environment variable when given.  Invalid
    values raise ValueError so typos don't silently fall back.
    """
    choice = explicit if explicit is not None else os.environ.get(ENV_VAR, "auto")
    choice = choice.strip().lower()
    if choice not in _CHOICES:
        raise ValueError(
            f"unknown backend {choice!r}: expected one of {', '.join(_CHOICES)}"
        )
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if not _numba_available():
            raise ImportError("BANDITIX_BACKEND=numba but numba is not importable")
        return "numba"
    return "numba" if _numba_available() else "numpy"


def using_numba(explicit=None):
    return resolve_backend(explicit) == "numba"
