"""Hot kernels behind one interface: compiled Cython core, numpy fallback.

The compiled module is used when it imports; set ``RSVRC_KERNELS=python`` to
force the fallback. All matrices passed as quadratic-form arguments must be
symmetric (the compiled path reads only their upper triangle).

Kernels that reduce to a single matrix product (the weighted Gram and row
sums) run faster through numpy's BLAS than through the compiled loops, so the
"cython" backend keeps the numpy versions for those. ``get_module`` still
exposes the raw compiled module for benchmarking.
"""

import os

from . import _fallback

_NAMES = (
    "quad_forms",
    "quad_forms_multi",
    "weighted_gram",
    "weighted_gram_multi",
    "margins",
    "weighted_rowsum",
    "logistic_terms",
    "cubic_gd",
)

# faster via BLAS than via the compiled loops at the benchmark shapes
_BLAS_BOUND = ("weighted_gram", "weighted_gram_multi", "weighted_rowsum")

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

_BACKENDS = {"python": _fallback}
if _core is not None:
    _BACKENDS["cython"] = _core


def available_backends():
    return sorted(_BACKENDS)


def use_backend(name: str) -> None:
    """Rebind the module-level kernels to ``name`` ("cython" or "python")."""
    global BACKEND
    if name not in _BACKENDS:
        raise ValueError(f"kernel backend {name!r} unavailable; have {available_backends()}")
    mod = _BACKENDS[name]
    for fn in _NAMES:
        globals()[fn] = getattr(_fallback if fn in _BLAS_BOUND else mod, fn)
    BACKEND = name


def get_module(name: str):
    return _BACKENDS[name]


BACKEND = "python"
use_backend(os.environ.get("RSVRC_KERNELS", "cython" if _core is not None else "python"))
