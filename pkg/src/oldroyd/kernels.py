"""Kernel backend selection: compiled extension if available, numpy otherwise.

Set OLDROYD_PURE_PYTHON=1 to force the numpy fallback (used by the
benchmark and for debugging).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("OLDROYD_PURE_PYTHON", "") not in ("", "0"):
    backend = _kernels_py
else:
    try:
        from . import _kernels as backend  # type: ignore[no-redef]
    except ImportError:
        backend = _kernels_py

COMPILED = bool(getattr(backend, "COMPILED", False))
BACKEND_NAME = "compiled" if COMPILED else "python"


def _flat(arr):
    return arr.reshape(arr.shape[0], -1)


def ga(tau, grad_u, a, dim):
    out = backend.ga(_flat(tau), _flat(grad_u), float(a), dim)
    return out.reshape(tau.shape)


def sym_outer(v, dim):
    ncomp = dim * (dim + 1) // 2
    out = backend.sym_outer(_flat(v), dim)
    return out.reshape((ncomp,) + v.shape[1:])


def dot_grad(v, derivs):
    flat = backend.dot_grad(_flat(v), derivs.reshape(derivs.shape[0], derivs.shape[1], -1))
    return flat.reshape((derivs.shape[0],) + v.shape[1:])
