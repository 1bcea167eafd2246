"""Pure-numpy implementations of the pointwise tensor kernels.

Fallback backend used when the compiled extension is unavailable.  Arrays
are component stacks: symmetric tensors carry the upper triangle in
row-major order ((xx, xy, yy) in 2D; (xx, xy, xz, yy, yz, zz) in 3D) and
full tensors carry all dim*dim entries row-major.
"""

from __future__ import annotations

import numpy as np

COMPILED = False

_PAIRS = {2: ((0, 0), (0, 1), (1, 1)),
          3: ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))}


def _sym_to_full(comps: np.ndarray, dim: int) -> np.ndarray:
    full = np.empty((dim, dim) + comps.shape[1:], dtype=comps.dtype)
    for c, (i, j) in enumerate(_PAIRS[dim]):
        full[i, j] = comps[c]
        full[j, i] = comps[c]
    return full


def _full_to_sym(full: np.ndarray, dim: int) -> np.ndarray:
    ncomp = dim * (dim + 1) // 2
    comps = np.empty((ncomp,) + full.shape[2:], dtype=full.dtype)
    for c, (i, j) in enumerate(_PAIRS[dim]):
        comps[c] = full[i, j]
    return comps


def ga(tau: np.ndarray, grad_u: np.ndarray, a: float, dim: int) -> np.ndarray:
    """g_a(tau, grad u) = tau W - W tau - a (D tau + tau D), upper triangle.

    tau: (dim*(dim+1)/2, npts), grad_u: (dim*dim, npts) row-major.
    """
    t = _sym_to_full(tau, dim)
    g = grad_u.reshape((dim, dim) + grad_u.shape[1:])
    gt = g.transpose(1, 0, *range(2, g.ndim))
    d = 0.5 * (g + gt)
    w = 0.5 * (g - gt)
    tw = np.einsum("ik...,kj...->ij...", t, w)
    dt = np.einsum("ik...,kj...->ij...", d, t)
    # tau W - W tau = tw + tw^T; D tau + tau D = dt + dt^T (tau, D symmetric)
    twt = tw.transpose(1, 0, *range(2, tw.ndim))
    dtt = dt.transpose(1, 0, *range(2, dt.ndim))
    out = (tw + twt) - a * (dt + dtt)
    return _full_to_sym(out, dim)


def sym_outer(v: np.ndarray, dim: int) -> np.ndarray:
    """Upper-triangle components of v (x) v for a stacked vector field."""
    ncomp = dim * (dim + 1) // 2
    out = np.empty((ncomp,) + v.shape[1:], dtype=v.dtype)
    for c, (i, j) in enumerate(_PAIRS[dim]):
        np.multiply(v[i], v[j], out=out[c])
    return out


def dot_grad(v: np.ndarray, derivs: np.ndarray) -> np.ndarray:
    """(v . grad) f given the per-axis derivatives of f's components.

    v: (dim, npts); derivs: (ncomp, dim, npts) -> (ncomp, npts).
    """
    return np.einsum("d...,cd...->c...", v, derivs)
