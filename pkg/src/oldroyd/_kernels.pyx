# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled pointwise tensor kernels (fused, no intermediate arrays).

Mirrors the numpy fallback in _kernels_py; arrays are (ncomp, npts)
C-contiguous float64 component stacks.  The 2D and 3D cases are fully
unrolled: these run once or twice per grid point per time step.
"""

import numpy as np

cimport cython

COMPILED = True


cdef void _ga2(const double[:, ::1] tau, const double[:, ::1] g, double a,
               double[:, ::1] out, Py_ssize_t npts) noexcept nogil:
    cdef Py_ssize_t p
    cdef double txx, txy, tyy
    cdef double dxx, dxy, dyy, w
    for p in range(npts):
        txx = tau[0, p]; txy = tau[1, p]; tyy = tau[2, p]
        dxx = g[0, p]
        dxy = 0.5 * (g[1, p] + g[2, p])
        dyy = g[3, p]
        w = 0.5 * (g[1, p] - g[2, p])     # W_xy; W_yx = -w
        # tau W - W tau - a (D tau + tau D), upper triangle
        out[0, p] = -2.0 * txy * w - a * 2.0 * (dxx * txx + dxy * txy)
        out[1, p] = (txx - tyy) * w - a * (dxy * (txx + tyy) + txy * (dxx + dyy))
        out[2, p] = 2.0 * txy * w - a * 2.0 * (dxy * txy + dyy * tyy)


cdef void _ga3(const double[:, ::1] tau, const double[:, ::1] g, double a,
               double[:, ::1] out, Py_ssize_t npts) noexcept nogil:
    cdef Py_ssize_t p
    cdef double txx, txy, txz, tyy, tyz, tzz
    cdef double dxx, dyy, dzz, dxy, dxz, dyz
    cdef double wxy, wxz, wyz
    cdef double mxx, mxy, mxz, myx, myy, myz, mzx, mzy, mzz
    cdef double nxx, nxy, nxz, nyx, nyy, nyz, nzx, nzy, nzz
    for p in range(npts):
        txx = tau[0, p]; txy = tau[1, p]; txz = tau[2, p]
        tyy = tau[3, p]; tyz = tau[4, p]; tzz = tau[5, p]
        dxx = g[0, p]; dyy = g[4, p]; dzz = g[8, p]
        dxy = 0.5 * (g[1, p] + g[3, p])
        dxz = 0.5 * (g[2, p] + g[6, p])
        dyz = 0.5 * (g[5, p] + g[7, p])
        wxy = 0.5 * (g[1, p] - g[3, p])
        wxz = 0.5 * (g[2, p] - g[6, p])
        wyz = 0.5 * (g[5, p] - g[7, p])
        # m = tau W with W = [[0,wxy,wxz],[-wxy,0,wyz],[-wxz,-wyz,0]]
        mxx = -txy * wxy - txz * wxz
        mxy = txx * wxy - txz * wyz
        mxz = txx * wxz + txy * wyz
        myx = -tyy * wxy - tyz * wxz
        myy = txy * wxy - tyz * wyz
        myz = txy * wxz + tyy * wyz
        mzx = -tyz * wxy - tzz * wxz
        mzy = txz * wxy - tzz * wyz
        mzz = txz * wxz + tyz * wyz
        # n = D tau
        nxx = dxx * txx + dxy * txy + dxz * txz
        nxy = dxx * txy + dxy * tyy + dxz * tyz
        nxz = dxx * txz + dxy * tyz + dxz * tzz
        nyx = dxy * txx + dyy * txy + dyz * txz
        nyy = dxy * txy + dyy * tyy + dyz * tyz
        nyz = dxy * txz + dyy * tyz + dyz * tzz
        nzx = dxz * txx + dyz * txy + dzz * txz
        nzy = dxz * txy + dyz * tyy + dzz * tyz
        nzz = dxz * txz + dyz * tyz + dzz * tzz
        # result = (m + m^T) - a (n + n^T), upper triangle
        out[0, p] = 2.0 * mxx - a * 2.0 * nxx
        out[1, p] = (mxy + myx) - a * (nxy + nyx)
        out[2, p] = (mxz + mzx) - a * (nxz + nzx)
        out[3, p] = 2.0 * myy - a * 2.0 * nyy
        out[4, p] = (myz + mzy) - a * (nyz + nzy)
        out[5, p] = 2.0 * mzz - a * 2.0 * nzz


def ga(const double[:, ::1] tau, const double[:, ::1] grad_u, double a, int dim):
    """g_a(tau, grad u) = tau W - W tau - a (D tau + tau D), upper triangle."""
    cdef Py_ssize_t npts = tau.shape[1]
    cdef int ncomp = dim * (dim + 1) // 2
    out_arr = np.empty((ncomp, npts), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    if dim == 2:
        _ga2(tau, grad_u, a, out, npts)
    elif dim == 3:
        _ga3(tau, grad_u, a, out, npts)
    else:
        raise ValueError("dim must be 2 or 3")
    return out_arr


def sym_outer(const double[:, ::1] v, int dim):
    """Upper-triangle components of v (x) v."""
    cdef Py_ssize_t npts = v.shape[1]
    cdef int ncomp = dim * (dim + 1) // 2
    out_arr = np.empty((ncomp, npts), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t p
    cdef double vx, vy, vz
    if dim == 2:
        for p in range(npts):
            vx = v[0, p]; vy = v[1, p]
            out[0, p] = vx * vx
            out[1, p] = vx * vy
            out[2, p] = vy * vy
    elif dim == 3:
        for p in range(npts):
            vx = v[0, p]; vy = v[1, p]; vz = v[2, p]
            out[0, p] = vx * vx
            out[1, p] = vx * vy
            out[2, p] = vx * vz
            out[3, p] = vy * vy
            out[4, p] = vy * vz
            out[5, p] = vz * vz
    else:
        raise ValueError("dim must be 2 or 3")
    return out_arr


def dot_grad(const double[:, ::1] v, const double[:, :, ::1] derivs):
    """(v . grad) f from per-axis derivatives: (dim,N),(nc,dim,N)->(nc,N)."""
    cdef Py_ssize_t npts = v.shape[1]
    cdef int dim = v.shape[0]
    cdef int ncomp = derivs.shape[0]
    out_arr = np.empty((ncomp, npts), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t p
    cdef int c
    if dim == 2:
        for c in range(ncomp):
            for p in range(npts):
                out[c, p] = v[0, p] * derivs[c, 0, p] + v[1, p] * derivs[c, 1, p]
    elif dim == 3:
        for c in range(ncomp):
            for p in range(npts):
                out[c, p] = (v[0, p] * derivs[c, 0, p]
                             + v[1, p] * derivs[c, 1, p]
                             + v[2, p] * derivs[c, 2, p])
    else:
        raise ValueError("dim must be 2 or 3")
    return out_arr
