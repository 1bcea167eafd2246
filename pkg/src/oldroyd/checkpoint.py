"""Binary checkpoint format.

Little-endian layout:
  magic   4 bytes  b"OBCK"
  version u32      (currently 1)
  dim     u32
  n       dim x u32
  box     dim x f64
  t       f64
  params  4 x f64  (re, we, alpha, a)
  u       dim  components, f64 row-major grid order
  tau     dim(dim+1)/2 upper-triangle components, f64 row-major grid order
"""

from __future__ import annotations

import struct

import numpy as np

from .fields import SymTensorField, VectorField
from .grid import GridSpec
from .leray import PhysicalParams
from .picard import FlowState

MAGIC = b"OBCK"
VERSION = 1


def save_checkpoint(path, state: FlowState, params: PhysicalParams) -> None:
    grid = state.grid
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, grid.dim))
        fh.write(struct.pack(f"<{grid.dim}I", *grid.n))
        fh.write(struct.pack(f"<{grid.dim}d", *grid.box_length))
        fh.write(struct.pack("<d", state.t))
        fh.write(struct.pack("<4d", params.re, params.we, params.alpha, params.a))
        state.u.data.astype("<f8").tofile(fh)
        state.tau.data.astype("<f8").tofile(fh)


def load_checkpoint(path, dealias: bool = True
                    ) -> tuple[FlowState, PhysicalParams]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValueError(f"not a checkpoint file: bad magic {magic!r}")
        version, dim = struct.unpack("<II", fh.read(8))
        if version != VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        n = struct.unpack(f"<{dim}I", fh.read(4 * dim))
        box = struct.unpack(f"<{dim}d", fh.read(8 * dim))
        (t,) = struct.unpack("<d", fh.read(8))
        re, we, alpha, a = struct.unpack("<4d", fh.read(32))
        grid = GridSpec(dim=dim, n=n, box_length=box, dealias=dealias)
        npts = grid.npoints
        ncomp_tau = dim * (dim + 1) // 2
        u_data = np.fromfile(fh, dtype="<f8", count=dim * npts)
        tau_data = np.fromfile(fh, dtype="<f8", count=ncomp_tau * npts)
        if u_data.size != dim * npts or tau_data.size != ncomp_tau * npts:
            raise ValueError("truncated checkpoint file")
    u = VectorField(grid, u_data.reshape((dim,) + grid.shape))
    tau = SymTensorField(grid, tau_data.reshape((ncomp_tau,) + grid.shape))
    params = PhysicalParams(re=re, we=we, alpha=alpha, a=a)
    return FlowState(t=t, u=u, tau=tau), params
