"""Periodic torus discretization and cached spectral metadata."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on a 2D or 3D torus.

    Wavenumbers per axis are {-n/2+1, ..., n/2} scaled by 2*pi/box_length.
    """

    dim: int
    n: tuple[int, ...]
    box_length: tuple[float, ...] = field(default=())
    dealias: bool = True

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        n = tuple(int(v) for v in self.n)
        if len(n) != self.dim:
            raise ValueError("n must have one entry per axis")
        for v in n:
            if v < 8 or not _is_power_of_two(v):
                raise ValueError(f"resolution must be a power of two >= 8, got {v}")
        box = tuple(float(v) for v in self.box_length) or (2.0 * math.pi,) * self.dim
        if len(box) != self.dim:
            raise ValueError("box_length must have one entry per axis")
        if any(v <= 0 for v in box):
            raise ValueError("box_length must be positive")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "box_length", box)

    @classmethod
    def make(cls, dim, n, box_length=None, dealias=True):
        if np.isscalar(n):
            n = (int(n),) * dim
        if box_length is None:
            box_length = (2.0 * math.pi,) * dim
        elif np.isscalar(box_length):
            box_length = (float(box_length),) * dim
        return cls(dim=dim, n=tuple(n), box_length=tuple(box_length), dealias=dealias)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def rshape(self) -> tuple[int, ...]:
        return self.n[:-1] + (self.n[-1] // 2 + 1,)

    @property
    def npoints(self) -> int:
        return int(np.prod(self.n))

    @property
    def volume(self) -> float:
        return float(np.prod(self.box_length))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.box_length, self.n))

    def coordinates(self):
        """Sparse meshgrid of physical coordinates (ij indexing)."""
        axes = [
            np.arange(n) * (L / n) for n, L in zip(self.n, self.box_length)
        ]
        return np.meshgrid(*axes, indexing="ij", sparse=True)

    @property
    def ws(self) -> "_SpectralWorkspace":
        return _workspace(self)


@functools.lru_cache(maxsize=32)
def _workspace(grid: GridSpec) -> "_SpectralWorkspace":
    return _SpectralWorkspace(grid)


class _SpectralWorkspace:
    """Precomputed wavenumber arrays and masks for one grid.

    Shared across all fields on the grid; read-only after construction.
    """

    def __init__(self, grid: GridSpec):
        self.grid = grid
        dim, n, box = grid.dim, grid.n, grid.box_length

        freqs = []
        for ax in range(dim):
            if ax == dim - 1:
                f = np.fft.rfftfreq(n[ax], d=1.0 / n[ax])
            else:
                f = np.fft.fftfreq(n[ax], d=1.0 / n[ax])
            freqs.append(f)
        self.freqs = [
            f.reshape([-1 if i == ax else 1 for i in range(dim)])
            for ax, f in enumerate(freqs)
        ]

        # Physical wavenumbers; the Nyquist frequency is kept in |k|^2
        # multipliers but zeroed in first-derivative multipliers.
        self.k = [
            (2.0 * math.pi / box[ax]) * self.freqs[ax] for ax in range(dim)
        ]
        self.k2 = sum(k * k for k in self.k)
        self.k2 = np.asarray(self.k2)
        inv_k2 = np.ones_like(self.k2)
        nonzero = self.k2 > 0
        inv_k2[nonzero] = 1.0 / self.k2[nonzero]
        self.inv_k2 = inv_k2

        # Derivative wavenumbers: the unpaired Nyquist mode is zeroed so
        # first-derivative, projection, and curl multipliers stay mutually
        # consistent (grad/div/curl/P identities are then exact identities).
        self.kd = []
        for ax in range(dim):
            kd = self.k[ax].copy()
            nyq = np.abs(self.freqs[ax]) == n[ax] // 2
            kd[nyq] = 0.0
            self.kd.append(kd)
        self.ik = [1j * kd for kd in self.kd]
        # Dense (rshape) copies of the derivative multipliers: full-size
        # elementwise products are faster than broadcasting the sparse axes.
        self.ik_dense = np.stack(
            [np.broadcast_to(ik, grid.rshape) for ik in self.ik])
        self.ik_dense.flags.writeable = False
        self.kd2 = np.asarray(sum(kd * kd for kd in self.kd))
        inv_kd2 = np.ones_like(self.kd2)
        nz = self.kd2 > 0
        inv_kd2[nz] = 1.0 / self.kd2[nz]
        self.inv_kd2 = inv_kd2

        # 2/3-rule mask: keep |freq| < n/3 per axis.
        mask = np.ones(grid.rshape, dtype=bool)
        for ax in range(dim):
            mask &= np.abs(self.freqs[ax]) < (n[ax] / 3.0)
        self.dealias_mask = mask

        # Parseval weights for the half-complex layout: conjugate-pair modes
        # on the last axis count twice.
        w = np.full(grid.rshape[-1], 2.0)
        w[0] = 1.0
        if n[-1] % 2 == 0:
            w[-1] = 1.0
        self.parseval_w = w.reshape([1] * (dim - 1) + [-1])

        # ||f||_{L^2}^2 = l2_factor * sum_k w_k |f_hat_k|^2
        self.l2_factor = grid.volume / grid.npoints**2

        self.axes = tuple(range(-dim, 0))

    def rfftn(self, values: np.ndarray) -> np.ndarray:
        return scipy.fft.rfftn(values, axes=self.axes)

    def irfftn(self, coeffs: np.ndarray, overwrite: bool = False) -> np.ndarray:
        # overwrite=True may destroy coeffs; only for scratch buffers.
        return scipy.fft.irfftn(coeffs, s=self.grid.shape, axes=self.axes,
                                overwrite_x=overwrite)
