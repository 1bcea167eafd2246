"""Helmholtz-Leray projection, Stokes operator, pressure recovery, and the
exponential-integrator velocity substep.

On the torus the projection and the Stokes operator are exact Fourier
multipliers: P kills the component of each mode parallel to k, and
A = -P Laplacian acts as |k|^2 on divergence-free fields.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .fields import VectorField, SymTensorField, advect, dealias, divergence_tensor
from .grid import GridSpec


@dataclass(frozen=True)
class PhysicalParams:
    """Model constants: Reynolds, Weissenberg, coupling, slip parameter."""

    re: float
    we: float
    alpha: float
    a: float = 0.0

    def __post_init__(self):
        if self.re <= 0 or self.we <= 0:
            raise ValueError("re and we must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if abs(self.a) > 1.0:
            raise ValueError(f"|a| must be <= 1, got {self.a}")


def derive_alpha(lambda1: float, lambda2: float) -> float:
    """Retardation parameter 1 - lambda2/lambda1 from relaxation times."""
    if not lambda1 > lambda2 > 0:
        raise ValueError(
            f"require lambda1 > lambda2 > 0, got ({lambda1}, {lambda2})")
    return 1.0 - lambda2 / lambda1


def project_hat(grid: GridSpec, hat: np.ndarray) -> np.ndarray:
    """Leray projection applied to stacked vector coefficients."""
    ws = grid.ws
    dim = grid.dim
    # Uses the derivative wavenumbers (Nyquist zeroed) so that the projection
    # is exactly orthogonal to the discrete gradient/divergence operators.
    scale = ws.kd[0] * hat[0]
    for ax in range(1, dim):
        scale += ws.kd[ax] * hat[ax]
    scale *= ws.inv_kd2
    out = np.empty((dim,) + grid.rshape, dtype=np.complex128)
    for ax in range(dim):
        np.multiply(ws.kd[ax], scale, out=out[ax])
        np.subtract(hat[ax], out[ax], out=out[ax])
    return out


def project(u: VectorField) -> VectorField:
    """Leray projection: remove the gradient part, keep the k=0 mode."""
    return VectorField.from_hat(u.grid, project_hat(u.grid, u.hat))


def stokes_apply(u: VectorField) -> VectorField:
    """Stokes operator A u = -P Laplacian u (multiplier |k|^2)."""
    ws = u.grid.ws
    return VectorField.from_hat(u.grid, project_hat(u.grid, ws.k2 * u.hat))


def pressure_gradient(u: VectorField, tau: SymTensorField,
                      params: PhysicalParams) -> VectorField:
    """Gradient part (I - P)[div tau - Re (u.grad)u] balancing the momentum
    equation; the time-derivative and Laplacian terms are divergence-free on
    the torus and contribute nothing."""
    source = divergence_tensor(tau).hat - params.re * advect(u, u).hat
    return VectorField.from_hat(u.grid, source - project_hat(u.grid, source))


@functools.lru_cache(maxsize=64)
def _stokes_multipliers(grid: GridSpec, dt: float, alpha: float, re: float):
    ws = grid.ws
    nu = 1.0 - alpha
    decay = np.exp(-(nu / re) * ws.k2 * dt)
    gain = np.where(ws.k2 > 0, (1.0 - decay) * ws.inv_k2 / nu, dt / re)
    decay.flags.writeable = False
    gain.flags.writeable = False
    return decay, gain


def stokes_step_hat(grid: GridSpec, u0_hat: np.ndarray, f_hat: np.ndarray,
                    dt: float, params: PhysicalParams) -> np.ndarray:
    """Integrating-factor step for Re u_t + (1-alpha) A u = f, f frozen.

    Per mode: u(dt) = E u0 + (1 - E) f / ((1-alpha)|k|^2), E = exp(-(1-alpha)
    |k|^2 dt / Re).  The k=0 mode would integrate f0 dt / Re exactly, but both
    sides are projected and kept mean-free.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    decay, gain = _stokes_multipliers(grid, float(dt), params.alpha, params.re)
    f_hat = project_hat(grid, f_hat)
    out = project_hat(grid, u0_hat) * decay + f_hat * gain
    # Torus analog of decay at infinity: the velocity mean stays zero.
    zero = (slice(None),) + (0,) * grid.dim
    out[zero] = 0.0
    return out


def stokes_step(u0: VectorField, f: VectorField, dt: float,
                params: PhysicalParams) -> VectorField:
    """Advance the linear Stokes part one step with frozen forcing f."""
    return VectorField.from_hat(
        u0.grid, stokes_step_hat(u0.grid, u0.hat, f.hat, dt, params))
