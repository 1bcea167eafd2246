"""Stress substep: We (tau_t + (v.grad) tau + g_a(tau, grad v)) + tau = 2 alpha D(v).

The stiff relaxation -tau/We is integrated exactly with an integrating
factor; advection, rotation, and forcing are advanced with Heun's method
(explicit trapezoidal), giving a second-order step that is exact when the
transporting velocity vanishes.
"""

from __future__ import annotations

import warnings

import numpy as np

from .fields import (
    SymTensorField,
    TensorField,
    VectorField,
    advect,
    dealias,
    deformation,
    g_a,
    gradient,
    linf_norm,
    materialize,
)
from .leray import PhysicalParams


class CflViolation(RuntimeError):
    """Advective CFL bound exceeded for the requested step."""


def cfl_limit(v: VectorField, safety: float = 0.5) -> float:
    """Largest stable dt for explicit advection by v."""
    vmax = max(linf_norm(v), 1e-12)
    return safety * min(v.grid.spacing) / vmax


def _check_cfl(v, dt, safety, hard):
    limit = cfl_limit(v, safety)
    if dt > limit:
        msg = f"advective CFL violated: dt={dt:g} > limit={limit:g}"
        if hard:
            raise CflViolation(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=3)


def _nonstiff_rhs(tau: SymTensorField, v: VectorField, grad_v: TensorField,
                  forcing: SymTensorField, params: PhysicalParams) -> SymTensorField:
    """Everything except the exact -tau/We relaxation, dealiased once."""
    materialize(tau)
    adv = advect(v, tau, dealias_result=False)
    rot = g_a(tau, grad_v, params.a)
    raw = forcing.data - adv.data
    np.subtract(raw, rot.data, out=raw)
    return dealias(SymTensorField(tau.grid, raw, check=False))


def stress_rhs(tau: SymTensorField, v: VectorField,
               params: PhysicalParams) -> SymTensorField:
    """Full tau_t = [2 alpha D(v) - tau]/We - (v.grad) tau - g_a(tau, grad v)."""
    grad_v = gradient(v)
    forcing = (2.0 * params.alpha / params.we) * deformation(v)
    return _nonstiff_rhs(tau, v, grad_v, forcing, params) - (1.0 / params.we) * tau


def transport_step(tau0: SymTensorField, v: VectorField, dt: float,
                   params: PhysicalParams, cfl_safety: float = 0.5,
                   cfl_error: bool = False) -> SymTensorField:
    """One Heun + integrating-factor step with v frozen over the step."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    _check_cfl(v, dt, cfl_safety, cfl_error)

    grid = tau0.grid
    grad_v = gradient(v)
    forcing = (2.0 * params.alpha / params.we) * deformation(v)
    decay = float(np.exp(-dt / params.we))

    # Stages are combined spectrally: the relaxation factor then acts
    # exactly on the coefficients and no transform round-trips accumulate
    # (with v = 0 the update is decay * tau0_hat, bit for bit).
    n1 = _nonstiff_rhs(tau0, v, grad_v, forcing, params)
    predictor = SymTensorField.from_hat(
        grid, decay * (tau0.hat + dt * n1.hat))
    n2 = _nonstiff_rhs(predictor, v, grad_v, forcing, params)
    return SymTensorField.from_hat(
        grid, decay * tau0.hat + (0.5 * dt) * (decay * n1.hat + n2.hat))
