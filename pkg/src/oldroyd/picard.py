"""Per-step coupling of velocity and stress by fixed-point iteration.

Each time step solves the linearized system with frozen transport fields
(v, theta): the velocity sees -Re P div(v (x) v) + P div theta, the stress
is transported by v.  Iterating from the previous accepted state contracts
in the discrete Y-metric (L2 of both fields plus sqrt(dt) times the L2 of
the velocity-gradient difference) when dt is small enough for the data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import (
    SYM_MULT,
    SymTensorField,
    VectorField,
    _hats_sq,
    dealias,
    materialize,
    sym_outer,
)
from .grid import GridSpec
from .leray import PhysicalParams, stokes_step_hat
from .transport import transport_step


class PicardError(RuntimeError):
    pass


class NonContraction(PicardError):
    """Successive-iterate ratios stayed >= 1; dt is too large for the data."""

    def __init__(self, msg, ratios):
        super().__init__(msg)
        self.ratios = ratios


class MaxIterExceeded(PicardError):
    def __init__(self, msg, residual):
        super().__init__(msg)
        self.residual = residual


@dataclass(frozen=True)
class FlowState:
    t: float
    u: VectorField
    tau: SymTensorField

    def __post_init__(self):
        if self.u.grid != self.tau.grid:
            raise ValueError("u and tau must live on the same grid")

    @property
    def grid(self) -> GridSpec:
        return self.u.grid

    @classmethod
    def zero(cls, grid: GridSpec, t: float = 0.0) -> "FlowState":
        return cls(t=t, u=VectorField.zeros(grid), tau=SymTensorField.zeros(grid))


@dataclass
class PicardReport:
    iterations: int
    contraction_ratios: list[float] = field(default_factory=list)
    converged: bool = False
    final_residual: float = float("nan")


def _div_sym_hat(grid, tau_hat):
    ws = grid.ws
    dim = grid.dim
    from .fields import sym_index

    ik = ws.ik_dense
    out = np.empty((dim,) + grid.rshape, dtype=np.complex128)
    for i in range(dim):
        np.multiply(ik[0], tau_hat[sym_index(dim, i, 0)], out=out[i])
        for j in range(1, dim):
            out[i] += ik[j] * tau_hat[sym_index(dim, i, j)]
    return out


def phi_step(state: FlowState, guess: tuple[VectorField, SymTensorField],
             dt: float, params: PhysicalParams, cfl_safety: float = 0.5,
             cfl_error: bool = False) -> tuple[VectorField, SymTensorField]:
    """One application of the fixed-point map with frozen (v, theta)."""
    v, theta = guess
    grid = state.grid
    materialize(v)
    vv = dealias(sym_outer(v))
    f_hat = _div_sym_hat(grid, theta.hat) - params.re * _div_sym_hat(grid, vv.hat)
    u_hat = stokes_step_hat(grid, state.u.hat, f_hat, dt, params)
    u_new = VectorField.from_hat(grid, u_hat)
    tau_new = transport_step(state.tau, v, dt, params,
                             cfl_safety=cfl_safety, cfl_error=cfl_error)
    return u_new, tau_new


def y_distance(a: tuple[VectorField, SymTensorField],
               b: tuple[VectorField, SymTensorField], dt: float) -> float:
    """Single-step discrete analog of the contraction metric.

    ||du||_L2 + ||dtau||_L2 + sqrt(dt) ||grad du||_L2, evaluated from the
    cached spectral coefficients so repeated iterates cost no transforms.
    """
    grid = a[0].grid
    ws = grid.ws
    du_hat = a[0].hat - b[0].hat
    dtau_hat = a[1].hat - b[1].hat
    ones = np.ones(grid.dim)
    tau_mult = np.asarray(SYM_MULT[grid.dim])
    du = np.sqrt(_hats_sq(ws, du_hat, ones))
    dtau = np.sqrt(_hats_sq(ws, dtau_hat, tau_mult))
    dgrad = np.sqrt(_hats_sq(ws, du_hat, ones, ws.kd2))
    return float(du + dtau + np.sqrt(dt) * dgrad)


def step_coupled(state: FlowState, dt: float, tol: float = 1e-10,
                 max_iter: int = 25, params: PhysicalParams = None,
                 cfl_safety: float = 0.5, cfl_error: bool = False,
                 guess: tuple[VectorField, SymTensorField] | None = None
                 ) -> tuple[FlowState, PicardReport]:
    """Advance one dt by iterating phi_step to self-consistency.

    An explicit starting guess (e.g. extrapolated from earlier steps)
    shortens the iteration; the default is the current state.
    """
    if params is None:
        raise ValueError("params is required")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 2:
        raise ValueError("max_iter must be at least 2")

    if guess is None:
        guess = (state.u, state.tau)
    report = PicardReport(iterations=0)
    d_prev = None
    bad_streak = 0

    for _ in range(max_iter):
        out = phi_step(state, guess, dt, params,
                       cfl_safety=cfl_safety, cfl_error=cfl_error)
        d = y_distance(out, guess, dt)
        report.iterations += 1
        if d_prev is not None and d_prev > 0:
            ratio = d / d_prev
            report.contraction_ratios.append(ratio)
            bad_streak = bad_streak + 1 if ratio >= 1.0 else 0
            if bad_streak >= 3:
                raise NonContraction(
                    f"no contraction over 3 iterates at t={state.t:g} "
                    f"(dt={dt:g}); reduce dt", report.contraction_ratios)
        d_prev = d
        guess = out
        if d <= tol:
            report.converged = True
            report.final_residual = d
            return FlowState(t=state.t + dt, u=out[0], tau=out[1]), report

    report.final_residual = d_prev if d_prev is not None else float("nan")
    raise MaxIterExceeded(
        f"Picard iteration did not reach tol={tol:g} in {max_iter} iterations "
        f"at t={state.t:g} (residual {report.final_residual:g})",
        report.final_residual)
