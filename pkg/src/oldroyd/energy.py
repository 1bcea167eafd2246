"""Energy functionals F, G, H, the certificate inequality, and monitors.

The certificate logic: along a solution, dF/dt + G <= C * H * G, and
H <= M1 (F + F^2 + F^3).  If delta0 satisfies
delta0 + delta0^2 + delta0^3 < 1/(2 C M1) and F(0) < delta0, then F stays
below delta0 forever and F(t) + (1/2) int_0^t G <= F(0).

C and M1 are not quantified analytically; they are calibrated empirically
from a trajectory and then frozen.  On the torus the div-curl constant
C0 = 1 is exact and is the default.
"""

from __future__ import annotations

from dataclasses import dataclass

from .fields import (
    SymTensorField,
    VectorField,
    advect,
    curl,
    divergence_tensor,
    grad_sobolev_norm,
    l2_norm,
    linf_norm,
    sobolev_inner,
    sobolev_norm,
)
from .leray import PhysicalParams, project, project_hat, stokes_apply
from .picard import FlowState
from .transport import stress_rhs


class EmptyEstimate(ValueError):
    """No usable samples for an empirical constant."""


@dataclass(frozen=True)
class EnergyConstants:
    """Weights and calibrated constants of the certificate machinery.

    kappa1..kappa6 only weight the functionals (default 1); c0 is the
    div-curl constant (1 is exact on the torus); big_c, m1, delta0 are the
    calibrated certificate constants, None until calibration.
    """

    kappa1: float = 1.0
    kappa2: float = 1.0
    kappa3: float = 1.0
    kappa4: float = 1.0
    kappa5: float = 1.0
    kappa6: float = 1.0
    c0: float = 1.0
    big_c: float | None = None
    m1: float | None = None
    delta0: float | None = None

    def __post_init__(self):
        for name in ("kappa1", "kappa2", "kappa3", "kappa4", "kappa5",
                     "kappa6", "c0"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.delta0 is not None:
            if self.big_c is None or self.m1 is None:
                raise ValueError("delta0 requires big_c and m1")
            d = self.delta0
            if not d + d**2 + d**3 < 1.0 / (2.0 * self.big_c * self.m1):
                raise ValueError(
                    "delta0 violates delta0+delta0^2+delta0^3 < 1/(2*C*M1)")

    def with_certificate(self, big_c: float, m1: float,
                         margin: float = 1e-6) -> "EnergyConstants":
        d0 = compute_delta0(big_c, m1, margin=margin)
        return EnergyConstants(
            kappa1=self.kappa1, kappa2=self.kappa2, kappa3=self.kappa3,
            kappa4=self.kappa4, kappa5=self.kappa5, kappa6=self.kappa6,
            c0=self.c0, big_c=big_c, m1=m1, delta0=d0)


@dataclass
class EnergyReport:
    """Evaluated functionals and component norms at one time level."""

    t: float
    f_val: float
    g_val: float
    h_val: float
    df_dt: float = float("nan")
    certificate_margin: float = float("nan")
    norm_u: float = 0.0
    norm_grad_u: float = 0.0
    norm_au: float = 0.0
    norm_tau_h2: float = 0.0
    norm_tau: float = 0.0
    norm_dt_u: float = 0.0
    norm_dt_tau: float = 0.0
    norm_pdiv_tau: float = 0.0
    norm_curldiv_tau: float = 0.0
    norm_grad_dt_u: float = 0.0


def time_derivatives(state: FlowState, params: PhysicalParams
                     ) -> tuple[VectorField, SymTensorField]:
    """PDE-side time derivatives (not trajectory differences)."""
    grid = state.grid
    pdivtau_hat = project_hat(grid, divergence_tensor(state.tau).hat)
    au = stokes_apply(state.u)
    conv_hat = project_hat(grid, advect(state.u, state.u).hat)
    du_hat = (pdivtau_hat - (1.0 - params.alpha) * au.hat) / params.re \
        - conv_hat
    du_dt = VectorField.from_hat(grid, du_hat)
    dtau_dt = stress_rhs(state.tau, state.u, params)
    return du_dt, dtau_dt


def ptau_norms(tau: SymTensorField) -> tuple[float, float]:
    """(||P div tau||_L2, ||curl div tau||_L2)."""
    divtau = divergence_tensor(tau)
    return l2_norm(project(divtau)), l2_norm(curl(divtau))


def _norms(state, derivatives, params):
    du_dt, dtau_dt = derivatives
    np_div, n_curl = ptau_norms(state.tau)
    return dict(
        norm_u=l2_norm(state.u),
        norm_grad_u=grad_sobolev_norm(state.u, 0),
        norm_au=l2_norm(stokes_apply(state.u)),
        norm_tau_h2=sobolev_norm(state.tau, 2),
        norm_tau=l2_norm(state.tau),
        norm_dt_u=l2_norm(du_dt),
        norm_dt_tau=l2_norm(dtau_dt),
        norm_pdiv_tau=np_div,
        norm_curldiv_tau=n_curl,
        norm_grad_dt_u=grad_sobolev_norm(du_dt, 0),
        norm_grad_u_h2=grad_sobolev_norm(state.u, 2),
    )


def _f_from_norms(n, params, constants):
    al, re, we = params.alpha, params.re, params.we
    k = constants
    return ((1 - al) * (k.kappa4 * k.c0 + 1) * we
            * (n["norm_pdiv_tau"]**2 + n["norm_curldiv_tau"]**2)
            + re * (k.kappa6 + 1) / (1 - al) * n["norm_u"]**2
            + we * (k.kappa6 + 1) / (2 * al * (1 - al)) * n["norm_tau"]**2
            + we * n["norm_tau_h2"]**2
            + (k.kappa1 + 1) * (2 * re + 1 - al) / (1 - al) * n["norm_grad_u"]**2
            + re * (k.kappa5 + 1) / (1 - al) * n["norm_dt_u"]**2
            + we * (k.kappa5 + 1) / (2 * al * (1 - al)) * n["norm_dt_tau"]**2)


def _g_from_norms(n, params, constants):
    al, re = params.alpha, params.re
    k = constants
    return (re * (k.kappa1 + 1) / (1 - al) * n["norm_dt_u"]**2
            + n["norm_au"]**2
            + n["norm_tau_h2"]**2
            + n["norm_grad_u_h2"]**2
            + n["norm_grad_dt_u"]**2
            + (k.kappa5 + 1) / (al * (1 - al)) * n["norm_dt_tau"]**2
            + n["norm_grad_u"]**2
            + n["norm_tau"]**2
            + n["norm_pdiv_tau"]**2
            + n["norm_curldiv_tau"]**2)


def _h_from_norms(n):
    return (n["norm_dt_u"]**2 + n["norm_au"]**2 + n["norm_tau_h2"]**2
            + n["norm_dt_tau"]**2 + n["norm_grad_u"]**2
            + n["norm_grad_u"]**4)


def compute_F(state, derivatives, params, constants) -> float:
    return _f_from_norms(_norms(state, derivatives, params), params, constants)


def compute_G(state, derivatives, params, constants) -> float:
    return _g_from_norms(_norms(state, derivatives, params), params, constants)


def compute_H(state, derivatives, params, constants=None) -> float:
    return _h_from_norms(_norms(state, derivatives, params))


def evaluate(state: FlowState, params: PhysicalParams,
             constants: EnergyConstants) -> EnergyReport:
    """All norms plus F, G, H in one pass."""
    derivatives = time_derivatives(state, params)
    n = _norms(state, derivatives, params)
    report = EnergyReport(
        t=state.t,
        f_val=_f_from_norms(n, params, constants),
        g_val=_g_from_norms(n, params, constants),
        h_val=_h_from_norms(n),
    )
    for key, val in n.items():
        if hasattr(report, key):
            setattr(report, key, val)
    return report


def estimate_m1(samples: list[FlowState], params: PhysicalParams,
                constants: EnergyConstants) -> float:
    """Empirical M1 = max H / (F + F^2 + F^3) over nonzero samples."""
    best = None
    for state in samples:
        derivatives = time_derivatives(state, params)
        n = _norms(state, derivatives, params)
        f = _f_from_norms(n, params, constants)
        if f < 1e-30:
            continue
        ratio = _h_from_norms(n) / (f + f**2 + f**3)
        best = ratio if best is None else max(best, ratio)
    if best is None:
        raise EmptyEstimate("no sample with F > 0")
    return best


def compute_delta0(big_c: float, m1: float, margin: float = 1e-6) -> float:
    """Largest delta with delta+delta^2+delta^3 <= (1-margin)/(2*C*M1).

    Bisection on the monotone cubic.
    """
    if big_c <= 0 or m1 <= 0:
        raise ValueError("big_c and m1 must be positive")
    target = (1.0 - margin) / (2.0 * big_c * m1)

    def cubic(d):
        return d + d * d + d ** 3

    lo, hi = 0.0, 1.0
    while cubic(hi) < target:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if cubic(mid) <= target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, hi):
            break
    return lo


@dataclass
class CertificateVerdict:
    """Outcome of one discrete certificate check between two reports."""

    t: float
    margin: float            # dF/dt + G_mid - C * H_mid * G_mid (<= 0 good)
    f_below_delta0: bool
    budget: float            # F(t) + (1/2) int_0^t G ds
    budget_ok: bool
    g_integral: float
    certified: bool


def certificate_step(report_prev: EnergyReport, report_now: EnergyReport,
                     dt: float, constants: EnergyConstants,
                     f0: float | None = None,
                     g_integral_prev: float = 0.0,
                     budget_rtol: float = 1e-3) -> CertificateVerdict:
    """Evaluate the discrete certificate between two consecutive reports.

    The caller threads g_integral through successive calls; f0 defaults to
    the earlier report's F (correct when called from t=0 onwards).
    """
    if constants.big_c is None or constants.delta0 is None:
        raise ValueError("constants must carry calibrated big_c, m1, delta0")
    if f0 is None:
        f0 = report_prev.f_val
    df_dt = (report_now.f_val - report_prev.f_val) / dt
    g_mid = 0.5 * (report_prev.g_val + report_now.g_val)
    h_mid = 0.5 * (report_prev.h_val + report_now.h_val)
    margin = df_dt + g_mid - constants.big_c * h_mid * g_mid
    report_now.df_dt = df_dt
    report_now.certificate_margin = constants.big_c * h_mid * g_mid - df_dt - g_mid
    g_integral = g_integral_prev + dt * g_mid
    budget = report_now.f_val + 0.5 * g_integral
    budget_ok = budget <= f0 * (1.0 + budget_rtol) + 1e-30
    f_below = report_now.f_val < constants.delta0
    return CertificateVerdict(
        t=report_now.t, margin=margin, f_below_delta0=f_below,
        budget=budget, budget_ok=budget_ok, g_integral=g_integral,
        certified=f_below and budget_ok)


_SKIP = None  # sentinel for ratios with a vanishing denominator


def inequality_monitors(state: FlowState, derivatives, params: PhysicalParams
                        ) -> dict[str, float | None]:
    """Empirical LHS/RHS ratios of the individual a priori estimates (C = 1).

    Reported for tracking only; never asserted against fixed constants.
    A None entry means the denominator was below 1e-14 and the ratio was
    skipped.
    """
    du_dt, dtau_dt = derivatives
    al, re, we = params.alpha, params.re, params.we
    n = _norms(state, derivatives, params)
    out: dict[str, float | None] = {}

    def ratio(lhs, rhs):
        return None if rhs < 1e-14 else lhs / rhs

    # Basic energy balance against the tau_H2^4 source.
    ddt_energy = (2 * re * sobolev_inner(state.u, du_dt, 0)
                  + (we / al) * sobolev_inner(state.tau, dtau_dt, 0))
    lhs = ddt_energy + (1 - al) * n["norm_grad_u"]**2 + n["norm_tau"]**2 / al
    rhs = we**2 / ((1 - al) * al**2) * n["norm_tau_h2"]**4
    out["utau_L2"] = ratio(lhs, rhs)

    # Stress H2 balance.
    ddt_tau_h2 = 2 * sobolev_inner(state.tau, dtau_dt, 2)
    lhs = we * ddt_tau_h2 + n["norm_tau_h2"]**2
    rhs = al**2 * n["norm_grad_u_h2"]**2 + (we**2 / al**2) * n["norm_tau_h2"]**4
    out["tau_H2"] = ratio(lhs, rhs)

    # Stokes-operator control.
    lhs = n["norm_au"]**2
    rhs = (n["norm_grad_u"]**2 + n["norm_dt_u"]**2 + n["norm_pdiv_tau"]**2
           + n["norm_grad_u"]**6)
    out["Au_L2"] = ratio(lhs, rhs)

    # Interpolation (sup norm vs. gradient norms).
    lhs = linf_norm(state.u)
    rhs = n["norm_grad_u"]**0.5 * grad_sobolev_norm(state.u, 1)**0.5
    out["GN"] = ratio(lhs, rhs)

    return out
