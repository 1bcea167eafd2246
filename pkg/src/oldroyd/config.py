"""Run configuration and initial-data generation.

Configs are single JSON documents.  `normalized()` returns the fully
resolved dict (every default made explicit) so that a config file plus the
`normalize` subcommand round-trips with no hidden state.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fields import SymTensorField, VectorField, dealias, sobolev_norm
from .grid import GridSpec
from .leray import PhysicalParams, derive_alpha, project, stokes_apply
from .picard import FlowState

INITIAL_CONDITIONS = ("zero", "taylor_green", "random_smooth", "single_mode",
                      "from_checkpoint")


@dataclass
class SolverConfig:
    grid: GridSpec
    params: PhysicalParams
    dt: float
    t_end: float
    picard_tol: float = 1e-10
    picard_max_iter: int = 25
    output_every: int = 1
    checkpoint_every: int = 0
    seed: int = 0
    initial_condition: str = "taylor_green"
    amplitude: float = 1e-3
    tau_amplitude_fraction: float = 0.5
    checkpoint_path: str | None = None
    cfl_safety: float = 0.5
    cfl_error: bool = False
    adaptive_dt: bool = False
    dt_floor: float = 1e-8
    big_c: float | None = None
    m1: float | None = None
    energy: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")
        if self.amplitude < 0:
            raise ValueError("amplitude must be nonnegative")
        if self.initial_condition not in INITIAL_CONDITIONS:
            raise ValueError(
                f"unknown initial_condition {self.initial_condition!r}")
        if self.initial_condition == "from_checkpoint" and not self.checkpoint_path:
            raise ValueError("from_checkpoint requires checkpoint_path")
        if self.output_every < 1:
            raise ValueError("output_every must be >= 1")
        self.energy_constants()  # fail fast on bad weight overrides

    @classmethod
    def from_dict(cls, doc: dict) -> "SolverConfig":
        gdoc = doc["grid"]
        grid = GridSpec.make(
            dim=int(gdoc["dim"]),
            n=gdoc["n"],
            box_length=gdoc.get("box_length"),
            dealias=bool(gdoc.get("dealias", True)),
        )
        pdoc = doc["params"]
        if "alpha" in pdoc:
            alpha = float(pdoc["alpha"])
        else:
            alpha = derive_alpha(float(pdoc["lambda1"]), float(pdoc["lambda2"]))
        params = PhysicalParams(
            re=float(pdoc["re"]), we=float(pdoc["we"]),
            alpha=alpha, a=float(pdoc.get("a", 0.0)))
        kwargs = {}
        for key in ("picard_tol", "picard_max_iter", "output_every",
                    "checkpoint_every", "seed", "initial_condition",
                    "amplitude", "tau_amplitude_fraction", "checkpoint_path",
                    "cfl_safety", "cfl_error", "adaptive_dt", "dt_floor",
                    "big_c", "m1", "energy"):
            if key in doc:
                kwargs[key] = doc[key]
        return cls(grid=grid, params=params, dt=float(doc["dt"]),
                   t_end=float(doc["t_end"]), **kwargs)

    @classmethod
    def from_file(cls, path) -> "SolverConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def normalized(self) -> dict:
        """Fully explicit config document (defaults resolved)."""
        return {
            "grid": {
                "dim": self.grid.dim,
                "n": list(self.grid.n),
                "box_length": list(self.grid.box_length),
                "dealias": self.grid.dealias,
            },
            "params": {
                "re": self.params.re,
                "we": self.params.we,
                "alpha": self.params.alpha,
                "a": self.params.a,
            },
            "dt": self.dt,
            "t_end": self.t_end,
            "picard_tol": self.picard_tol,
            "picard_max_iter": self.picard_max_iter,
            "output_every": self.output_every,
            "checkpoint_every": self.checkpoint_every,
            "seed": self.seed,
            "initial_condition": self.initial_condition,
            "amplitude": self.amplitude,
            "tau_amplitude_fraction": self.tau_amplitude_fraction,
            "checkpoint_path": self.checkpoint_path,
            "cfl_safety": self.cfl_safety,
            "cfl_error": self.cfl_error,
            "adaptive_dt": self.adaptive_dt,
            "dt_floor": self.dt_floor,
            "big_c": self.big_c,
            "m1": self.m1,
            "energy": dict(self.energy),
        }

    def energy_constants(self):
        """EnergyConstants with this config's weight overrides applied."""
        from .energy import EnergyConstants

        return EnergyConstants(**self.energy)


def combined_norm(u: VectorField, tau: SymTensorField) -> float:
    """||A u|| + ||u||_H1 + ||tau||_H2, the amplitude measure for data."""
    from .fields import l2_norm

    return l2_norm(stokes_apply(u)) + sobolev_norm(u, 1) + sobolev_norm(tau, 2)


def _taylor_green(grid: GridSpec) -> VectorField:
    coords = grid.coordinates()
    if grid.dim == 2:
        x, y = coords
        data = np.stack([np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)])
    else:
        x, y, z = coords
        data = np.stack([
            np.sin(x) * np.cos(y) * np.cos(z),
            -np.cos(x) * np.sin(y) * np.cos(z),
            np.zeros(grid.shape),
        ])
    return VectorField(grid, np.ascontiguousarray(
        np.broadcast_to(data, (grid.dim,) + grid.shape)), check=False)


def _single_mode(grid: GridSpec) -> VectorField:
    # One divergence-free mode: u_y ~ cos(x) (k = (1,0,..), amplitude along y).
    # Both members of the Hermitian pair (+-1 on the first axis) are set so
    # the stored spectrum is exactly the transform of the real samples.
    hat = np.zeros((grid.dim,) + grid.rshape, dtype=complex)
    tail = (0,) * (grid.dim - 1)
    hat[(1, 1) + tail] = 0.25 * grid.npoints
    hat[(1, -1) + tail] = 0.25 * grid.npoints
    return VectorField.from_hat(grid, hat)


def _random_smooth_component(rng: np.random.Generator, grid: GridSpec,
                             cutoff: float) -> np.ndarray:
    """One scalar component with spectrum ~ exp(-(|k| - cutoff)_+)."""
    ws = grid.ws
    noise = rng.standard_normal(grid.shape)
    hat = ws.rfftn(noise)
    kmag = np.sqrt(ws.k2)
    hat *= np.exp(-np.maximum(kmag - cutoff, 0.0))
    hat *= ws.dealias_mask
    zero = (0,) * grid.dim
    hat[zero] = 0.0
    return ws.irfftn(hat)


def make_initial(config: SolverConfig) -> FlowState:
    """Initial state scaled so the combined norm equals the amplitude."""
    grid = config.grid
    kind = config.initial_condition

    if kind == "from_checkpoint":
        from .checkpoint import load_checkpoint

        state, _ = load_checkpoint(config.checkpoint_path, dealias=grid.dealias)
        return state

    if config.amplitude == 0.0 or kind == "zero":
        if config.amplitude > 0.0:
            raise ValueError("cannot scale the zero state to a nonzero norm")
        return FlowState.zero(grid)

    tau = SymTensorField.zeros(grid)
    if kind == "taylor_green":
        u = _taylor_green(grid)
    elif kind == "single_mode":
        u = _single_mode(grid)
    elif kind == "random_smooth":
        rng = np.random.default_rng(config.seed)
        cutoff = min(grid.n) / 8.0
        nc = tau.ncomp
        u_data = np.stack([
            _random_smooth_component(rng, grid, cutoff) for _ in range(grid.dim)])
        tau_frac = config.tau_amplitude_fraction
        tau_data = np.stack([
            _random_smooth_component(rng, grid, cutoff) for _ in range(nc)])
        u = project(VectorField(grid, u_data, check=False))
        tau = SymTensorField(grid, tau_frac * tau_data, check=False)
    else:  # pragma: no cover
        raise AssertionError(kind)

    u = dealias(u)
    tau = dealias(tau)
    norm = combined_norm(u, tau)
    if norm == 0.0:
        raise ValueError("generated data vanished; cannot reach amplitude")
    scale = config.amplitude / norm
    return FlowState(t=0.0, u=scale * u, tau=scale * tau)
