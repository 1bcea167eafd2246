"""Shared fixtures and random-field helpers."""

import numpy as np
import pytest

from oldroyd.fields import (
    ScalarField,
    SymTensorField,
    VectorField,
    dealias,
)
from oldroyd.grid import GridSpec
from oldroyd.leray import project


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(params=[2, 3], ids=["2d", "3d"])
def grid(request):
    n = 32 if request.param == 2 else 16
    return GridSpec.make(request.param, n)


def smooth_values(rng, grid, shape):
    """Band-limited random samples: white noise low-pass filtered in k."""
    ws = grid.ws
    noise = rng.standard_normal(shape + grid.shape)
    hat = ws.rfftn(noise)
    hat *= np.exp(-np.maximum(np.sqrt(ws.k2) - min(grid.n) / 8.0, 0.0))
    hat *= ws.dealias_mask
    return ws.irfftn(hat)


def random_scalar(rng, grid, mean_zero=False):
    vals = smooth_values(rng, grid, ())
    if mean_zero:
        vals = vals - vals.mean()
    return ScalarField(grid, vals)


def random_vector(rng, grid, mean_zero=False, div_free=False):
    vals = smooth_values(rng, grid, (grid.dim,))
    if mean_zero or div_free:
        vals = vals - vals.mean(axis=tuple(range(-grid.dim, 0)), keepdims=True)
    v = VectorField(grid, vals)
    if div_free:
        v = project(v)
    return v


def random_symtensor(rng, grid):
    nc = grid.dim * (grid.dim + 1) // 2
    return SymTensorField(grid, smooth_values(rng, grid, (nc,)))


def small_state(grid, amplitude):
    """Divergence-free Taylor-Green style state scaled to a combined norm."""
    from oldroyd.config import SolverConfig
    from oldroyd.config import make_initial
    from oldroyd.leray import PhysicalParams

    config = SolverConfig(
        grid=grid, params=PhysicalParams(re=1.0, we=1.0, alpha=0.9, a=0.0),
        dt=1e-3, t_end=1e-3, initial_condition="taylor_green",
        amplitude=amplitude)
    return make_initial(config)


def assert_close(actual, expected, tol, label=""):
    err = abs(actual - expected)
    scale = max(abs(expected), 1.0)
    assert err <= tol * scale, f"{label}: |{actual} - {expected}| = {err}"
