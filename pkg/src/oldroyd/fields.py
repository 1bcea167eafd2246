"""Field containers and spectral calculus on the periodic torus.

Fields are immutable: every operation returns a new field.  The real-space
samples are the primary representation; the half-complex FFT view is
computed lazily and cached (fields never mutate, so the cache is safe).

Symmetric tensors store only the upper triangle, row-major:
(xx, xy, yy) in 2D and (xx, xy, xz, yy, yz, zz) in 3D.  Full tensors
(velocity gradients) store all dim*dim entries row-major with the
convention (grad u)_{ij} = d_j u_i.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .grid import GridSpec

SYM_PAIRS = {2: ((0, 0), (0, 1), (1, 1)),
             3: ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))}

# Frobenius multiplicity of each stored symmetric component.
SYM_MULT = {2: (1.0, 2.0, 1.0), 3: (1.0, 2.0, 2.0, 1.0, 2.0, 2.0)}


def sym_index(dim: int, i: int, j: int) -> int:
    if i > j:
        i, j = j, i
    return SYM_PAIRS[dim].index((i, j))


class SpectralCoeffs:
    """Half-complex Fourier coefficients of a field (unnormalized FFT)."""

    __slots__ = ("grid", "field_type", "data")

    def __init__(self, grid: GridSpec, field_type: type, data: np.ndarray):
        self.grid = grid
        self.field_type = field_type
        self.data = data
        self.data.flags.writeable = False


class Field:
    """Base class; subclasses fix the number of components."""

    __slots__ = ("grid", "_data", "_hat", "_derivs")

    kind = "field"

    def __init__(self, grid: GridSpec, values: np.ndarray, check: bool = True):
        values = np.asarray(values, dtype=np.float64)
        expected = self._expected_shape(grid)
        if values.shape != expected:
            raise ValueError(
                f"{type(self).__name__} expects shape {expected}, got {values.shape}")
        if check and not np.all(np.isfinite(values)):
            raise ValueError(f"non-finite values in {type(self).__name__}")
        values = np.ascontiguousarray(values)
        values.flags.writeable = False
        self.grid = grid
        self._data = values
        self._hat = None
        self._derivs = None

    @classmethod
    def _expected_shape(cls, grid: GridSpec) -> tuple[int, ...]:
        nc = cls.ncomp_for(grid.dim)
        return ((nc,) + grid.shape) if nc else grid.shape

    @classmethod
    def ncomp_for(cls, dim: int) -> int:
        raise NotImplementedError

    @property
    def ncomp(self) -> int:
        return self.ncomp_for(self.grid.dim) or 1

    @classmethod
    def zeros(cls, grid: GridSpec):
        return cls(grid, np.zeros(cls._expected_shape(grid)), check=False)

    @classmethod
    def from_hat(cls, grid: GridSpec, hat: np.ndarray):
        """Field defined by its spectral coefficients.

        The real-space samples are materialized lazily, so purely spectral
        pipelines (projections, derivatives, norms) never pay for inverse
        transforms they do not use.
        """
        hat = np.ascontiguousarray(np.asarray(hat, dtype=np.complex128))
        nc = cls.ncomp_for(grid.dim)
        expected = ((nc,) + grid.rshape) if nc else grid.rshape
        if hat.shape != expected:
            raise ValueError(
                f"{cls.__name__} expects spectral shape {expected}, got {hat.shape}")
        hat.flags.writeable = False
        field = cls.__new__(cls)
        field.grid = grid
        field._data = None
        field._hat = hat
        field._derivs = None
        return field

    @property
    def data(self) -> np.ndarray:
        if self._data is None:
            values = self.grid.ws.irfftn(self._hat)
            values.flags.writeable = False
            self._data = values
        return self._data

    @property
    def hat(self) -> np.ndarray:
        if self._hat is None:
            h = self.grid.ws.rfftn(self._data)
            h.flags.writeable = False
            self._hat = h
        return self._hat

    def _like(self, values: np.ndarray):
        return type(self)(self.grid, values, check=False)

    # Arithmetic: convenience for stepping and tests, same-type fields only.
    def __add__(self, other):
        self._check_compatible(other)
        return self._like(self.data + other.data)

    def __sub__(self, other):
        self._check_compatible(other)
        return self._like(self.data - other.data)

    def __mul__(self, scalar):
        return self._like(self.data * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return self._like(-self.data)

    def _check_compatible(self, other):
        if type(other) is not type(self) or other.grid != self.grid:
            raise TypeError("incompatible fields")

    def mean(self) -> np.ndarray:
        axes = tuple(range(-self.grid.dim, 0))
        return self.data.mean(axis=axes)

    def __repr__(self):
        return f"{type(self).__name__}(grid={self.grid.n})"


class ScalarField(Field):
    kind = "scalar"

    @classmethod
    def ncomp_for(cls, dim: int) -> int:
        return 0


class VectorField(Field):
    kind = "vector"

    @classmethod
    def ncomp_for(cls, dim: int) -> int:
        return dim


class TensorField(Field):
    """Full (generally non-symmetric) rank-2 tensor, dim*dim components."""

    kind = "tensor"

    @classmethod
    def ncomp_for(cls, dim: int) -> int:
        return dim * dim


class SymTensorField(Field):
    kind = "symtensor"

    @classmethod
    def ncomp_for(cls, dim: int) -> int:
        return dim * (dim + 1) // 2

    @classmethod
    def from_full(cls, grid: GridSpec, full: np.ndarray, check: bool = True):
        dim = grid.dim
        comps = np.stack([full[i * dim + j] for i, j in SYM_PAIRS[dim]])
        return cls(grid, comps, check=check)


def _comp_hats(field: Field) -> np.ndarray:
    """Spectral coefficients with an explicit leading component axis."""
    h = field.hat
    return h[None] if isinstance(field, ScalarField) else h


def _derivs_real(field: Field) -> np.ndarray:
    """Real-space first derivatives d_j f_c, shape (ncomp, dim, *grid).

    Cached on the (immutable) field: the transport stepper differentiates
    the same stress field once per Picard iteration, and the velocity
    gradient is shared between advection, forcing, and rotation terms.
    """
    if field._derivs is None:
        ws = field.grid.ws
        dim = field.grid.dim
        hats = _comp_hats(field)
        nc = hats.shape[0]
        dh = np.multiply(hats[:, None], ws.ik_dense[None, :])
        derivs = ws.irfftn(dh, overwrite=True)
        derivs.flags.writeable = False
        field._derivs = derivs
    return field._derivs


def materialize(field: Field) -> None:
    """Fill the real-space and derivative caches in one batched transform.

    Cheaper than triggering them separately when both are about to be
    needed (one inverse transform call instead of two).
    """
    if field._data is not None or field._derivs is not None:
        field.data
        _derivs_real(field)
        return
    ws = field.grid.ws
    dim = field.grid.dim
    hats = _comp_hats(field)
    nc = hats.shape[0]
    batch = np.empty((nc * (dim + 1),) + field.grid.rshape, dtype=np.complex128)
    batch[:nc] = hats
    np.multiply(hats[:, None], ws.ik_dense[None, :],
                out=batch[nc:].reshape((nc, dim) + field.grid.rshape))
    real = ws.irfftn(batch, overwrite=True)
    data = real[:nc] if not isinstance(field, ScalarField) else real[0]
    data.flags.writeable = False
    derivs = real[nc:].reshape((nc, dim) + field.grid.shape)
    derivs.flags.writeable = False
    field._data = data
    field._derivs = derivs


# ---------------------------------------------------------------------------
# Transforms


def to_spectral(field: Field) -> SpectralCoeffs:
    return SpectralCoeffs(field.grid, type(field), field.hat)


def from_spectral(coeffs: SpectralCoeffs) -> Field:
    return coeffs.field_type.from_hat(coeffs.grid, coeffs.data)


def dealias(field: Field) -> Field:
    """Project onto the 2/3-rule band (no-op when dealiasing is off)."""
    if not field.grid.dealias:
        return field
    return type(field).from_hat(field.grid, field.hat * field.grid.ws.dealias_mask)


# ---------------------------------------------------------------------------
# Differential operators (exact Fourier multipliers)


def gradient(field: Field) -> Field:
    """grad of a scalar (-> vector) or vector (-> full tensor)."""
    dim = field.grid.dim
    if isinstance(field, ScalarField):
        return VectorField(field.grid, _derivs_real(field)[0], check=False)
    if isinstance(field, VectorField):
        derivs = _derivs_real(field)
        # (i, j) = d_j u_i lands at row-major index i*dim + j.
        return TensorField(field.grid,
                           derivs.reshape((dim * dim,) + field.grid.shape),
                           check=False)
    raise TypeError(f"gradient not defined for {type(field).__name__}")


def divergence_vec(v: VectorField) -> ScalarField:
    ws = v.grid.ws
    hat = sum(ws.ik[ax] * v.hat[ax] for ax in range(v.grid.dim))
    return ScalarField.from_hat(v.grid, hat)


def divergence_tensor(tau: SymTensorField) -> VectorField:
    """(div tau)_i = d_j tau_ij."""
    ws = tau.grid.ws
    dim = tau.grid.dim
    hat = np.stack([
        sum(ws.ik[j] * tau.hat[sym_index(dim, i, j)] for j in range(dim))
        for i in range(dim)
    ])
    return VectorField.from_hat(tau.grid, hat)


def curl(v: VectorField) -> Field:
    """curl of a vector: vector in 3D, scalar (d_x v_y - d_y v_x) in 2D."""
    ws = v.grid.ws
    if v.grid.dim == 2:
        hat = ws.ik[0] * v.hat[1] - ws.ik[1] * v.hat[0]
        return ScalarField.from_hat(v.grid, hat)
    hat = np.stack([
        ws.ik[1] * v.hat[2] - ws.ik[2] * v.hat[1],
        ws.ik[2] * v.hat[0] - ws.ik[0] * v.hat[2],
        ws.ik[0] * v.hat[1] - ws.ik[1] * v.hat[0],
    ])
    return VectorField.from_hat(v.grid, hat)


def laplacian(field: Field) -> Field:
    ws = field.grid.ws
    return type(field).from_hat(field.grid, -ws.k2 * field.hat)


def deformation(u: VectorField) -> SymTensorField:
    """D(u) = (grad u + grad u^T) / 2."""
    dim = u.grid.dim
    derivs = _derivs_real(u)
    pairs = SYM_PAIRS[dim]
    comps = np.empty((len(pairs),) + u.grid.shape)
    for c, (i, j) in enumerate(pairs):
        np.add(derivs[i, j], derivs[j, i], out=comps[c])
        comps[c] *= 0.5
    return SymTensorField(u.grid, comps, check=False)


def vorticity(u: VectorField) -> TensorField:
    """W(u) = (grad u - grad u^T) / 2, returned as a full tensor."""
    dim = u.grid.dim
    derivs = _derivs_real(u)
    comps = np.empty((dim * dim,) + u.grid.shape)
    for i in range(dim):
        for j in range(dim):
            np.subtract(derivs[i, j], derivs[j, i], out=comps[i * dim + j])
            comps[i * dim + j] *= 0.5
    return TensorField(u.grid, comps, check=False)


# ---------------------------------------------------------------------------
# Pointwise tensor algebra


def g_a(tau: SymTensorField, grad_u: TensorField, a: float) -> SymTensorField:
    """tau W - W tau - a (D tau + tau D) with D, W from the given gradient."""
    if abs(a) > 1.0:
        raise ValueError(f"slip parameter must satisfy |a| <= 1, got {a}")
    out = kernels.ga(tau.data, grad_u.data, a, tau.grid.dim)
    return SymTensorField(tau.grid, out, check=False)


def sym_outer(v: VectorField) -> SymTensorField:
    """v (x) v as a symmetric tensor."""
    return SymTensorField(v.grid, kernels.sym_outer(v.data, v.grid.dim), check=False)


def advect(v: VectorField, field: Field, dealias_result: bool = True) -> Field:
    """(v . grad) field, dealiased when the grid asks for it.

    dealias_result=False lets a caller combine several quadratic terms and
    truncate the sum once instead of each term separately.
    """
    out = kernels.dot_grad(v.data, _derivs_real(field))
    if isinstance(field, ScalarField):
        out = out[0]
    result = type(field)(field.grid, out, check=False)
    return dealias(result) if dealias_result else result


# ---------------------------------------------------------------------------
# Norms (Plancherel quadratures; L^infty / L^p from grid samples)


def _comp_mult(field: Field) -> np.ndarray:
    if isinstance(field, SymTensorField):
        return np.asarray(SYM_MULT[field.grid.dim])
    return np.ones(field.ncomp)


def _hats_sq(ws, hats: np.ndarray, comp_mult, multiplier=None) -> float:
    """Plancherel sum of |hats|^2 over a (ncomp, *rshape) coefficient batch."""
    e = hats.real * hats.real
    e += hats.imag * hats.imag
    if multiplier is not None:
        e *= multiplier
    e *= ws.parseval_w
    per_comp = e.reshape(e.shape[0], -1).sum(axis=1)
    return ws.l2_factor * float(np.dot(np.asarray(comp_mult, float), per_comp))


def _spectral_sq(field: Field, multiplier: np.ndarray) -> float:
    return _hats_sq(field.grid.ws, _comp_hats(field), _comp_mult(field),
                    multiplier)


def sobolev_norm(field: Field, m: int = 0) -> float:
    """H^m norm via the Plancherel sum with multiplier (1+|k|^2)^m."""
    if m not in (0, 1, 2, 3):
        raise ValueError(f"m must be in 0..3, got {m}")
    ws = field.grid.ws
    mult = (1.0 + ws.k2) ** m if m else np.ones_like(ws.k2)
    return float(np.sqrt(_spectral_sq(field, mult)))


def l2_norm(field: Field) -> float:
    return sobolev_norm(field, 0)


def sobolev_inner(a: Field, b: Field, m: int = 0) -> float:
    """H^m inner product (Frobenius over components) via Plancherel."""
    if type(a) is not type(b) or a.grid != b.grid:
        raise TypeError("incompatible fields")
    ws = a.grid.ws
    mult = (1.0 + ws.k2) ** m if m else 1.0
    ha, hb = _comp_hats(a), _comp_hats(b)
    cm = _comp_mult(a)
    total = 0.0
    for c in range(ha.shape[0]):
        total += cm[c] * float(np.sum(
            ws.parseval_w * mult * (ha[c] * np.conj(hb[c])).real))
    return ws.l2_factor * total


def grad_sobolev_norm(field: Field, m: int = 0) -> float:
    """H^m norm of the gradient, computed without forming it."""
    ws = field.grid.ws
    # kd2 matches the discrete gradient operator, so ||grad f|| computed here
    # equals the L2 norm of gradient(f) exactly.
    mult = ws.kd2 * ((1.0 + ws.k2) ** m if m else 1.0)
    return float(np.sqrt(_spectral_sq(field, mult)))


def _pointwise_magnitude_sq(field: Field) -> np.ndarray:
    data = field.data[None] if isinstance(field, ScalarField) else field.data
    mult = _comp_mult(field)
    out = data[0] * data[0]
    if mult[0] != 1.0:
        out *= mult[0]
    for c in range(1, data.shape[0]):
        sq = data[c] * data[c]
        if mult[c] != 1.0:
            sq *= mult[c]
        out += sq
    return out


def linf_norm(field: Field) -> float:
    """Grid-sample sup of the pointwise magnitude (a lower bound on L^inf)."""
    return float(np.sqrt(_pointwise_magnitude_sq(field).max()))


def lp_norm(field: Field, p: float) -> float:
    """L^p quadrature norm of the pointwise magnitude on the uniform grid."""
    if p <= 0:
        raise ValueError("p must be positive")
    mag = np.sqrt(_pointwise_magnitude_sq(field))
    cell = field.grid.volume / field.grid.npoints
    return float((cell * np.sum(mag**p)) ** (1.0 / p))
