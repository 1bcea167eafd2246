"""Field containers and spectral calculus."""

import numpy as np
import pytest

from oldroyd.fields import (
    ScalarField,
    SymTensorField,
    TensorField,
    VectorField,
    advect,
    curl,
    deformation,
    divergence_tensor,
    divergence_vec,
    from_spectral,
    g_a,
    gradient,
    l2_norm,
    linf_norm,
    lp_norm,
    materialize,
    sobolev_norm,
    sym_index,
    to_spectral,
    vorticity,
)
from oldroyd.grid import GridSpec

from conftest import (
    random_scalar,
    random_symtensor,
    random_vector,
    smooth_values,
)


class TestGridSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            GridSpec.make(4, 16)
        with pytest.raises(ValueError):
            GridSpec.make(2, 12)      # not a power of two
        with pytest.raises(ValueError):
            GridSpec.make(2, 4)       # too small
        with pytest.raises(ValueError):
            GridSpec.make(2, 16, box_length=-1.0)

    def test_shapes(self):
        g = GridSpec.make(3, 16)
        assert g.shape == (16, 16, 16)
        assert g.rshape == (16, 16, 9)
        assert g.npoints == 16**3
        assert g.volume == pytest.approx((2 * np.pi) ** 3)


class TestRoundTrip:
    def test_constant_field(self, grid):
        f = ScalarField(grid, np.full(grid.shape, 3.5))
        coeffs = to_spectral(f)
        hat = coeffs.data
        assert hat[(0,) * grid.dim] == pytest.approx(3.5 * grid.npoints)
        off_mode = np.abs(hat).sum() - abs(hat[(0,) * grid.dim])
        assert off_mode <= 1e-9 * grid.npoints

    def test_single_mode(self):
        grid = GridSpec.make(2, 32)
        x, _ = grid.coordinates()
        f = ScalarField(grid, np.broadcast_to(np.sin(x), grid.shape).copy())
        hat = f.hat
        mask = np.zeros(grid.rshape, dtype=bool)
        mask[1, 0] = mask[-1, 0] = True
        assert np.abs(hat[~mask]).max() <= 1e-10 * grid.npoints

    def test_random_round_trip(self, rng, grid):
        f = random_scalar(rng, grid)
        back = from_spectral(to_spectral(f))
        err = np.abs(back.data - f.data).max()
        assert err <= 1e-13 * np.abs(f.data).max()

    def test_lazy_from_hat_matches_eager(self, rng, grid):
        f = random_vector(rng, grid)
        lazy = VectorField.from_hat(grid, f.hat.copy())
        assert np.abs(lazy.data - f.data).max() <= 1e-13 * np.abs(f.data).max()
        # cached derivative path agrees with one-op-at-a-time path
        materialize(lazy)
        g1 = gradient(lazy)
        g2 = gradient(f)
        assert np.abs(g1.data - g2.data).max() <= 1e-12

    def test_nonfinite_rejected(self, grid):
        bad = np.zeros(grid.shape)
        bad[(0,) * grid.dim] = np.nan
        with pytest.raises(ValueError):
            ScalarField(grid, bad)


class TestDifferentialOps:
    def test_gradient_analytic(self):
        grid = GridSpec.make(2, 32)
        x, _ = grid.coordinates()
        f = ScalarField(grid, np.broadcast_to(np.sin(x), grid.shape).copy())
        g = gradient(f)
        assert np.abs(g.data[0] - np.cos(x)).max() <= 1e-12
        assert np.abs(g.data[1]).max() <= 1e-12

    def test_gradient_constant(self, grid):
        f = ScalarField(grid, np.full(grid.shape, 2.0))
        assert np.abs(gradient(f).data).max() <= 1e-12

    def test_gradient_fd_convergence(self, rng):
        # Fix one smooth function; spectral gradient on a fine grid is the
        # truth, central differences converge to it at 2nd order.
        errs = []
        for n in (32, 64):
            grid = GridSpec.make(2, n)
            x, y = grid.coordinates()
            vals = np.sin(2 * x) * np.cos(3 * y)
            f = ScalarField(grid, np.broadcast_to(vals, grid.shape).copy())
            g = gradient(f).data
            h = grid.spacing[0]
            fd_x = (np.roll(f.data, -1, axis=0) - np.roll(f.data, 1, axis=0)) / (2 * h)
            errs.append(np.abs(g[0] - fd_x).max())
        order = np.log2(errs[0] / errs[1])
        assert order >= 1.9

    def test_divergence_of_curl(self, rng):
        grid = GridSpec.make(3, 16)
        a = random_vector(rng, grid)
        w = curl(a)
        div = divergence_vec(w)
        assert linf_norm(div) <= 1e-12 * max(1.0, linf_norm(a))

    def test_curl_of_gradient(self, rng, grid):
        phi = random_scalar(rng, grid)
        c = curl(gradient(phi))
        assert linf_norm(c) <= 1e-12 * max(1.0, linf_norm(phi))

    def test_curl_analytic_3d(self):
        grid = GridSpec.make(3, 16)
        _, y, _ = grid.coordinates()
        data = np.zeros((3,) + grid.shape)
        data[0] = np.sin(y)
        u = VectorField(grid, data)
        w = curl(u)
        assert np.abs(w.data[2] + np.cos(y)).max() <= 1e-12
        assert np.abs(w.data[:2]).max() <= 1e-12

    def test_divergence_tensor_isotropic(self, rng, grid):
        phi = random_scalar(rng, grid)
        nc = grid.dim * (grid.dim + 1) // 2
        comps = np.zeros((nc,) + grid.shape)
        for i in range(grid.dim):
            comps[sym_index(grid.dim, i, i)] = phi.data
        tau = SymTensorField(grid, comps)
        div = divergence_tensor(tau)
        grad = gradient(phi)
        assert np.abs(div.data - grad.data).max() <= 1e-12

    def test_divergence_tensor_fd(self):
        # Central differences converge to the spectral divergence at 2nd
        # order under grid refinement.
        errs = []
        for n in (32, 64):
            grid = GridSpec.make(2, n)
            x, y = grid.coordinates()
            comps = np.stack([
                np.broadcast_to(np.sin(2 * x) * np.cos(y), grid.shape),
                np.broadcast_to(np.cos(x) * np.sin(3 * y), grid.shape),
                np.broadcast_to(np.sin(x + 2 * y), grid.shape),
            ])
            tau = SymTensorField(grid, comps.copy())
            div = divergence_tensor(tau).data
            h = grid.spacing[0]

            def ddx(arr, ax):
                return (np.roll(arr, -1, axis=ax)
                        - np.roll(arr, 1, axis=ax)) / (2 * h)

            fd0 = ddx(comps[sym_index(2, 0, 0)], 0) \
                + ddx(comps[sym_index(2, 0, 1)], 1)
            errs.append(np.abs(div[0] - fd0).max())
        order = np.log2(errs[0] / errs[1])
        assert order >= 1.9


class TestDeformation:
    def test_d_plus_w_is_grad(self, rng, grid):
        u = random_vector(rng, grid)
        gu = gradient(u).data
        d = deformation(u)
        w = vorticity(u)
        dim = grid.dim
        for i in range(dim):
            for j in range(dim):
                dij = d.data[sym_index(dim, i, j)]
                wij = w.data[i * dim + j]
                assert np.abs(dij + wij - gu[i * dim + j]).max() <= 1e-13

    def test_analytic_shear(self):
        grid = GridSpec.make(2, 32)
        _, y = grid.coordinates()
        data = np.zeros((2,) + grid.shape)
        data[0] = np.sin(y)
        u = VectorField(grid, data)
        d = deformation(u)
        w = vorticity(u)
        assert np.abs(d.data[sym_index(2, 0, 1)] - 0.5 * np.cos(y)).max() <= 1e-12
        assert np.abs(w.data[1] - 0.5 * np.cos(y)).max() <= 1e-12
        assert np.abs(d.data[sym_index(2, 0, 0)]).max() <= 1e-12

    def test_antisymmetry(self, rng, grid):
        u = random_vector(rng, grid)
        w = vorticity(u).data
        dim = grid.dim
        for i in range(dim):
            for j in range(dim):
                assert np.abs(w[i * dim + j] + w[j * dim + i]).max() <= 1e-13


class TestGa:
    def test_identity_tau(self, rng, grid):
        # tau = I commutes with W, so g_a(I, grad u) = -2a D(u)
        nc = grid.dim * (grid.dim + 1) // 2
        comps = np.zeros((nc,) + grid.shape)
        for i in range(grid.dim):
            comps[sym_index(grid.dim, i, i)] = 1.0
        tau = SymTensorField(grid, comps)
        u = random_vector(rng, grid)
        for a in (-1.0, 0.0, 0.5, 1.0):
            res = g_a(tau, gradient(u), a)
            expect = (-2.0 * a) * deformation(u)
            assert np.abs(res.data - expect.data).max() <= 1e-13 * max(
                1.0, linf_norm(u))

    def test_zero_velocity(self, rng, grid):
        tau = random_symtensor(rng, grid)
        res = g_a(tau, gradient(VectorField.zeros(grid)), 1.0)
        assert np.abs(res.data).max() <= 1e-14

    def test_dense_matrix_oracle(self, rng, grid):
        tau = random_symtensor(rng, grid)
        u = random_vector(rng, grid)
        gu = gradient(u)
        dim = grid.dim
        # dense pointwise evaluation: tau W - W tau - a (D tau + tau D)
        t = np.zeros((dim, dim) + grid.shape)
        for i in range(dim):
            for j in range(dim):
                t[i, j] = tau.data[sym_index(dim, i, j)]
        g = gu.data.reshape((dim, dim) + grid.shape)
        d = 0.5 * (g + g.transpose(1, 0, *range(2, 2 + dim)))
        w = 0.5 * (g - g.transpose(1, 0, *range(2, 2 + dim)))
        for a in (-1.0, 0.37, 1.0):
            tw = np.einsum("ik...,kj...->ij...", t, w)
            wt = np.einsum("ik...,kj...->ij...", w, t)
            dt_ = np.einsum("ik...,kj...->ij...", d, t)
            td = np.einsum("ik...,kj...->ij...", t, d)
            dense = tw - wt - a * (dt_ + td)
            res = g_a(tau, gu, a)
            for i in range(dim):
                for j in range(i, dim):
                    err = np.abs(res.data[sym_index(dim, i, j)] - dense[i, j]).max()
                    assert err <= 1e-12, (a, i, j, err)

    def test_a_out_of_range(self, rng, grid):
        tau = random_symtensor(rng, grid)
        u = random_vector(rng, grid)
        with pytest.raises(ValueError):
            g_a(tau, gradient(u), 1.5)


class TestAdvect:
    def test_zero_velocity(self, rng, grid):
        f = random_scalar(rng, grid)
        res = advect(VectorField.zeros(grid), f)
        assert linf_norm(res) <= 1e-14

    def test_constant_velocity(self):
        grid = GridSpec.make(2, 32)
        x, _ = grid.coordinates()
        f = ScalarField(grid, np.broadcast_to(np.sin(x), grid.shape).copy())
        v = VectorField(grid, np.stack([np.ones(grid.shape),
                                        np.zeros(grid.shape)]))
        res = advect(v, f)
        assert np.abs(res.data - np.cos(x)).max() <= 1e-11

    def test_fine_grid_oracle(self, rng):
        # Dealiased product on n=32 vs the exact product computed on n=64
        # (band-limited inputs make the fine-grid product alias-free).
        coarse = GridSpec.make(2, 32)
        fine = GridSpec.make(2, 64)
        v = random_vector(rng, coarse)
        f = random_scalar(rng, coarse)

        def refine(field, cls):
            hat_c = field.hat
            shape = ((field.ncomp,) if field.ncomp > 1 else ()) + fine.rshape
            hat_f = np.zeros(shape, dtype=complex)
            sl = (np.s_[:],) if field.ncomp > 1 else ()
            hat_f[sl + (np.s_[:11], np.s_[:11])] = hat_c[sl + (np.s_[:11], np.s_[:11])]
            hat_f[sl + (np.s_[-10:], np.s_[:11])] = hat_c[sl + (np.s_[-10:], np.s_[:11])]
            return cls.from_hat(fine, hat_f * (fine.npoints / coarse.npoints))

        vf = refine(v, VectorField)
        ff = refine(f, ScalarField)
        ref = advect(vf, ff, dealias_result=False)
        res = advect(v, f)
        # compare retained modes
        hat_res = res.hat / coarse.npoints
        hat_ref = ref.hat / fine.npoints
        kept = np.zeros_like(hat_res)
        kept[:11, :11] = hat_ref[:11, :11]
        kept[-10:, :11] = hat_ref[-10:, :11]
        mask = coarse.ws.dealias_mask
        err = np.abs((hat_res - kept)[mask]).max()
        assert err <= 1e-12 * max(1.0, np.abs(hat_ref).max())


class TestNorms:
    def test_sin_l2(self):
        grid = GridSpec.make(3, 16)
        x, _, _ = grid.coordinates()
        f = ScalarField(grid, np.broadcast_to(np.sin(x), grid.shape).copy())
        vol = (2 * np.pi) ** 3
        assert sobolev_norm(f, 0) ** 2 == pytest.approx(vol / 2, rel=1e-12)
        assert sobolev_norm(f, 1) ** 2 == pytest.approx(vol, rel=1e-12)

    def test_plancherel_vs_quadrature(self, rng, grid):
        f = random_symtensor(rng, grid)
        spectral = sobolev_norm(f, 0) ** 2
        from oldroyd.fields import SYM_MULT
        w = np.asarray(SYM_MULT[grid.dim]).reshape(
            (-1,) + (1,) * grid.dim)
        quad = float((w * f.data**2).sum()) * grid.volume / grid.npoints
        assert abs(spectral - quad) <= 1e-10 * quad

    def test_linf_and_lp(self):
        grid = GridSpec.make(2, 64)
        x, _ = grid.coordinates()
        f = ScalarField(grid, np.broadcast_to(np.sin(x), grid.shape).copy())
        assert abs(linf_norm(f) - 1.0) <= 1e-3
        # ||sin x||_L6^6 over (2pi)^2 = (2pi)^2 * 5/16
        vol = (2 * np.pi) ** 2
        assert lp_norm(f, 6) ** 6 == pytest.approx(vol * 5 / 16, rel=1e-3)

    def test_constant_linf(self, grid):
        f = ScalarField(grid, np.full(grid.shape, -2.5))
        assert linf_norm(f) == pytest.approx(2.5)


class TestDivCurlIdentity:
    def test_mean_zero_identity(self, rng, grid):
        # ||grad u||^2 = ||div u||^2 + ||curl u||^2 for mean-zero fields
        for _ in range(10):
            u = random_vector(rng, grid, mean_zero=True)
            from oldroyd.fields import grad_sobolev_norm
            lhs = grad_sobolev_norm(u, 0) ** 2
            rhs = sobolev_norm(divergence_vec(u), 0) ** 2 \
                + sobolev_norm(curl(u), 0) ** 2
            assert abs(lhs - rhs) <= 1e-10 * lhs


class TestArithmetic:
    def test_add_sub_scale(self, rng, grid):
        a = random_scalar(rng, grid)
        b = random_scalar(rng, grid)
        c = 2.0 * a - b + a * 0.5
        expect = 2.5 * a.data - b.data
        assert np.abs(c.data - expect).max() <= 1e-14

    def test_incompatible(self, rng, grid):
        a = random_scalar(rng, grid)
        u = random_vector(rng, grid)
        with pytest.raises(TypeError):
            a + u
