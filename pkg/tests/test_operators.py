import numpy as np
import pytest

from bardina_strip.operators import OperatorSet, d2_matrix
from bardina_strip.strip_grid import (Field, StripDomain, inner_product,
                                      l2_norm, make_grid)
from bardina_strip.verification import fit_order, identity_test_fields

# d2(v) d1(lap u) - d1(v) d2(lap u) for u = sin(x1) sin(pi x2 / 2),
# v = cos(x1) (1 - x2^2)^2 on the 2pi x [-1, 1] strip, tabulated by
# high-precision numerical differentiation.
B_TABLE = [
    (0.0, -0.75, 4.204542441157709),
    (0.0, -0.25, 1.2439846447862886),
    (0.0, 0.25, 1.2439846447862886),
    (0.0, 0.75, 4.204542441157709),
    (1.5707963267948966, -0.75, -0.39895116258482605),
    (1.5707963267948966, -0.25, -4.422642738230207),
    (1.5707963267948966, 0.25, -4.422642738230207),
    (1.5707963267948966, 0.75, -0.39895116258482605),
    (3.141592653589793, -0.75, 4.204542441157709),
    (3.141592653589793, -0.25, 1.2439846447862886),
    (3.141592653589793, 0.25, 1.2439846447862886),
    (3.141592653589793, 0.75, 4.204542441157709),
    (4.71238898038469, -0.75, -0.39895116258482605),
    (4.71238898038469, -0.25, -4.422642738230207),
    (4.71238898038469, 0.25, -4.422642738230207),
    (4.71238898038469, 0.75, -0.39895116258482605),
]


def _grid(nx=32, ny=33):
    return make_grid(StripDomain(2.0 * np.pi, 1.0), nx, ny)


def _table_fields(grid):
    x1, x2 = grid.mesh()
    u = Field(grid, np.sin(x1) * np.sin(np.pi * x2 / 2))
    v = Field(grid, np.cos(x1) * (1 - x2 ** 2) ** 2)
    return u, v


class TestD1:

    def test_exact_on_resolved_mode(self):
        grid = _grid()
        ops = OperatorSet(grid)
        kap = 2 * np.pi / grid.domain.lx
        x1, x2 = grid.mesh()
        f = Field(grid, np.sin(kap * x1) * np.ones_like(x2))
        expected = kap * np.cos(kap * x1) * np.ones_like(x2)
        assert np.abs(ops.d1(f).values - expected).max() <= 1e-12 * kap

    def test_constant_maps_to_zero(self):
        grid = _grid()
        f = Field(grid, np.full(grid.shape, 3.7))
        assert np.abs(OperatorSet(grid).d1(f).values).max() <= 1e-13

    def test_matches_dense_dft_derivative(self, rng):
        grid = _grid(16, 17)
        ops = OperatorSet(grid)
        coeffs = np.zeros((grid.n_modes, grid.ny), complex)
        coeffs[:5] = rng.standard_normal((5, grid.ny)) + 1j * rng.standard_normal((5, grid.ny))
        coeffs[0] = coeffs[0].real
        vals = np.fft.irfft(coeffs, n=grid.nx, axis=0)
        # dense oracle: differentiate the full spectrum mode by mode
        full = np.fft.fft(vals, axis=0)
        k = np.fft.fftfreq(grid.nx, d=1.0 / grid.nx) * 2 * np.pi / grid.domain.lx
        dense = np.real(np.fft.ifft(1j * k[:, None] * full, axis=0))
        got = ops.d1(Field(grid, vals)).values
        assert np.abs(got - dense).max() <= 1e-12 * np.abs(dense).max()

    def test_commutes_with_transforms(self, rng):
        from bardina_strip.strip_grid import to_modal
        grid = _grid(16, 17)
        ops = OperatorSet(grid)
        f = Field(grid, rng.standard_normal(grid.shape))
        via_field = to_modal(ops.d1(f)).coeffs
        factor = 1j * grid.wavenumbers.copy()
        factor[-1] = 0.0
        via_modal = factor[:, None] * to_modal(f).coeffs
        assert np.abs(via_field - via_modal).max() <= 1e-10


class TestD2:

    def test_exact_on_quadratic(self):
        grid = _grid()
        x1, x2 = grid.mesh()
        f = Field(grid, x2 ** 2 * np.ones_like(x1))
        got = OperatorSet(grid).d2(f).values
        assert np.abs(got - 2 * x2).max() <= 1e-12

    def test_constant_maps_to_zero(self):
        grid = _grid()
        f = Field(grid, np.full(grid.shape, -1.5))
        assert np.abs(OperatorSet(grid).d2(f).values).max() <= 1e-12

    def test_second_order_convergence(self):
        errs, hs = [], []
        for ny in (17, 33, 65):
            grid = _grid(8, ny)
            x1, x2 = grid.mesh()
            m = grid.domain.m
            f = Field(grid, np.sin(np.pi * x2 / (2 * m)) * np.ones_like(x1))
            exact = (np.pi / (2 * m)) * np.cos(np.pi * x2 / (2 * m)) * np.ones_like(x1)
            errs.append(np.abs(OperatorSet(grid).d2(f).values - exact).max())
            hs.append(grid.dy)
        assert fit_order(hs, errs) == pytest.approx(2.0, abs=0.1)


class TestLaplacianBiharmonic:

    @staticmethod
    def _eigenfield(grid):
        x1, x2 = grid.mesh()
        m = grid.domain.m
        kap = 2 * np.pi / grid.domain.lx
        f = np.sin(kap * x1) * np.sin(np.pi * (x2 + m) / (2 * m))
        lam = kap ** 2 + (np.pi / (2 * m)) ** 2
        return Field(grid, f), lam

    def test_zero_maps_to_zero(self):
        grid = _grid()
        ops = OperatorSet(grid)
        z = Field(grid, np.zeros(grid.shape))
        assert np.all(ops.laplacian(z).values == 0.0)
        assert np.all(ops.biharmonic(z).values == 0.0)

    def test_laplacian_eigenvalue(self):
        errs, hs = [], []
        for ny in (17, 33, 65):
            grid = _grid(8, ny)
            ops = OperatorSet(grid)
            f, lam = self._eigenfield(grid)
            err_field = np.abs(ops.laplacian(f).values + lam * f.values) / lam
            assert err_field.max() < 0.02
            # wall closures are one-sided with their own constant; the
            # convergence rate is read off the interior rows
            errs.append(err_field[:, 1:-1].max())
            hs.append(grid.dy)
        assert fit_order(hs, errs) == pytest.approx(2.0, abs=0.2)

    def test_biharmonic_eigenvalue_interior(self):
        errs, hs = [], []
        for ny in (33, 65, 129):
            grid = _grid(8, ny)
            ops = OperatorSet(grid)
            f, lam = self._eigenfield(grid)
            got = ops.biharmonic(f).values[:, 2:-2]
            err = np.abs(got - lam ** 2 * f.values[:, 2:-2]).max() / lam ** 2
            errs.append(err)
            hs.append(grid.dy)
        assert errs[0] < 0.02
        assert fit_order(hs, errs) == pytest.approx(2.0, abs=0.25)

    def test_d2_matrix_matches_operator(self, rng):
        grid = _grid(8, 17)
        mat = d2_matrix(grid.ny, grid.dy)
        from bardina_strip.operators import d2sq_values
        vals = rng.standard_normal(grid.shape)
        assert np.allclose(vals @ mat.T, d2sq_values(vals, grid.dy), atol=1e-10)


class TestBilinearForm:

    def test_horizontal_independence_annihilates(self):
        grid = _grid()
        x1, x2 = grid.mesh()
        v = Field(grid, (1 - x2 ** 2) ** 2 * np.ones_like(x1))
        ops = OperatorSet(grid)
        assert np.abs(ops.bilinear_B(v, v).values).max() <= 1e-12
        assert np.abs(ops.bilinear_B_conservative(v, v).values).max() <= 1e-12

    @pytest.mark.parametrize("form", ["bilinear_B", "bilinear_B_conservative"])
    def test_matches_tabulated_values(self, form):
        errs, hs = [], []
        for ny in (17, 33, 65):
            grid = _grid(32, ny)
            ops = OperatorSet(grid, dealias=True)
            u, v = _table_fields(grid)
            b = getattr(ops, form)(u, v).values
            worst = 0.0
            for x1v, x2v, expected in B_TABLE:
                i = int(round(x1v / grid.dx))
                j = int(round((x2v + grid.domain.m) / grid.dy))
                worst = max(worst, abs(b[i, j] - expected))
            errs.append(worst / max(abs(r[2]) for r in B_TABLE))
            hs.append(grid.dy)
        assert errs[-1] < 5e-3
        assert fit_order(hs, errs) >= 1.8

    def test_forms_agree_under_refinement(self):
        diffs, hs = [], []
        for ny in (33, 65, 129):
            grid = _grid(32, ny)
            ops = OperatorSet(grid, dealias=True)
            u, v, _w = identity_test_fields(grid)
            d = ops.bilinear_B(u, v).values - ops.bilinear_B_conservative(u, v).values
            diffs.append(np.abs(d).max() / np.abs(ops.bilinear_B(u, v).values).max())
            hs.append(grid.dy)
        assert fit_order(hs, diffs) >= 1.8


class TestTrilinearIdentities:

    def test_zero_triple(self):
        grid = _grid()
        z = Field(grid, np.zeros(grid.shape), clamped=True)
        assert OperatorSet(grid).trilinear_identity_residuals(z, z, z) == (0.0, 0.0)

    def test_conservative_form_telescopes_exactly(self):
        # spectral summation by parts in x1 plus wall-vanishing tangential
        # derivatives make the conservative pairings cancel to rounding
        grid = _grid(64, 65)
        ops = OperatorSet(grid, dealias=True)
        u, v, w = identity_test_fields(grid)
        r1, r2 = ops.trilinear_identity_relative(u, v, w)
        assert r1 <= 1e-12
        assert r2 <= 1e-12

    def test_swap_symmetry(self):
        grid = _grid(32, 33)
        ops = OperatorSet(grid, dealias=True)
        u, v, w = identity_test_fields(grid)
        r1a, _ = ops.trilinear_identity_residuals(u, v, w)
        r1b, _ = ops.trilinear_identity_residuals(u, w, v)
        assert r1a == pytest.approx(r1b, rel=1e-9, abs=1e-14)

    def test_pointwise_defect_second_order(self):
        rels, hs = [], []
        for ny in (65, 129, 257):
            grid = _grid(32, ny)
            ops = OperatorSet(grid, dealias=True)
            u, v, w = identity_test_fields(grid)
            b_uv = ops.bilinear_B(u, v)
            b_uw = ops.bilinear_B(u, w)
            r1 = abs(inner_product(b_uv, w) + inner_product(b_uw, v))
            r2 = abs(inner_product(b_uv, v))
            s1 = l2_norm(b_uv) * l2_norm(w) + l2_norm(b_uw) * l2_norm(v)
            s2 = l2_norm(b_uv) * l2_norm(v)
            rels.append((r1 / s1, r2 / s2))
            hs.append(grid.dy)
        assert rels[0][0] < 1e-3 and rels[0][1] < 1e-3
        assert fit_order(hs, [r[0] for r in rels]) >= 1.8
        assert fit_order(hs, [r[1] for r in rels]) >= 1.8


class TestDealiasing:

    @staticmethod
    def _band_limited(grid, kmax, gen):
        c = np.zeros((grid.n_modes, grid.ny), complex)
        c[:kmax + 1] = (gen.standard_normal((kmax + 1, grid.ny))
                        + 1j * gen.standard_normal((kmax + 1, grid.ny)))
        c[0] = c[0].real
        return np.fft.irfft(c, n=grid.nx, axis=0)

    def test_matches_padded_transform_oracle(self, rng):
        grid = _grid(24, 17)
        ops = OperatorSet(grid, dealias=True)
        kmax = 7  # inside the retained band (k < 8)
        a = self._band_limited(grid, kmax, rng)
        b = self._band_limited(grid, kmax, rng)
        got = ops.product(a, b)

        def pad(arr, nx2):
            c = np.fft.rfft(arr, axis=0) * (nx2 / arr.shape[0])
            cp = np.zeros((nx2 // 2 + 1, arr.shape[1]), complex)
            cp[:c.shape[0]] = c
            return np.fft.irfft(cp, n=nx2, axis=0)

        exact = pad(a, 48) * pad(b, 48)
        cp = np.fft.rfft(exact, axis=0) / 2.0
        cback = cp[:grid.n_modes].copy()
        cback[~(np.arange(grid.n_modes) < grid.nx / 3.0)] = 0.0
        oracle = np.fft.irfft(cback, n=grid.nx, axis=0)
        assert np.abs(got - oracle).max() <= 1e-12 * np.abs(oracle).max()

    def test_disabled_dealiasing_is_plain_product(self, rng):
        grid = _grid(16, 17)
        ops = OperatorSet(grid, dealias=False)
        a = rng.standard_normal(grid.shape)
        b = rng.standard_normal(grid.shape)
        assert np.array_equal(ops.product(a, b), a * b)

    def test_truncation_is_projection(self, rng):
        grid = _grid(16, 17)
        ops = OperatorSet(grid, dealias=True)
        f = Field(grid, rng.standard_normal(grid.shape))
        once = ops.dealias_field(f)
        twice = ops.dealias_field(once)
        assert np.abs(once.values - twice.values).max() <= 1e-13
