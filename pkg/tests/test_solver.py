import warnings

import numpy as np
import pytest
import scipy.linalg as sla

from bardina_strip.horizontal_filter import FilterSpec, apply_Ah
from bardina_strip.mms import get_reference
from bardina_strip.operators import OperatorSet, d2_matrix, d2_values
from bardina_strip.solver import (BlowUpError, CflWarning, ForcingSpec,
                                  ImexStepper, InitialConditionSpec,
                                  SolverConfig, build_field, nse_run, run,
                                  step)
from bardina_strip.strip_grid import Field, l2_norm
from bardina_strip.verification import fit_order

# forcing of the steady reference at nu = 0.05, alpha = 0.3, tabulated by
# high-precision numerical differentiation of the closed form
STEADY_FORCING_TABLE = [
    (0.0, -0.75, -0.5639902750651041),
    (0.0, -0.25, 2.0299224853515625),
    (0.0, 0.25, 1.0299224853515625),
    (0.0, 0.75, -3.5639902750651045),
    (1.5707963267948966, -0.75, 0.481318359375),
    (1.5707963267948966, -0.25, -1.210150390625),
    (1.5707963267948966, 0.25, -2.210150390625),
    (1.5707963267948966, 0.75, -2.518681640625),
    (3.141592653589793, -0.75, 3.5639902750651045),
    (3.141592653589793, -0.25, -1.0299224853515625),
    (3.141592653589793, 0.25, -2.0299224853515625),
    (3.141592653589793, 0.75, 0.5639902750651041),
    (4.71238898038469, -0.75, 2.518681640625),
    (4.71238898038469, -0.25, 2.210150390625),
    (4.71238898038469, 0.25, 1.210150390625),
    (4.71238898038469, 0.75, -0.481318359375),
]


def _decay_config(**over):
    kw = dict(nx=32, ny=33, dt=1e-3, t_end=0.05, nu=0.01, alpha=0.5,
              ic=InitialConditionSpec(kind="trig_clamped", amplitude=1.0,
                                      k1=1, k2=0))
    kw.update(over)
    return SolverConfig(**kw)


class TestConfigValidation:

    def test_rejects_nonpositive_viscosity(self):
        with pytest.raises(ValueError, match="nu"):
            SolverConfig(nu=0.0)

    def test_rejects_nonpositive_dt(self):
        with pytest.raises(ValueError, match="dt"):
            SolverConfig(dt=-1e-3)

    def test_rejects_unknown_scheme(self):
        with pytest.raises(ValueError, match="scheme"):
            SolverConfig(scheme="rk4")

    def test_rejects_incommensurate_horizon(self):
        with pytest.raises(ValueError, match="multiple"):
            SolverConfig(dt=3e-3, t_end=0.01)

    def test_rejects_bad_forcing_kind(self):
        with pytest.raises(ValueError, match="forcing"):
            ForcingSpec(kind="vortex")

    def test_mms_specs_need_reference(self):
        with pytest.raises(ValueError, match="reference"):
            ForcingSpec(kind="mms")
        with pytest.raises(ValueError, match="reference"):
            InitialConditionSpec(kind="mms")


class TestFixedPointAndBoundaries:

    def test_zero_data_stays_zero(self):
        state, series = run(SolverConfig(nx=16, ny=17, dt=1e-2, t_end=0.1))
        assert np.all(state.v.values == 0.0)
        assert all(r.energy == 0.0 for r in series.records)

    def test_horizon_zero_returns_initial_state(self):
        cfg = _decay_config(t_end=0.0)
        state, series = run(cfg)
        ic = build_field(cfg.ic, cfg.grid())
        assert np.array_equal(state.v.values, ic.values)
        assert len(series) == 1

    def test_clamped_rows_hold_at_machine_precision(self):
        cfg = _decay_config(t_end=0.02)
        stepper = ImexStepper(cfg)
        state = stepper.initial_state()
        for _ in range(5):
            state = stepper.step(state)
            v = state.v.values
            scale = np.abs(v).max()
            assert np.abs(v[:, [0, -1]]).max() <= 1e-12 * scale
            dv = d2_values(v, stepper.grid.dy)
            assert np.abs(dv[:, [0, -1]]).max() <= 1e-11 * scale / stepper.grid.dy
            # tangential derivatives on the walls vanish with the wall values
            ops = OperatorSet(stepper.grid, dealias=False)
            d1v = ops.d1(state.v).values
            assert np.abs(d1v[:, [0, -1]]).max() <= 1e-12 * scale

    def test_step_function_matches_stepper(self):
        cfg = _decay_config()
        stepper = ImexStepper(cfg)
        s0 = stepper.initial_state()
        a = stepper.step(s0)
        b = step(stepper.initial_state(), cfg)
        assert np.array_equal(a.v.values, b.v.values)


class TestLinearizedPropagator:
    """Single-mode runs with the advection frozen against expm of the
    mass-consistent reduced operator."""

    @staticmethod
    def _oracle_error(scheme, dt, t_end=0.2, nx=16, ny=33, nu=0.05, alpha=0.3):
        cfg = SolverConfig(nx=nx, ny=ny, dt=dt, t_end=t_end, nu=nu, alpha=alpha,
                           scheme=scheme, nonlinear=False,
                           ic=InitialConditionSpec(kind="trig_clamped",
                                                   amplitude=1.0, k1=1))
        state, _ = run(cfg)
        grid = cfg.grid()
        dy = grid.dy
        lap1d = d2_matrix(ny, dy) - grid.wavenumbers[1] ** 2 * np.eye(ny)
        bc = np.zeros((4, ny))
        bc[0, 0] = 1.0
        bc[3, -1] = 1.0
        bc[1, :3] = np.array([-3.0, 4.0, -1.0]) / (2 * dy)
        bc[2, -3:] = np.array([1.0, -4.0, 3.0]) / (2 * dy)
        basis = sla.null_space(bc)
        interior = np.arange(2, ny - 2)
        mass = lap1d[interior] @ basis
        stiff = (lap1d @ lap1d)[interior] @ basis
        reduced = np.linalg.solve(mass, nu * stiff)
        v_hat0 = ImexStepper(cfg).initial_state().v_hat[1]
        y0 = np.linalg.solve(mass, lap1d[interior] @ v_hat0)
        exact = basis @ (sla.expm(t_end * reduced) @ y0)
        return float(np.abs(state.v_hat[1] - exact).max())

    @pytest.mark.parametrize("scheme,lo,hi", [
        ("imex_euler", 0.85, 1.15),
        ("imex_cnab2", 1.8, 2.2),
    ])
    def test_order_against_expm(self, scheme, lo, hi):
        dts = [4e-3, 2e-3, 1e-3]
        errs = [self._oracle_error(scheme, dt) for dt in dts]
        assert lo <= fit_order(dts, errs) <= hi


class TestDeterminismAndBlowUp:

    def test_bitwise_reproducible(self):
        cfg = _decay_config()
        s1, d1 = run(cfg)
        s2, d2 = run(cfg)
        assert np.array_equal(s1.v.values, s2.v.values)
        assert all(a.csv_values() == b.csv_values()
                   for a, b in zip(d1.records, d2.records))

    def test_blow_up_detected(self):
        cfg = SolverConfig(nx=32, ny=33, dt=0.2, t_end=4.0, nu=1e-4, alpha=0.0,
                           ic=InitialConditionSpec(kind="trig_clamped",
                                                   amplitude=200.0, k1=3, k2=2))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CflWarning)
            with pytest.raises(BlowUpError, match="blow-up"):
                run(cfg)

    def test_cfl_warning(self):
        cfg = SolverConfig(nx=32, ny=33, dt=0.2, t_end=0.2, nu=0.5, alpha=0.0,
                           ic=InitialConditionSpec(kind="trig_clamped",
                                                   amplitude=10.0, k1=2, k2=1))
        with pytest.warns(CflWarning):
            run(cfg)


class TestManufacturedForcing:

    def test_zero_reference_gives_zero_forcing(self):
        ref = get_reference("zero_field", 2 * np.pi, 1.0, nu=0.05, alpha=0.3)
        grid = _decay_config().grid()
        assert np.all(ref.forcing_field(grid, 1.7).values == 0.0)
        assert np.all(ref.solution_field(grid, 0.0).values == 0.0)

    def test_steady_forcing_matches_table(self):
        ref = get_reference("steady_mode", 2 * np.pi, 1.0, nu=0.05, alpha=0.3)
        grid = _decay_config(nx=32, ny=17).grid()
        g = ref.forcing_field(grid, 0.0)
        for x1v, x2v, expected in STEADY_FORCING_TABLE:
            i = int(round(x1v / grid.dx))
            j = int(round((x2v + grid.domain.m) / grid.dy))
            assert g.values[i, j] == pytest.approx(expected, abs=1e-10)

    def test_steady_forcing_time_independent(self):
        ref = get_reference("steady_mode", 2 * np.pi, 1.0, nu=0.05, alpha=0.3)
        grid = _decay_config().grid()
        a = ref.forcing_field(grid, 0.0).values
        b = ref.forcing_field(grid, 3.2).values
        assert np.array_equal(a, b)

    def test_forcing_consistent_with_discrete_operators(self):
        # the residual of the discrete operators applied to the closed-form
        # steady solution must reproduce the symbolic forcing to O(dy^2)
        nu, alpha = 0.05, 0.3
        rels, hs = [], []
        for ny in (33, 65, 129):
            cfg = _decay_config(nx=32, ny=ny)
            grid = cfg.grid()
            ops = OperatorSet(grid, dealias=False)
            ref = get_reference("steady_mode", 2 * np.pi, 1.0, nu=nu, alpha=alpha)
            v = ref.solution_field(grid, 0.0)
            g = ref.forcing_field(grid, 0.0)
            advect = ops.bilinear_B(v, v)
            visc = apply_Ah(ops.biharmonic(v), FilterSpec(alpha))
            resid = advect.values - nu * visc.values - g.values
            # wall rows of the iterated laplacian are closure-dominated and
            # excluded by the solver; the rate lives on a fixed interior band
            band = np.abs(grid.x2) <= 0.8 * grid.domain.m
            rels.append(np.abs(resid[:, band]).max() / np.abs(g.values).max())
            hs.append(grid.dy)
        assert rels[-1] < 5e-3
        assert fit_order(hs, rels) == pytest.approx(2.0, abs=0.2)

    def test_alpha_zero_reference_drops_filter_term(self):
        grid = _decay_config().grid()
        with_f = get_reference("steady_mode", 2 * np.pi, 1.0, nu=0.05, alpha=0.3)
        without = get_reference("steady_mode", 2 * np.pi, 1.0, nu=0.05, alpha=0.0)
        ops = OperatorSet(grid, dealias=False)
        v = without.solution_field(grid, 0.0)
        advect = ops.bilinear_B(v, v)
        plain = advect.values - 0.05 * ops.biharmonic(v).values
        got = without.forcing_field(grid, 0.0).values
        band = np.abs(grid.x2) <= 0.8 * grid.domain.m
        interior = np.abs((got - plain)[:, band]).max() / np.abs(got).max()
        assert interior < 1e-2
        assert not np.allclose(with_f.forcing_field(grid, 0.0).values, got)


class TestMmsConvergence:

    def test_spatial_second_order(self):
        errs, hs = [], []
        for ny in (17, 33, 65):
            cfg = SolverConfig(nx=16, ny=ny, dt=2e-4, t_end=0.1, nu=0.05,
                               alpha=0.4, scheme="imex_cnab2",
                               forcing=ForcingSpec(kind="mms", reference="two_mode"),
                               ic=InitialConditionSpec(kind="mms",
                                                       reference="two_mode"))
            state, _ = run(cfg)
            ref = get_reference("two_mode", cfg.lx, cfg.m, nu=cfg.nu,
                                alpha=cfg.alpha)
            exact = ref.solution_field(state.v.grid, state.t)
            errs.append(l2_norm(Field(state.v.grid,
                                      state.v.values - exact.values)))
            hs.append(2.0 / (ny - 1))
        assert fit_order(hs, errs) == pytest.approx(2.0, abs=0.3)


class TestFileFields:

    def test_initial_condition_from_snapshot(self, tmp_path, rng):
        from bardina_strip.runio import write_snapshot
        cfg = _decay_config(t_end=0.01)
        grid = cfg.grid()
        x1, x2 = grid.mesh()
        vals = np.sin(x1) * (1 - x2 ** 2) ** 2
        path = tmp_path / "ic.bstr"
        write_snapshot(path, Field(grid, vals), 0.0, cfg.alpha, cfg.nu)
        from dataclasses import replace
        file_cfg = replace(cfg, ic=InitialConditionSpec(kind="file",
                                                        path=str(path)))
        state, _ = run(replace(file_cfg, t_end=0.0))
        assert np.array_equal(state.v.values, vals)

    def test_forcing_from_snapshot_matches_analytic(self, tmp_path):
        from dataclasses import replace

        from bardina_strip.runio import write_snapshot
        cfg = _decay_config(t_end=0.02,
                            forcing=ForcingSpec(kind="trig_clamped",
                                                amplitude=0.7, k1=1, k2=0))
        grid = cfg.grid()
        g = build_field(cfg.forcing, grid)
        path = tmp_path / "g.bstr"
        write_snapshot(path, g, 0.0, cfg.alpha, cfg.nu)
        ref_state, _ = run(cfg)
        file_state, _ = run(replace(cfg, forcing=ForcingSpec(kind="file",
                                                             path=str(path))))
        assert np.array_equal(ref_state.v.values, file_state.v.values)

    def test_dimension_mismatch_rejected(self, tmp_path):
        from dataclasses import replace

        from bardina_strip.runio import write_snapshot
        small = _decay_config(nx=32, ny=17, t_end=0.01)
        grid = small.grid()
        path = tmp_path / "wrong.bstr"
        write_snapshot(path, Field(grid, np.zeros(grid.shape)), 0.0, 0.5, 0.01)
        cfg = replace(_decay_config(t_end=0.01),
                      ic=InitialConditionSpec(kind="file", path=str(path)))
        with pytest.raises(ValueError, match="does not match"):
            run(cfg)


class TestUnfilteredPath:

    def test_nse_run_equals_alpha_zero(self):
        cfg = _decay_config(alpha=0.35)
        s_nse, _ = nse_run(cfg)
        s_zero, _ = run(_decay_config(alpha=0.0))
        assert np.array_equal(s_nse.v.values, s_zero.v.values)

    def test_small_filter_scales_shrink_the_gap(self):
        base = dict(nx=32, ny=33, dt=2e-3, t_end=0.3, nu=0.02,
                    ic=InitialConditionSpec(kind="trig_clamped", amplitude=1.0,
                                            k1=1, k2=0),
                    forcing=ForcingSpec(kind="trig_clamped", amplitude=0.5,
                                        k1=2, k2=1))
        ref, _ = run(SolverConfig(alpha=0.0, **base))
        gaps = []
        for alpha in (0.4, 0.2, 0.1):
            state, _ = run(SolverConfig(alpha=alpha, **base))
            gaps.append(l2_norm(Field(state.v.grid,
                                      state.v.values - ref.v.values)))
        assert gaps[0] > gaps[1] > gaps[2]


class TestWeakFormResidual:

    def test_residual_small_and_bounded(self):
        from bardina_strip.diagnostics import weak_residual
        rels = []
        for ny, dt in ((33, 1e-3), (65, 1e-3), (129, 1e-3)):
            cfg = _decay_config(ny=ny, dt=dt, nu=0.02, alpha=0.3)
            stepper = ImexStepper(cfg)
            state = stepper.initial_state()
            for _ in range(3):
                prev = state
                state = stepper.step(state)
            grid = stepper.grid
            x1, x2 = grid.mesh()
            h = Field(grid, np.sin(x1 + 0.4) * (1 - x2 ** 2) ** 2
                      * np.cos(0.5 * np.pi * x2), clamped=True)
            g = build_field(cfg.forcing, grid)
            res, scale = weak_residual(prev.v, state.v, cfg.dt, h, cfg.nu,
                                       cfg.alpha, g, stepper.ops)
            rels.append(abs(res) / scale)
        assert max(rels) <= 2e-3
