import io

import numpy as np
import pytest

from chac import model, noise, solver, spectral
from chac.solver import BlowUpError, PicardConvergenceError
from chac.spectral import GridSpec, SpectralBasis


class TestLinearExactness:
    def test_cosine_decay(self, desk_grid, desk_basis, linear_params, cosine):
        w = noise.generate(desk_grid, 1, 0)
        path = solver.solve_path(cosine, w, linear_params, desk_basis)
        exact = np.exp(-2.0 * desk_grid.times)[:, None] * cosine[None, :]
        assert np.max(np.abs(path.u - exact)) <= 1e-10

    def test_exact_regardless_of_nt(self, linear_params):
        # the per-mode integrator carries no time-discretization error
        for nt in (4, 16, 64):
            grid = GridSpec(64, nt, 0.25)
            basis = SpectralBasis(64)
            w = noise.generate(grid, 1, 0)
            path = solver.solve_path(np.cos(grid.x), w, linear_params, basis)
            exact = np.exp(-2.0 * grid.times)[:, None] * np.cos(grid.x)[None, :]
            assert np.max(np.abs(path.u - exact)) <= 1e-10

    def test_zero_stays_zero(self, desk_grid, desk_basis):
        params = model.ModelParams(sigma=model.sigma_constant(0.0), f_enabled=True)
        w = noise.generate(desk_grid, 2, 0)
        path = solver.solve_path(np.zeros(desk_grid.nx), w, params, desk_basis)
        assert np.all(path.u == 0.0)


class TestStep:
    def test_kernel_summation_oracle(self, desk_grid, desk_basis, constant_noise_params):
        w = noise.generate(desk_grid, 3, 0)
        out = solver.step(np.zeros(desk_grid.nx), 0, w, constant_noise_params, desk_basis)
        c0 = constant_noise_params.sigma.c0
        oracle = np.zeros(desk_grid.nx)
        for jx, x in enumerate(desk_grid.x):
            oracle[jx] = sum(
                spectral.green_eval(x, desk_grid.x[j], desk_grid.dt, desk_basis) * c0 * w.dw[0, j]
                for j in range(desk_grid.nx)
            )
        rel = np.max(np.abs(out - oracle)) / np.max(np.abs(oracle))
        assert rel < 2e-3

    def test_initial_condition_checked(self, desk_grid, desk_basis, default_params):
        w = noise.generate(desk_grid, 3, 0)
        bad = np.zeros(desk_grid.nx)
        bad[5] = np.nan
        with pytest.raises(BlowUpError):
            solver.step(bad, 0, w, default_params, desk_basis)


class TestSolvePath:
    def test_deterministic(self, desk_grid, desk_basis, default_params, cosine):
        w = noise.generate(desk_grid, 4, 0)
        a = solver.solve_path(cosine, w, default_params, desk_basis)
        b = solver.solve_path(cosine, w, default_params, desk_basis)
        assert np.array_equal(a.u, b.u)

    def test_initial_row(self, desk_grid, desk_basis, default_params, cosine):
        w = noise.generate(desk_grid, 4, 0)
        path = solver.solve_path(cosine, w, default_params, desk_basis)
        assert np.array_equal(path.u[0], cosine)

    def test_blow_up_reported(self, desk_grid, desk_basis):
        # enormous cutoff level leaves the cubic drift untamed
        params = model.ModelParams(cutoff=model.CutoffSpec(1e200),
                                   sigma=model.sigma_constant(50.0))
        w = noise.generate(desk_grid, 5, 0)
        with pytest.raises(BlowUpError) as err:
            solver.solve_path(np.cos(desk_grid.x), w, params, desk_basis)
        assert err.value.step_index >= 0
        assert np.isfinite(err.value.max_abs)

    def test_cutoff_inert_below_level(self, desk_grid, desk_basis, cosine):
        w = noise.generate(desk_grid, 6, 0)
        lo = model.ModelParams(cutoff=model.CutoffSpec(5.0))
        hi = model.ModelParams(cutoff=model.CutoffSpec(10.0))
        a = solver.solve_path(cosine, w, lo, desk_basis)
        assert a.sup_norm < 5.0
        b = solver.solve_path(cosine, w, hi, desk_basis)
        assert np.array_equal(a.u, b.u)

    def test_mismatched_initial(self, desk_grid, desk_basis, default_params):
        w = noise.generate(desk_grid, 4, 0)
        with pytest.raises(ValueError):
            solver.solve_path(np.zeros(10), w, default_params, desk_basis)


class TestPicard:
    def test_constant_map_freezes_in_one_step(self, desk_grid, desk_basis, constant_noise_params, cosine):
        # with f off and constant sigma the iteration map ignores its argument
        w = noise.generate(desk_grid, 7, 0)
        _, diffs = solver.picard_solve(cosine, w, constant_noise_params, desk_basis,
                                       tol=1e-30, max_iter=3)
        assert diffs[1] == 0.0

    def test_default_config_converges(self, desk_grid, desk_basis, default_params, cosine):
        w = noise.generate(desk_grid, 8, 0)
        path, diffs = solver.picard_solve(cosine, w, default_params, desk_basis,
                                          tol=1e-8, max_iter=20)
        assert diffs[-1] < 1e-8
        assert all(b < a for a, b in zip(diffs[1:], diffs[2:]))
        ref = solver.solve_path(cosine, w, default_params, desk_basis)
        gap = np.max(np.abs(path.u - ref.u))
        envelope = 5 * desk_grid.dt * 260.0   # 5 dt max|f_n'| at n = 5
        assert gap < envelope
        assert gap < 1e-7

    def test_ratio_trend_eventually_decreasing(self, desk_grid, desk_basis, default_params, cosine):
        w = noise.generate(desk_grid, 9, 0)
        _, diffs = solver.picard_solve(cosine, w, default_params, desk_basis,
                                       tol=1e-12, max_iter=40)
        ratios = np.array(diffs[1:]) / np.array(diffs[:-1])
        assert np.all(np.diff(ratios[1:]) < 0)

    def test_fixed_point_matches_stepper_on_refined_grids(self, default_params):
        # gap is tolerance-limited at any resolution, far inside the
        # first-order envelope at both nt and 2*nt
        for nt in (256, 512):
            grid = GridSpec(64, nt, 0.25)
            basis = SpectralBasis(64)
            w = noise.generate(grid, 10, 0)
            u0 = np.cos(grid.x)
            path, _ = solver.picard_solve(u0, w, default_params, basis,
                                          tol=1e-10, max_iter=30)
            ref = solver.solve_path(u0, w, default_params, basis)
            assert np.max(np.abs(path.u - ref.u)) < 1e-9

    def test_non_convergence_carries_diffs(self, desk_grid, desk_basis, default_params, cosine):
        w = noise.generate(desk_grid, 8, 0)
        with pytest.raises(PicardConvergenceError) as err:
            solver.picard_solve(cosine, w, default_params, desk_basis,
                                tol=1e-30, max_iter=2)
        assert len(err.value.diffs) == 2

    def test_argument_validation(self, desk_grid, desk_basis, default_params, cosine):
        w = noise.generate(desk_grid, 8, 0)
        with pytest.raises(ValueError):
            solver.picard_solve(cosine, w, default_params, desk_basis, tol=0.0)
        with pytest.raises(ValueError):
            solver.picard_solve(cosine, w, default_params, desk_basis, max_iter=0)


class TestSupMoment:
    def test_decaying_cosine(self, desk_grid, desk_basis, linear_params, cosine):
        w = noise.generate(desk_grid, 11, 0)
        path = solver.solve_path(cosine, w, linear_params, desk_basis)
        value, stderr = solver.sup_moment([path], p=2)
        # the decaying profile peaks at t = 0; on the midpoint grid the sup
        # of the sampled cosine is cos(x_0), not exactly 1
        assert value == pytest.approx(np.max(np.abs(cosine)) ** 2, rel=1e-13)
        assert value == pytest.approx(1.0, abs=1e-3)
        assert stderr == 0.0

    def test_zero_field(self, desk_grid, desk_basis, cosine):
        params = model.ModelParams(sigma=model.sigma_constant(0.0))
        w = noise.generate(desk_grid, 11, 0)
        path = solver.solve_path(np.zeros(desk_grid.nx), w, params, desk_basis)
        value, _ = solver.sup_moment([path], p=2)
        assert value == 0.0

    def test_default_ensemble_finite(self, desk_grid, desk_basis, default_params, cosine):
        paths = []
        for r in range(200):
            w = noise.generate(desk_grid, noise.stream_for_replicate(13, r), r)
            paths.append(solver.solve_path(cosine, w, default_params, desk_basis))
        value, stderr = solver.sup_moment(paths, p=2)
        assert np.isfinite(value) and value > 0
        assert stderr < 0.1 * value

    def test_empty_ensemble(self):
        with pytest.raises(ValueError):
            solver.sup_moment([], p=2)


class TestExport:
    def test_csv_format(self, small_grid, small_basis):
        params = model.ModelParams(sigma=model.sigma_constant(0.5))
        w = noise.generate(small_grid, 14, 0)
        path = solver.solve_path(np.cos(small_grid.x), w, params, small_basis)
        buf = io.StringIO()
        solver.path_to_csv(path, buf, comment="config=deadbeef seed=14")
        lines = buf.getvalue().splitlines()
        assert lines[0] == "# config=deadbeef seed=14"
        assert lines[1] == "t,x,u"
        assert len(lines) == 2 + (small_grid.nt + 1) * small_grid.nx
        t, x, u = (float(tok) for tok in lines[2].split(","))
        assert t == 0.0 and x == small_grid.x[0] and u == path.u[0, 0]
