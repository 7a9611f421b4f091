import numpy as np
import pytest

from chac import localization, model, noise, solver


class TestClassify:
    def test_decaying_cosine(self, desk_grid, desk_basis, linear_params, cosine):
        w = noise.generate(desk_grid, 201, 0)
        path = solver.solve_path(cosine, w, linear_params, desk_basis)
        rec = localization.classify(path, [0.5, 1.5, 2.0, 10.0])
        assert rec.sup_norm == pytest.approx(np.max(np.abs(cosine)), rel=1e-13)
        assert not rec.levels[0.5]
        assert rec.levels[1.5] and rec.levels[2.0] and rec.levels[10.0]

    def test_zero_solution_in_every_level(self, desk_grid, desk_basis):
        params = model.ModelParams(sigma=model.sigma_constant(0.0))
        w = noise.generate(desk_grid, 201, 0)
        path = solver.solve_path(np.zeros(desk_grid.nx), w, params, desk_basis)
        rec = localization.classify(path, [0.1, 1.0, 5.0])
        assert rec.sup_norm == 0.0
        assert all(rec.levels.values())

    def test_membership_monotone_per_record(self, desk_grid, desk_basis, default_params, cosine):
        levels = [1.0, 2.0, 3.0, 5.0, 10.0]
        for r in range(20):
            w = noise.generate(desk_grid, noise.stream_for_replicate(77, r), r)
            path = solver.solve_path(cosine, w, default_params, desk_basis)
            rec = localization.classify(path, levels)
            flags = [rec.levels[n] for n in levels]
            assert all(b or not a for a, b in zip(flags, flags[1:]))


class TestConsistency:
    def test_small_noise_identical(self, desk_grid, desk_basis, cosine):
        params = model.ModelParams(sigma=model.sigma_constant(0.05))
        for r in range(30):
            w = noise.generate(desk_grid, noise.stream_for_replicate(88, r), r)
            res = localization.consistency_check(cosine, w, params, desk_basis, 5.0, 10.0)
            assert not res.skipped
            assert res.identical
            assert res.max_deviation == 0.0

    def test_vacuous_when_sup_reaches_level(self, desk_grid, desk_basis, cosine):
        params = model.ModelParams(sigma=model.sigma_constant(0.05))
        w = noise.generate(desk_grid, 89, 0)
        res = localization.consistency_check(cosine, w, params, desk_basis, 0.5, 1.0)
        assert res.skipped

    def test_noise_free_trivially_identical(self, desk_grid, desk_basis, cosine):
        params = model.ModelParams(sigma=model.sigma_constant(0.0))
        w = noise.generate(desk_grid, 90, 0)
        res = localization.consistency_check(cosine, w, params, desk_basis, 5.0, 10.0)
        assert not res.skipped and res.identical

    def test_level_order_enforced(self, desk_grid, desk_basis, cosine, default_params):
        w = noise.generate(desk_grid, 91, 0)
        with pytest.raises(ValueError):
            localization.consistency_check(cosine, w, default_params, desk_basis, 5.0, 5.0)


class TestCoverage:
    def _records(self, desk_grid, desk_basis, params, u0, n=40):
        out = []
        for r in range(n):
            w = noise.generate(desk_grid, noise.stream_for_replicate(92, r), r)
            path = solver.solve_path(u0, w, params, desk_basis)
            out.append(localization.classify(path, [0.01, 1.0, 2.0, 5.0, 1e6]))
        return out

    def test_extreme_levels(self, desk_grid, desk_basis, default_params, cosine):
        records = self._records(desk_grid, desk_basis, default_params, cosine)
        coverage = localization.coverage_estimate(records, [0.01, 1e6])
        assert coverage[0.01] == 0.0
        assert coverage[1e6] == 1.0

    def test_nondecreasing(self, desk_grid, desk_basis, default_params, cosine):
        records = self._records(desk_grid, desk_basis, default_params, cosine)
        levels = [0.01, 1.0, 2.0, 5.0, 1e6]
        coverage = localization.coverage_estimate(records, levels)
        vals = [coverage[n] for n in levels]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            localization.coverage_estimate([], [1.0])
