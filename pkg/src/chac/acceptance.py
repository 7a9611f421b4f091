"""Acceptance suite: the twelve desk-scale checks that gate a release.

Each criterion runs at a pinned tolerance on the default desk scale
(nx=64, nt=256, T=0.25, K=64) with fixed seeds, and reports pass/fail plus
a one-line detail.  `run_all` executes everything and is what the CLI
`verify` subcommand and the acceptance test module both call.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import density, localization, malliavin, model, noise, solver, spectral
from .config import default_config

BASE_SEED = 20260809


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str


def _desk():
    grid = spectral.GridSpec(64, 256, 0.25)
    basis = spectral.SpectralBasis(64, rho=1.0, qtilde=1.0)
    return grid, basis


def criterion_spectral_exactness() -> CriterionResult:
    """Noise off, drift off, cosine data: the stepper is exact per mode."""
    grid, basis = _desk()
    params = model.ModelParams(sigma=model.sigma_constant(0.0), f_enabled=False)
    w = noise.generate(grid, BASE_SEED, 0)
    path = solver.solve_path(np.cos(grid.x), w, params, basis)
    exact = np.exp(-2.0 * grid.times)[:, None] * np.cos(grid.x)[None, :]
    err = float(np.max(np.abs(path.u - exact)))
    return CriterionResult(1, "spectral exactness", err <= 1e-10,
                           f"sup error {err:.3e} (tol 1e-10)")


def criterion_mass_kernel() -> CriterionResult:
    """The kernel integrates to one in its second argument."""
    grid, basis = _desk()
    rng = np.random.default_rng(BASE_SEED + 1)
    worst = 0.0
    for _ in range(10):
        x = rng.uniform(0.0, np.pi)
        t = rng.uniform(0.01, 1.0)
        mass = float(np.sum(spectral.green_column(grid.x, x, t, basis)) * grid.dx)
        worst = max(worst, abs(mass - 1.0))
    return CriterionResult(2, "mass kernel", worst <= 1e-12,
                           f"max |mass - 1| {worst:.3e} (tol 1e-12)")


def criterion_ito_isometry() -> CriterionResult:
    """Constant-diffusion linear variance matches the kernel energy."""
    grid, basis = _desk()
    c0 = 0.5
    params = model.ModelParams(sigma=model.sigma_constant(c0), f_enabled=False)
    x_idx = grid.nearest_x_index(np.pi / 2)
    u0 = np.zeros(grid.nx)
    vals = np.empty(500)
    for r in range(500):
        w = noise.generate(grid, noise.stream_for_replicate(BASE_SEED + 2, r), r)
        vals[r] = solver.solve_path(u0, w, params, basis).u[-1, x_idx]
    emp = float(vals.var(ddof=1))
    target = c0 ** 2 * spectral.kernel_energy(grid.x[x_idx], grid.t_final, basis)
    stderr = emp * np.sqrt(2.0 / (len(vals) - 1))
    ok = abs(emp - target) <= 4.0 * stderr
    return CriterionResult(3, "Ito isometry", ok,
                           f"var {emp:.5f} vs {target:.5f} (|diff| {abs(emp-target):.2e} <= 4se {4*stderr:.2e})")


def criterion_picard() -> CriterionResult:
    """Fixed-point iteration reaches 1e-8 within 20 sweeps, diffs decreasing."""
    grid, basis = _desk()
    params = model.ModelParams()
    w = noise.generate(grid, BASE_SEED + 3, 0)
    try:
        _, diffs = solver.picard_solve(np.cos(grid.x), w, params, basis,
                                       tol=1e-8, max_iter=20)
    except solver.PicardConvergenceError as exc:
        return CriterionResult(4, "Picard convergence", False,
                               f"no convergence, diffs {exc.diffs}")
    decreasing = all(b < a for a, b in zip(diffs[1:], diffs[2:]))
    ok = diffs[-1] < 1e-8 and decreasing
    return CriterionResult(4, "Picard convergence", ok,
                           f"{len(diffs)} iterations, last diff {diffs[-1]:.2e}, "
                           f"strictly decreasing from #2: {decreasing}")


def criterion_tangent_linear_identity() -> CriterionResult:
    """Constant-sigma, drift-off tangent is the kernel times the diffusion."""
    grid, basis = _desk()
    c0 = 0.5
    params = model.ModelParams(sigma=model.sigma_constant(c0), f_enabled=False)
    w = noise.generate(grid, BASE_SEED + 4, 0)
    path = solver.solve_path(np.cos(grid.x), w, params, basis)
    tensor = malliavin.propagate(path, w, params, basis)
    err = 0.0
    for row in range(tensor.n_sources):
        age = tensor.t_obs - tensor.src_time[row] * grid.dt
        ref = spectral.green_column(grid.x, grid.x[tensor.src_space[row]], age, basis) * c0
        err = max(err, float(np.max(np.abs(tensor.values[row] - ref))))
    # zero rule: sources at or after the observation time vanish exactly
    late = malliavin.propagate(path, w, params, basis,
                               sources=[(3, grid.nt), (40, grid.nt)])
    zero_ok = bool(np.all(late.values == 0.0))
    ok = err <= 1e-8 and zero_ok
    return CriterionResult(5, "tangent linear identity", ok,
                           f"max |V - G sigma| {err:.3e} (tol 1e-8), zero rule exact: {zero_ok}")


def criterion_tangent_directional() -> CriterionResult:
    """The tangent is the derivative of the solve along one noise cell."""
    grid, basis = _desk()
    params = model.ModelParams()
    w = noise.generate(grid, BASE_SEED + 5, 0)
    u0 = np.cos(grid.x)
    path = solver.solve_path(u0, w, params, basis)
    ratios = []
    for (i, m) in [(16, 64), (32, 128), (48, 192)]:
        tensor = malliavin.propagate(path, w, params, basis, sources=[(i, m)])
        errs = []
        for eps in (1e-3, 1e-4):
            fd = malliavin.directional_difference(u0, w, params, basis, i, m, eps,
                                                  base_path=path)
            errs.append(float(np.max(np.abs(fd - tensor.values[0]))))
        ratios.append(errs[0] / errs[1])
    ok = all(5.0 <= r <= 20.0 for r in ratios)
    return CriterionResult(6, "tangent = directional derivative", ok,
                           "error ratios " + ", ".join(f"{r:.2f}" for r in ratios) + " (need [5, 20])")


def criterion_energy_exponent() -> CriterionResult:
    """Small-window kernel energy grows like eps^(3/4)."""
    basis = spectral.SpectralBasis(512, rho=1.0, qtilde=1.0)
    eps = 2.0 ** -np.arange(10, 3, -1, dtype=float)
    vals = np.array([spectral.kernel_energy(np.pi / 2, e, basis) for e in eps])
    slope = float(np.polyfit(np.log(eps), np.log(vals), 1)[0])
    ok = abs(slope - 0.75) <= 0.10
    return CriterionResult(7, "kernel energy exponent", ok,
                           f"log-log slope {slope:.4f} (need 0.75 +- 0.10)")


@lru_cache(maxsize=1)
def _window_scan_data():
    grid, basis = _desk()
    params = model.ModelParams()
    u0 = np.cos(grid.x)
    t_obs = grid.t_final
    eps_list = grid.t_final * 2.0 ** (-np.arange(7, 2, -1, dtype=float))
    first_slab = int(np.floor((t_obs - eps_list.max()) / grid.dt))
    pairs = [(i, m) for m in range(first_slab, grid.nt) for i in range(grid.nx)]
    tensors = []
    for r in range(100):
        w = noise.generate(grid, noise.stream_for_replicate(BASE_SEED + 6, r), r)
        path = solver.solve_path(u0, w, params, basis)
        tensors.append(malliavin.propagate(path, w, params, basis, sources=pairs))
    win, _ = malliavin.window_scan(tensors, t_obs, eps_list)
    rem, _ = malliavin.remainder_scan(tensors, t_obs, eps_list)
    return eps_list, win, rem


def criterion_window_exponent() -> CriterionResult:
    """Windowed tangent energy scales at least like eps^(2/3)."""
    eps_list, win, _ = _window_scan_data()
    slope = float(np.polyfit(np.log(eps_list), np.log(win), 1)[0])
    ratio = win / eps_list ** (2.0 / 3.0)
    spread = float(ratio.max() / ratio.min())
    ok = slope >= 2.0 / 3.0 - 0.15 and spread <= 5.0
    return CriterionResult(8, "window estimate exponent", ok,
                           f"slope {slope:.3f} (need >= {2/3 - 0.15:.3f}), "
                           f"ratio spread {spread:.2f} (need <= 5)")


def criterion_remainder_exponent() -> CriterionResult:
    """Remainder energy scales at least like eps^(17/12) and stays below the window."""
    eps_list, win, rem = _window_scan_data()
    below = bool(np.all(rem <= win))
    usable = rem > 1e-12 * win      # drop zeros-within-roundoff from the log fit
    slope = float(np.polyfit(np.log(eps_list[usable]), np.log(rem[usable]), 1)[0])
    ok = slope >= 17.0 / 12.0 - 0.2 and below
    return CriterionResult(9, "remainder exponent", ok,
                           f"slope {slope:.3f} over {int(usable.sum())} points "
                           f"(need >= {17/12 - 0.2:.3f}), remainder <= window: {below}")


def criterion_positivity() -> CriterionResult:
    """Every replicate carries positive tangent H-norm at the observation point."""
    grid, basis = _desk()
    params = model.ModelParams()
    u0 = np.cos(grid.x)
    x_idx = grid.nearest_x_index(np.pi / 2)

    def tensors():
        for r in range(200):
            w = noise.generate(grid, noise.stream_for_replicate(BASE_SEED + 7, r), r)
            path = solver.solve_path(u0, w, params, basis)
            yield malliavin.propagate_all_sources(path, w, params, basis)

    frac = malliavin.positivity_probability(tensors(), x_idx, grid.t_final, 0.0)
    return CriterionResult(10, "H-norm positivity", frac == 1.0,
                           f"fraction with positive H-norm {frac:.3f} over 200 replicates (need 1.0)")


def criterion_density_oracle() -> CriterionResult:
    """Linear law passes the KS test; nonlinear KDE is a clean density."""
    cfg_lin = default_config(sigma_form="constant", sigma_c0=0.5, sigma_beta=0.0,
                             sigma_q=0.0, f_enabled=False, replicates=500,
                             master_seed=BASE_SEED + 8)
    samples = density.sample_ensemble(cfg_lin)
    ks, ks_pass = density.gaussian_oracle_check(samples, cfg_lin.x_star,
                                                cfg_lin.t_final, cfg_lin)
    cfg_nl = default_config(replicates=500, master_seed=BASE_SEED + 9)
    report = density.kde(density.sample_ensemble(cfg_nl))
    integral = report.diagnostics["kde_integral"]
    multiplicity = report.diagnostics["max_duplicate_multiplicity"]
    ok = ks_pass and abs(integral - 1.0) <= 1e-3 and multiplicity == 1
    return CriterionResult(11, "Gaussian density oracle", ok,
                           f"KS {ks:.4f} (crit {1.63/np.sqrt(500):.4f}), "
                           f"kde integral {integral:.5f}, max multiplicity {multiplicity}")


def criterion_localization() -> CriterionResult:
    """Small-noise paths are cutoff-independent; coverage grows with the level."""
    grid, basis = _desk()
    u0 = np.cos(grid.x)
    params = model.ModelParams(sigma=model.sigma_constant(0.05))
    identical = 0
    nonvacuous = 0
    for r in range(100):
        w = noise.generate(grid, noise.stream_for_replicate(BASE_SEED + 10, r), r)
        res = localization.consistency_check(u0, w, params, basis, 5.0, 10.0)
        if not res.skipped:
            nonvacuous += 1
            identical += res.identical
    levels = [1.0, 2.0, 3.0, 5.0, 10.0]
    records = []
    params_def = model.ModelParams()
    for r in range(200):
        w = noise.generate(grid, noise.stream_for_replicate(BASE_SEED + 11, r), r)
        records.append(localization.classify(solver.solve_path(u0, w, params_def, basis), levels))
    coverage = localization.coverage_estimate(records, levels)
    fractions = [coverage[n] for n in levels]
    monotone = all(b >= a for a, b in zip(fractions, fractions[1:]))
    ok = nonvacuous == 100 and identical == 100 and monotone
    return CriterionResult(12, "localization consistency", ok,
                           f"identical {identical}/{nonvacuous} non-vacuous (need 100/100), "
                           f"coverage {fractions} monotone: {monotone}")


ALL_CRITERIA = [
    criterion_spectral_exactness,
    criterion_mass_kernel,
    criterion_ito_isometry,
    criterion_picard,
    criterion_tangent_linear_identity,
    criterion_tangent_directional,
    criterion_energy_exponent,
    criterion_window_exponent,
    criterion_remainder_exponent,
    criterion_positivity,
    criterion_density_oracle,
    criterion_localization,
]


def run_all(printer=None) -> list[CriterionResult]:
    """Run every criterion; optionally print one pass/fail line each."""
    results = []
    for fn in ALL_CRITERIA:
        res = fn()
        results.append(res)
        if printer is not None:
            printer(f"[{'PASS' if res.passed else 'FAIL'}] "
                    f"{res.number:02d} {res.name}: {res.detail}")
    return results
