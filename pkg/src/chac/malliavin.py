"""Tangent propagation: the derivative of the solution with respect to the
noise at every grid cell, evolved as a linear SPDE along the stored path.

A source at cell (y_i, s_m) is seeded as the discrete delta field with mass
sigma(u(y_i, s_m)) and evolved to the observation time by the linearization
of the solver step: the drift couples through f_n'(u), the noise through
sigma'(u), and the linear part through the exact semigroup.  The seeding
step itself applies only the semigroup, which makes each tangent row the
exact Jacobian of the discrete scheme with respect to its noise increment.

For sources at or after the observation time the tangent vanishes
identically; such rows are stored as exact zeros.
"""

from dataclasses import dataclass

import numpy as np

from . import model, spectral
from .model import ModelParams
from .noise import NoiseRealization, perturb_cell
from .solver import BlowUpError, FieldPath, StepOperator, solve_path
from .spectral import GridSpec, SpectralBasis


@dataclass
class MalliavinTensor:
    """Tangent values V[(i,m)][j] at one observation time, one realization.

    Rows are indexed by source; `src_space` and `src_time` give the cell
    (i, m) of each row, and `seed_sigma` the diffusion value the source was
    seeded with (0 for zero-rule rows).
    """

    values: np.ndarray
    src_space: np.ndarray
    src_time: np.ndarray
    seed_sigma: np.ndarray
    t_obs: float
    grid: GridSpec
    basis: SpectralBasis

    @property
    def n_sources(self) -> int:
        return self.values.shape[0]

    def source_ages(self) -> np.ndarray:
        return self.t_obs - self.src_time * self.grid.dt


def seed_source(i: int, m: int, path: FieldPath, t_obs: float | None = None) -> np.ndarray:
    """Discrete delta field for a source: sigma(u(y_i, s_m))/dx at node i.

    Its semigroup evolution over t - s reproduces the kernel column
    G(., y_i, t-s) * sigma(u(y_i, s_m)) under truncation.
    """
    grid = path.grid
    if not 0 <= i < grid.nx:
        raise ValueError("space index out of range")
    t_obs = grid.t_final if t_obs is None else t_obs
    if not 0 <= m <= grid.nt or m * grid.dt >= t_obs:
        raise ValueError("source must lie strictly before the observation time")
    field = np.zeros(grid.nx)
    field[i] = model.sigma_eval(path.params.sigma, path.u[m, i]) / grid.dx
    return field


def all_source_pairs(grid: GridSpec, obs_step: int) -> np.ndarray:
    """Every cell (i, m) with s_m < t_obs, ordered by (m, i)."""
    m, i = np.meshgrid(np.arange(obs_step), np.arange(grid.nx), indexing="ij")
    return np.column_stack([i.ravel(), m.ravel()])


def _resolve_obs(grid: GridSpec, t_obs: float | None) -> tuple[int, float]:
    if t_obs is None:
        return grid.nt, grid.t_final
    step = grid.nearest_t_index(t_obs)
    if step < 1:
        raise ValueError("observation time must be at least one step into the run")
    return step, step * grid.dt


def propagate(path: FieldPath, noise: NoiseRealization, params: ModelParams,
              basis: SpectralBasis, t_obs: float | None = None,
              sources=None) -> MalliavinTensor:
    """Batched sweep: evolve every requested source to the observation time.

    `sources` is an array of (i, m) cells; by default all cells with
    s_m < t_obs are propagated.  The path and noise must belong to the same
    realization.  All sources advance together, one linearized step per
    time slab, sharing the stored path and noise.
    """
    grid = path.grid
    obs_step, t_obs = _resolve_obs(grid, t_obs)
    if sources is None:
        sources = all_source_pairs(grid, obs_step)
    else:
        sources = np.atleast_2d(np.asarray(sources, dtype=int))
    src_i, src_m = sources[:, 0], sources[:, 1]
    if np.any((src_i < 0) | (src_i >= grid.nx)) or np.any((src_m < 0) | (src_m > grid.nt)):
        raise ValueError("source cell out of range")

    live = src_m < obs_step
    order = np.lexsort((src_i, src_m))
    op = StepOperator(params, basis, grid)
    sigma_prime_active = params.sigma.form != "constant"

    # mode-space rows, filled in (m, i) order as sources come alive
    n_live = int(np.count_nonzero(live))
    rows_hat = np.empty((n_live, basis.num_modes))
    live_sorted = order[live[order]]
    starts = np.searchsorted(src_m[live_sorted], np.arange(obs_step + 1))
    seed_sig = np.zeros(len(sources))

    count = 0
    for m in range(obs_step):
        if count:
            active = rows_hat[:count]
            w = op.from_modes(active)
            update = active.copy()
            if sigma_prime_active:
                g = model.sigma_prime(params.sigma, path.u[m]) * noise.dw[m] / grid.dx
                update += op.to_modes(w * g)
            update *= op.semigroup
            if params.f_enabled:
                fp = model.f_n_prime(params.cutoff.n, path.u[m])
                update += op.drift_weights * op.to_modes(w * fp)
            rows_hat[:count] = update
        lo, hi = starts[m], starts[m + 1]
        if hi > lo:
            idx = live_sorted[lo:hi]
            nodes = src_i[idx]
            sig = model.sigma_eval(params.sigma, path.u[m, nodes])
            seed_sig[idx] = sig
            rows_hat[count:count + len(idx)] = op.semigroup * (sig[:, None] * op.A[nodes, :])
            count += len(idx)

    values = np.zeros((len(sources), grid.nx))
    values[live_sorted] = op.from_modes(rows_hat)
    if not np.all(np.isfinite(values)):
        raise BlowUpError(obs_step, float(np.nanmax(np.abs(values))))
    return MalliavinTensor(values=values, src_space=src_i.copy(), src_time=src_m.copy(),
                           seed_sigma=seed_sig, t_obs=t_obs, grid=grid, basis=basis)


def propagate_all_sources(path: FieldPath, noise: NoiseRealization, params: ModelParams,
                          basis: SpectralBasis, t_obs: float | None = None) -> MalliavinTensor:
    """Full tensor over every source cell via accumulated step propagators.

    Algebraically identical to :func:`propagate` with the default source
    set (the per-step sweep is a linear map, so all rows of one slab share
    the same accumulated propagator); this route costs O(nt * nx^3) instead
    of O(nt^2 * nx^2) row updates and is used for full H-norm ensembles.
    """
    grid = path.grid
    obs_step, t_obs = _resolve_obs(grid, t_obs)
    op = StepOperator(params, basis, grid)
    A = op.A
    semigroup_mat = (A * op.semigroup) @ op.analysis.T
    drift_mat = (A * op.drift_weights) @ op.analysis.T
    sigma_prime_active = params.sigma.form != "constant"

    slabs = [None] * obs_step
    seed_sig = np.empty((obs_step, grid.nx))
    accum = np.eye(grid.nx)
    for m in range(obs_step - 1, -1, -1):
        carrier = accum @ semigroup_mat
        sig = model.sigma_eval(params.sigma, path.u[m])
        seed_sig[m] = sig
        slabs[m] = carrier.T * (sig / grid.dx)[:, None]
        if m > 0:
            step_mat = semigroup_mat
            if sigma_prime_active:
                g = model.sigma_prime(params.sigma, path.u[m]) * noise.dw[m] / grid.dx
                step_mat = step_mat + semigroup_mat * g[None, :]
            if params.f_enabled:
                fp = model.f_n_prime(params.cutoff.n, path.u[m])
                step_mat = step_mat + drift_mat * fp[None, :]
            accum = accum @ step_mat
    values = np.concatenate(slabs, axis=0)
    if not np.all(np.isfinite(values)):
        raise BlowUpError(obs_step, float(np.nanmax(np.abs(values))))
    pairs = all_source_pairs(grid, obs_step)
    return MalliavinTensor(values=values, src_space=pairs[:, 0], src_time=pairs[:, 1],
                           seed_sigma=seed_sig.ravel(), t_obs=t_obs, grid=grid, basis=basis)


def hnorm_sq(tensor: MalliavinTensor, x_index: int) -> float:
    """Quadrature of the squared H-norm of the tangent at one grid point."""
    grid = tensor.grid
    col = tensor.values[:, x_index]
    return float(np.sum(col * col) * grid.dx * grid.dt)


def _window_mask(tensor: MalliavinTensor, eps: float) -> np.ndarray:
    # open at the left endpoint: s_m in (t_obs - eps, t_obs]; the slack only
    # guards against float noise, sources at exactly t_obs - eps stay out
    grid = tensor.grid
    slack = 1e-9 * grid.dt
    return tensor.src_time * grid.dt > tensor.t_obs - eps + slack


def _check_eps(tensor_t_obs: float, eps: float) -> None:
    if not 0.0 < eps < min(1.0, tensor_t_obs) * (1 + 1e-12):
        raise ValueError("eps must lie in (0, min(1, t_obs))")


def _sup_window_sum(tensor: MalliavinTensor, eps: float) -> float:
    _check_eps(tensor.t_obs, eps)
    mask = _window_mask(tensor, eps)
    sup = np.max(np.abs(tensor.values[mask]), axis=1) if np.any(mask) else np.zeros(0)
    return float(np.sum(sup * sup) * tensor.grid.dx * tensor.grid.dt)


def _remainder_rows(tensor: MalliavinTensor, mask: np.ndarray) -> np.ndarray:
    """Tangent rows minus the kernel-times-diffusion seed contribution."""
    grid, basis = tensor.grid, tensor.basis
    A = spectral.basis_matrix(basis, grid)
    rows = tensor.values[mask].copy()
    src_i = tensor.src_space[mask]
    src_m = tensor.src_time[mask]
    sig = tensor.seed_sigma[mask]
    for m in np.unique(src_m):
        sel = src_m == m
        age = tensor.t_obs - m * grid.dt
        kernel = (A * np.exp(-basis.decay_rates * age)) @ A.T
        rows[sel] -= kernel[src_i[sel], :] * sig[sel, None]
    return rows


def _sup_remainder_sum(tensor: MalliavinTensor, eps: float) -> float:
    _check_eps(tensor.t_obs, eps)
    mask = _window_mask(tensor, eps)
    if not np.any(mask):
        return 0.0
    rows = _remainder_rows(tensor, mask)
    sup = np.max(np.abs(rows), axis=1)
    return float(np.sum(sup * sup) * tensor.grid.dx * tensor.grid.dt)


def _scan(tensors, t_obs: float, eps_list, summand) -> tuple[np.ndarray, np.ndarray]:
    eps_arr = np.asarray(eps_list, dtype=float)
    per_rep = []
    for tensor in tensors:
        if abs(tensor.t_obs - t_obs) > 1e-9 * max(1.0, t_obs):
            raise ValueError("tensor observation time does not match the scan")
        per_rep.append([summand(tensor, e) for e in eps_arr])
    if not per_rep:
        raise ValueError("ensemble is empty")
    table = np.asarray(per_rep)
    means = table.mean(axis=0)
    n = table.shape[0]
    stderrs = table.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(means)
    return means, stderrs


def window_scan(tensors, t_obs: float, eps_list):
    """Mean and standard error of the windowed tangent energy per eps.

    The window energy of one realization is the sum over sources with
    s_m in (t_obs - eps, t_obs] of ||V[(i,m)]||_inf^2 * dx * dt.
    """
    return _scan(tensors, t_obs, eps_list, _sup_window_sum)


def remainder_scan(tensors, t_obs: float, eps_list):
    """Same scan with the kernel seed term subtracted from every row."""
    return _scan(tensors, t_obs, eps_list, _sup_remainder_sum)


def window_estimate(tensors, t_obs: float, eps: float) -> float:
    """Ensemble mean of the windowed tangent energy at one eps."""
    means, _ = window_scan(tensors, t_obs, [eps])
    return float(means[0])


def remainder_estimate(tensors, t_obs: float, eps: float) -> float:
    """Ensemble mean of the windowed remainder energy at one eps."""
    means, _ = remainder_scan(tensors, t_obs, [eps])
    return float(means[0])


def positivity_probability(tensors, x_index: int, t_obs: float, threshold: float = 0.0) -> float:
    """Fraction of realizations whose H-norm at x exceeds the threshold."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    count = 0
    total = 0
    for tensor in tensors:
        if abs(tensor.t_obs - t_obs) > 1e-9 * max(1.0, t_obs):
            raise ValueError("tensor observation time does not match")
        count += hnorm_sq(tensor, x_index) > threshold
        total += 1
    if total == 0:
        raise ValueError("ensemble is empty")
    return count / total


def directional_difference(u0_field, noise: NoiseRealization, params: ModelParams,
                           basis: SpectralBasis, i: int, m: int, eps: float,
                           base_path: FieldPath | None = None) -> np.ndarray:
    """Finite-difference tangent: perturb one noise increment by eps and
    return (u_perturbed - u)/eps at the final time.

    The perturbation adds eps times a unit-integral bump on the cell
    (y_i, [t_m, t_{m+1})), the direction whose exact derivative is the
    propagated tangent row for that cell.
    """
    if base_path is None:
        base_path = solve_path(u0_field, noise, params, basis)
    bumped = solve_path(u0_field, perturb_cell(noise, m, i, eps), params, basis)
    return (bumped.u[-1] - base_path.u[-1]) / eps
