"""Exponential-Euler time stepping of the mild solution, plus the whole-path
fixed-point iteration that serves as an alternative solve route.

One step in mode space reads

    u_{m+1} = E*(u_m + modes(sigma(u_m) dW_m / dx)) + F*modes(f_n(u_m))

with E the exact semigroup factors over dt and F the exact per-mode drift
weights (see spectral.forcing_factors).  The stochastic term uses the
left endpoint (Ito/Walsh convention); the drift is frozen over the step.
"""

from dataclasses import dataclass

import numpy as np

from . import model, spectral
from .model import ModelParams
from .noise import NoiseRealization
from .spectral import GridSpec, SpectralBasis


class BlowUpError(RuntimeError):
    """Non-finite field encountered while stepping."""

    def __init__(self, step_index: int, max_abs: float):
        self.step_index = step_index
        self.max_abs = max_abs
        super().__init__(
            f"solution lost finiteness at step {step_index} (max |u| before failure: {max_abs:g})"
        )


class PicardConvergenceError(RuntimeError):
    """Fixed-point iteration failed to reach tolerance."""

    def __init__(self, diffs):
        self.diffs = list(diffs)
        super().__init__(
            f"no convergence after {len(self.diffs)} iterations; last diff {self.diffs[-1]:g}"
        )


@dataclass
class FieldPath:
    """Solution values u[m][j] on the full space-time grid, one realization."""

    u: np.ndarray
    grid: GridSpec
    params: ModelParams
    noise: NoiseRealization

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.u)))

    def sup_norms_in_time(self) -> np.ndarray:
        return np.max(np.abs(self.u), axis=1)


class StepOperator:
    """Cached per-grid spectral machinery shared by one solve."""

    def __init__(self, params: ModelParams, basis: SpectralBasis, grid: GridSpec):
        self.params = params
        self.basis = basis
        self.grid = grid
        self.A = spectral.basis_matrix(basis, grid)
        self.analysis = self.A * grid.dx          # field @ analysis -> modes
        self.semigroup = spectral.semigroup_factors(basis, grid.dt)
        self.drift_weights = spectral.forcing_factors(basis, grid.dt)

    def to_modes(self, fields):
        return fields @ self.analysis

    def from_modes(self, coeffs):
        return coeffs @ self.A.T

    def apply(self, u_m: np.ndarray, dw_m: np.ndarray) -> np.ndarray:
        return self.apply_frozen(u_m, u_m, dw_m)

    def apply_frozen(self, u_m: np.ndarray, frozen: np.ndarray, dw_m: np.ndarray) -> np.ndarray:
        """Step with drift and diffusion evaluated on a frozen field.

        Overflow is left to the finiteness checks of the callers, which turn
        it into a blow-up diagnostic instead of a warning.
        """
        p = self.params
        with np.errstate(over="ignore", invalid="ignore"):
            noise_field = model.sigma_eval(p.sigma, frozen) * dw_m / self.grid.dx
            coeffs = self.semigroup * (self.to_modes(u_m) + self.to_modes(noise_field))
            if p.f_enabled:
                coeffs += self.drift_weights * self.to_modes(model.f_n_eval(p.cutoff.n, frozen))
            return self.from_modes(coeffs)


def step(u_m, m: int, noise: NoiseRealization, params: ModelParams,
         basis: SpectralBasis) -> np.ndarray:
    """Advance one field from t_m to t_{m+1}."""
    u_m = np.asarray(u_m, dtype=float)
    if not np.all(np.isfinite(u_m)):
        raise BlowUpError(m, float(np.nanmax(np.abs(u_m))))
    op = StepOperator(params, basis, noise.grid)
    out = op.apply(u_m, noise.dw[m])
    if not np.all(np.isfinite(out)):
        raise BlowUpError(m, float(np.max(np.abs(u_m))))
    return out


def solve_path(u0_field, noise: NoiseRealization, params: ModelParams,
               basis: SpectralBasis) -> FieldPath:
    """Iterate the step over the whole horizon; deterministic given the noise."""
    grid = noise.grid
    u0_field = np.asarray(u0_field, dtype=float)
    if u0_field.shape != (grid.nx,):
        raise ValueError("initial field does not match the grid")
    op = StepOperator(params, basis, grid)
    u = np.empty((grid.nt + 1, grid.nx))
    u[0] = u0_field
    for m in range(grid.nt):
        u[m + 1] = op.apply(u[m], noise.dw[m])
        if not np.all(np.isfinite(u[m + 1])):
            raise BlowUpError(m, float(np.max(np.abs(u[m]))))
    return FieldPath(u=u, grid=grid, params=params, noise=noise)


def semigroup_path(u0_field, grid: GridSpec, basis: SpectralBasis) -> np.ndarray:
    """Pure linear evolution of u0 on the time grid (the zeroth iterate)."""
    A = spectral.basis_matrix(basis, grid)
    coeffs0 = (np.asarray(u0_field, float) @ A) * grid.dx
    decay = np.exp(-np.outer(grid.times, basis.decay_rates))
    return (decay * coeffs0) @ A.T


def picard_solve(u0_field, noise: NoiseRealization, params: ModelParams,
                 basis: SpectralBasis, tol: float = 1e-8, max_iter: int = 20):
    """Whole-path fixed-point iteration with frozen coefficients.

    Iterate k+1 runs the time stepper with drift and diffusion evaluated on
    iterate k's path; the same noise realization is reused throughout.  The
    zeroth iterate is the semigroup evolution of u0.  Returns the converged
    path and the sequence of sup-norm differences between iterates.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    grid = noise.grid
    u0_field = np.asarray(u0_field, dtype=float)
    op = StepOperator(params, basis, grid)
    prev = semigroup_path(u0_field, grid, basis)
    diffs = []
    for _ in range(max_iter):
        cur = np.empty_like(prev)
        cur[0] = u0_field
        for m in range(grid.nt):
            cur[m + 1] = op.apply_frozen(cur[m], prev[m], noise.dw[m])
        if not np.all(np.isfinite(cur)):
            raise BlowUpError(int(np.argmax(~np.all(np.isfinite(cur), axis=1))),
                              float(np.nanmax(np.abs(prev))))
        diffs.append(float(np.max(np.abs(cur - prev))))
        prev = cur
        if diffs[-1] < tol:
            return FieldPath(u=cur, grid=grid, params=params, noise=noise), diffs
    raise PicardConvergenceError(diffs)


def sup_moment(paths, p: float = 2.0):
    """Max over time of the ensemble mean of ||u(.,t)||_inf^p.

    Returns (value, standard_error) where the standard error is taken at
    the maximizing time.
    """
    if p < 2:
        raise ValueError("moment power must be >= 2")
    norms = np.array([path.sup_norms_in_time() ** p for path in paths])
    if norms.size == 0:
        raise ValueError("ensemble is empty")
    means = norms.mean(axis=0)
    m_star = int(np.argmax(means))
    n = norms.shape[0]
    stderr = float(norms[:, m_star].std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return float(means[m_star]), stderr


def initial_field(kind: str, grid: GridSpec, samples=None) -> np.ndarray:
    """Initial data on the collocation nodes: 'cosine', 'zero', or 'custom'."""
    if kind == "cosine":
        return np.cos(grid.x)
    if kind == "zero":
        return np.zeros(grid.nx)
    if kind == "custom":
        arr = np.asarray(samples, dtype=float)
        if arr.shape != (grid.nx,):
            raise ValueError("custom initial data must provide one value per node")
        return arr
    raise ValueError(f"unknown initial condition kind '{kind}'")


def path_to_csv(path: FieldPath, stream, comment: str | None = None) -> None:
    """Write `t,x,u` rows with 17 significant digits."""
    if comment:
        stream.write(f"# {comment}\n")
    stream.write("t,x,u\n")
    times = path.grid.times
    xs = path.grid.x
    for m, t in enumerate(times):
        row = path.u[m]
        for j, x in enumerate(xs):
            stream.write(f"{t:.17g},{x:.17g},{row[j]:.17g}\n")
