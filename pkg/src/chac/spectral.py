"""Neumann-cosine spectral basis on (0, pi) and the linearized-operator kernel.

The linear operator is -rho*Lap^2 + qtilde*Lap with homogeneous Neumann
conditions.  Its eigenfunctions are the cosine modes a_0 = 1/sqrt(pi),
a_k = sqrt(2/pi)*cos(k x), with Laplacian eigenvalues k^2 and decay rates
mu_k = rho*k^4 + qtilde*k^2.  Everything downstream (time stepping, kernel
evaluation, energy sums) is expressed through this basis, and all time
integrals of the linear part are done exactly per mode.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

PI = np.pi


@dataclass(frozen=True)
class GridSpec:
    """Uniform space-time grid with midpoint collocation nodes.

    Nodes x_j = (j + 1/2)*pi/nx lie strictly inside (0, pi), which keeps the
    discrete cosine analysis exactly orthogonal and avoids the boundary.
    """

    nx: int
    nt: int
    t_final: float

    def __post_init__(self):
        if self.nx < 2 or self.nt < 2:
            raise ValueError("grid needs nx >= 2 and nt >= 2")
        if self.t_final <= 0:
            raise ValueError("grid needs t_final > 0")

    @property
    def dx(self) -> float:
        return PI / self.nx

    @property
    def dt(self) -> float:
        return self.t_final / self.nt

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.dx

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.nt + 1) * self.dt

    def nearest_x_index(self, x: float) -> int:
        if not 0.0 <= x <= PI:
            raise ValueError("x outside [0, pi]")
        return int(np.argmin(np.abs(self.x - x)))

    def nearest_t_index(self, t: float) -> int:
        if not 0.0 <= t <= self.t_final + 1e-12:
            raise ValueError("t outside [0, t_final]")
        return int(round(t / self.dt))


@dataclass(frozen=True)
class SpectralBasis:
    """Truncated Neumann eigenbasis with model-dependent decay rates."""

    num_modes: int
    rho: float = 1.0
    qtilde: float = 1.0

    def __post_init__(self):
        if self.num_modes < 1:
            raise ValueError("need at least one mode")
        if self.rho <= 0:
            raise ValueError("rho > 0 required")
        if self.qtilde < 0:
            raise ValueError("qtilde >= 0 required")

    @property
    def eigenvalues(self) -> np.ndarray:
        """Laplacian eigenvalues k^2 for k = 0..num_modes-1."""
        k = np.arange(self.num_modes, dtype=float)
        return k * k

    @property
    def decay_rates(self) -> np.ndarray:
        """mu_k = rho*k^4 + qtilde*k^2; mu_0 = 0 and mu is increasing."""
        lam = self.eigenvalues
        return self.rho * lam * lam + self.qtilde * lam


def eigenfunction_eval(k: int, x) -> np.ndarray | float:
    """Orthonormal Neumann mode a_k at x in [0, pi]."""
    if k < 0:
        raise ValueError("mode index must be non-negative")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > PI):
        raise ValueError("x outside [0, pi]")
    if k == 0:
        out = np.full_like(x, 1.0 / np.sqrt(PI))
    else:
        out = np.sqrt(2.0 / PI) * np.cos(k * x)
    return out if out.ndim else float(out)


@lru_cache(maxsize=32)
def _basis_matrix(nx: int, num_modes: int) -> np.ndarray:
    """A[j, k] = a_k(x_j) on the midpoint grid; columns orthonormal under dx."""
    grid = GridSpec(nx, 2, 1.0)
    k = np.arange(num_modes)
    A = np.sqrt(2.0 / PI) * np.cos(np.outer(grid.x, k))
    A[:, 0] = 1.0 / np.sqrt(PI)
    return A


def basis_matrix(basis: SpectralBasis, grid: GridSpec) -> np.ndarray:
    if basis.num_modes > grid.nx:
        raise ValueError("truncation K must not exceed nx")
    return _basis_matrix(grid.nx, basis.num_modes)


def to_modes(field, basis: SpectralBasis, grid: GridSpec) -> np.ndarray:
    """Midpoint-quadrature analysis onto the cosine modes.

    Accepts a single field of length nx or a batch (..., nx).
    """
    field = np.asarray(field, dtype=float)
    if field.shape[-1] != grid.nx:
        raise ValueError("field length does not match grid")
    return (field @ basis_matrix(basis, grid)) * grid.dx


def from_modes(coeffs, basis: SpectralBasis, grid: GridSpec) -> np.ndarray:
    """Synthesis inverse to :func:`to_modes` (exact when K = nx)."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[-1] != basis.num_modes:
        raise ValueError("coefficient length does not match basis")
    return coeffs @ basis_matrix(basis, grid).T


def semigroup_factors(basis: SpectralBasis, tau: float) -> np.ndarray:
    """Per-mode factors exp(-mu_k * tau) of the linear semigroup."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    return np.exp(-basis.decay_rates * tau)


def semigroup_apply(coeffs, tau: float, basis: SpectralBasis) -> np.ndarray:
    """Evolve mode coefficients by the linear semigroup over duration tau."""
    coeffs = np.asarray(coeffs, dtype=float)
    return coeffs * semigroup_factors(basis, tau)


def green_eval(x: float, y: float, t: float, basis: SpectralBasis) -> float:
    """Truncated kernel sum_k exp(-mu_k t) a_k(x) a_k(y) for t > 0.

    The sum is a delta at t = 0, so t must be strictly positive.  Symmetric
    in (x, y) by construction and -> 1/pi as t -> infinity.
    """
    if t <= 0:
        raise ValueError("the kernel requires t > 0")
    if not (0.0 <= x <= PI and 0.0 <= y <= PI):
        raise ValueError("points outside [0, pi]")
    k = np.arange(basis.num_modes)
    ax = np.sqrt(2.0 / PI) * np.cos(k * x)
    ay = np.sqrt(2.0 / PI) * np.cos(k * y)
    ax[0] = ay[0] = 1.0 / np.sqrt(PI)
    # elementwise product first so the value is exactly symmetric in (x, y)
    return float(np.sum(np.exp(-basis.decay_rates * t) * (ax * ay)))


def green_column(x_grid: np.ndarray, y: float, t: float, basis: SpectralBasis) -> np.ndarray:
    """Kernel values G(x_j, y, t) on a set of points, as one vector."""
    if t <= 0:
        raise ValueError("the kernel requires t > 0")
    k = np.arange(basis.num_modes)
    ay = np.sqrt(2.0 / PI) * np.cos(k * y)
    ay[0] = 1.0 / np.sqrt(PI)
    ax = np.sqrt(2.0 / PI) * np.cos(np.outer(np.asarray(x_grid, float), k))
    ax[:, 0] = 1.0 / np.sqrt(PI)
    return ax @ (np.exp(-basis.decay_rates * t) * ay)


def forcing_factor(k: int, dt: float, basis: SpectralBasis) -> float:
    """Exact integral of the drift kernel weight over one step.

    Equals int_0^dt -(rho*lam_k + qtilde) * exp(-mu_k tau) dtau, i.e.
    -(rho*lam_k + qtilde)*(1 - exp(-mu_k dt))/mu_k for mu_k > 0 and
    -qtilde*dt for the constant mode.  Integrating exactly removes the
    tau^(-1/2)-type singularity of the differentiated kernel.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if not 0 <= k < basis.num_modes:
        raise ValueError("mode index out of range")
    return float(forcing_factors(basis, dt)[k])


def forcing_factors(basis: SpectralBasis, dt: float) -> np.ndarray:
    """Vector of :func:`forcing_factor` over all modes."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    lam = basis.eigenvalues
    mu = basis.decay_rates
    out = np.empty(basis.num_modes)
    out[0] = -basis.qtilde * dt
    pos = mu > 0
    out[pos] = -(basis.rho * lam[pos] + basis.qtilde) * (-np.expm1(-mu[pos] * dt)) / mu[pos]
    return out


def kernel_energy(x: float, eps: float, basis: SpectralBasis) -> float:
    """Time-space energy int_0^eps int_D G(x, y, tau)^2 dy dtau under truncation.

    By orthonormality this is eps/pi plus
    sum_{k>=1} a_k(x)^2 (1 - exp(-2 mu_k eps)) / (2 mu_k); the value is
    truncation-dependent as eps -> 0.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    mu = basis.decay_rates[1:]
    k = np.arange(1, basis.num_modes)
    ak2 = (2.0 / PI) * np.cos(k * x) ** 2
    return float(eps / PI + np.sum(ak2 * (-np.expm1(-2.0 * mu * eps)) / (2.0 * mu)))
