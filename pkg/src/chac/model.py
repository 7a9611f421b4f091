"""Model ingredients: double-well drift, C1 cutoff, and diffusion families.

The drift f(u) = u^3 - u is tamed by a C1 bump H_n (cubic smoothstep on
[n, n+1]), giving the globally Lipschitz f_n(u) = H_n(|u|) f(u).  Two
diffusion families are shipped: a constant one (enables exact Gaussian
laws) and a sublinear power one with growth exponent q < 1/3, Lipschitz
derivative, and a strictly positive floor.
"""

from dataclasses import dataclass, field

import numpy as np


class ConfigurationError(ValueError):
    """Raised when a model specification violates a stated bound."""


@dataclass(frozen=True)
class CutoffSpec:
    """Cutoff level n > 0: plateau on [0, n), support ending at n+1."""

    n: float

    def __post_init__(self):
        if self.n <= 0:
            raise ConfigurationError("cutoff level must satisfy n > 0")


@dataclass(frozen=True)
class SigmaSpec:
    """Diffusion coefficient: 'constant' (= c0) or 'power' floor-plus-growth.

    The power form is sigma(x) = c0 + beta*(1 + x^2)^(q/2), which satisfies
    sigma >= c0 > 0, sigma <= (c0+beta)(1+|x|^q), and |sigma'| <= beta*q.
    A constant form with c0 = 0 is tolerated as the noise-off oracle
    fixture; it is degenerate and rejected by experiment configurations.
    """

    form: str
    c0: float
    beta: float = 0.0
    q: float = 0.0

    def __post_init__(self):
        if self.form not in ("constant", "power"):
            raise ConfigurationError("sigma form must be 'constant' or 'power'")
        if self.c0 < 0 or (self.form == "power" and self.c0 <= 0):
            raise ConfigurationError("sigma floor must satisfy c0 > 0")
        if self.form == "power":
            if self.beta < 0:
                raise ConfigurationError("sigma amplitude must satisfy beta >= 0")
            if not 0.0 < self.q < 1.0 / 3.0:
                raise ConfigurationError("growth exponent must satisfy q ∈ (0,1/3)")


def sigma_constant(c0: float) -> SigmaSpec:
    return SigmaSpec("constant", c0)


def sigma_power(c0: float, beta: float, q: float) -> SigmaSpec:
    return SigmaSpec("power", c0, beta, q)


@dataclass(frozen=True)
class ModelParams:
    """Full model parameter set for one experiment."""

    rho: float = 1.0
    qtilde: float = 1.0
    cutoff: CutoffSpec = field(default_factory=lambda: CutoffSpec(5.0))
    sigma: SigmaSpec = field(default_factory=lambda: sigma_power(0.5, 0.5, 0.3))
    f_enabled: bool = True

    def __post_init__(self):
        if self.rho <= 0:
            raise ConfigurationError("rho > 0 required")
        if self.qtilde < 0:
            raise ConfigurationError("qtilde >= 0 required")


def f_eval(x):
    """Double-well drift x^3 - x."""
    x = np.asarray(x, dtype=float)
    out = x * x * x - x
    return out if out.ndim else float(out)


def cutoff_eval(n: float, r):
    """C1 bump: 1 below n, cubic smoothstep down to 0 on [n, n+1]."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("cutoff argument must be non-negative")
    rho = np.clip(r - n, 0.0, 1.0)
    out = 1.0 - 3.0 * rho * rho + 2.0 * rho ** 3
    return out if out.ndim else float(out)


def cutoff_prime(n: float, r):
    """Derivative of the bump; bounded by 3/2 in magnitude."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("cutoff argument must be non-negative")
    rho = r - n
    inside = (rho > 0.0) & (rho < 1.0)
    out = np.where(inside, -6.0 * rho * (1.0 - rho), 0.0)
    return out if out.ndim else float(out)


def f_n_eval(n: float, x):
    """Tamed drift H_n(|x|) * (x^3 - x); equals f on |x| < n, 0 beyond n+1.

    The drift argument is clipped to the bump support so the product is an
    exact 0 outside it instead of 0 * overflow.
    """
    x = np.asarray(x, dtype=float)
    xc = np.clip(x, -(n + 1.0), n + 1.0)
    out = cutoff_eval(n, np.abs(x)) * f_eval(xc)
    return out if np.ndim(out) else float(out)


def f_n_prime(n: float, x):
    """Derivative of the tamed drift; bounded and continuous."""
    x = np.asarray(x, dtype=float)
    xc = np.clip(x, -(n + 1.0), n + 1.0)
    r = np.abs(x)
    out = cutoff_prime(n, r) * np.sign(x) * f_eval(xc) + cutoff_eval(n, r) * (3.0 * xc * xc - 1.0)
    return out if np.ndim(out) else float(out)


def sigma_eval(spec: SigmaSpec, x):
    """Diffusion coefficient at x."""
    x = np.asarray(x, dtype=float)
    if spec.form == "constant":
        out = np.full_like(x, spec.c0)
    else:
        out = spec.c0 + spec.beta * (1.0 + x * x) ** (spec.q / 2.0)
    return out if out.ndim else float(out)


def sigma_prime(spec: SigmaSpec, x):
    """Derivative of the diffusion coefficient (0 for the constant form)."""
    x = np.asarray(x, dtype=float)
    if spec.form == "constant":
        out = np.zeros_like(x)
    else:
        out = spec.beta * spec.q * x * (1.0 + x * x) ** (spec.q / 2.0 - 1.0)
    return out if out.ndim else float(out)
