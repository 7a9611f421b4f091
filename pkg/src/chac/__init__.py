"""chac: spectral laboratory for the 1-D stochastic Cahn-Hilliard/Allen-Cahn
equation with multiplicative space-time white noise.

Capabilities: exact-per-mode exponential time stepping of the mild solution,
whole-path fixed-point solving, discrete Walsh noise with counter-based
replicate streams, tangent (noise-derivative) propagation with window/
remainder estimators and H-norm positivity diagnostics, Monte Carlo density
estimation, and sup-norm localization checks.
"""

from .model import (
    ConfigurationError,
    CutoffSpec,
    ModelParams,
    SigmaSpec,
    cutoff_eval,
    f_eval,
    f_n_eval,
    f_n_prime,
    sigma_constant,
    sigma_eval,
    sigma_power,
    sigma_prime,
)
from .noise import NoiseRealization, generate, stream_for_replicate
from .solver import (
    BlowUpError,
    FieldPath,
    PicardConvergenceError,
    initial_field,
    picard_solve,
    solve_path,
    step,
    sup_moment,
)
from .spectral import (
    GridSpec,
    SpectralBasis,
    eigenfunction_eval,
    forcing_factor,
    from_modes,
    green_eval,
    kernel_energy,
    semigroup_apply,
    to_modes,
)
from .malliavin import (
    MalliavinTensor,
    directional_difference,
    hnorm_sq,
    positivity_probability,
    propagate,
    propagate_all_sources,
    remainder_estimate,
    remainder_scan,
    seed_source,
    window_estimate,
    window_scan,
)
from .density import DensityReport, gaussian_oracle_check, kde, sample_ensemble
from .localization import classify, consistency_check, coverage_estimate
from .config import ExperimentConfig, default_config, load_config

__version__ = "0.1.0"
