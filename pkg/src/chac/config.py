"""Experiment configuration: sectioned key-value files, validation, digests.

The file format is plain INI (configparser) with sections [grid], [model],
[initial], [seeds], [solver], [observation].  Every numeric range is
validated at load time; violations raise ConfigError with a message naming
the violated bound.
"""

import configparser
import hashlib
import io
from dataclasses import dataclass, replace

import numpy as np

from . import solver
from .model import ConfigurationError, CutoffSpec, ModelParams, SigmaSpec
from .spectral import GridSpec, SpectralBasis

ConfigError = ConfigurationError


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment."""

    nx: int = 64
    nt: int = 256
    t_final: float = 0.25
    num_modes: int | None = None          # defaults to nx
    rho: float = 1.0
    qtilde: float = 1.0
    cutoff_n: float = 5.0
    sigma_form: str = "power"
    sigma_c0: float = 0.5
    sigma_beta: float = 0.5
    sigma_q: float = 0.3
    f_enabled: bool = True
    init_kind: str = "cosine"
    init_path: str | None = None
    master_seed: int = 20260809
    replicates: int = 100
    tol: float = 1e-8
    max_iter: int = 20
    scheme: str = "step"
    x_star: float = float(np.pi / 2)
    t_obs: tuple = ()                     # empty means (t_final,)
    eps_list: tuple = ()                  # empty means {2^-7..2^-3} * t_final
    thresholds: tuple = (0.0,)

    def __post_init__(self):
        if self.nx < 2 or self.nt < 2:
            raise ConfigError("grid needs nx >= 2 and nt >= 2")
        if self.t_final <= 0:
            raise ConfigError("t_final > 0 required")
        if self.rho <= 0:
            raise ConfigError("rho > 0 required")
        if self.qtilde < 0:
            raise ConfigError("qtilde >= 0 required")
        if self.cutoff_n <= 0:
            raise ConfigError("cutoff level must satisfy n > 0")
        if self.sigma_form == "power" and not 0.0 < self.sigma_q < 1.0 / 3.0:
            raise ConfigError("growth exponent must satisfy q ∈ (0,1/3)")
        # c0 = 0 with constant sigma is the degenerate noise-off oracle fixture
        if self.sigma_c0 < 0 or (self.sigma_form == "power" and self.sigma_c0 <= 0):
            raise ConfigError("sigma floor must satisfy c0 > 0")
        if self.tol <= 0:
            raise ConfigError("tol > 0 required")
        if self.max_iter < 1:
            raise ConfigError("max_iter >= 1 required")
        if self.scheme not in ("step", "picard"):
            raise ConfigError("scheme must be 'step' or 'picard'")
        if self.init_kind not in ("cosine", "zero", "file"):
            raise ConfigError("initial condition must be cosine, zero, or file")
        if self.replicates < 1:
            raise ConfigError("replicates >= 1 required")
        if not 0.0 <= self.x_star <= np.pi:
            raise ConfigError("x_star must lie in [0, pi]")
        k = self.num_modes if self.num_modes is not None else self.nx
        if not 1 <= k <= self.nx:
            raise ConfigError("truncation K must satisfy 1 <= K <= nx")

    def grid(self) -> GridSpec:
        return GridSpec(self.nx, self.nt, self.t_final)

    def basis(self) -> SpectralBasis:
        k = self.num_modes if self.num_modes is not None else self.nx
        return SpectralBasis(k, self.rho, self.qtilde)

    def params(self) -> ModelParams:
        return ModelParams(
            rho=self.rho,
            qtilde=self.qtilde,
            cutoff=CutoffSpec(self.cutoff_n),
            sigma=SigmaSpec(self.sigma_form, self.sigma_c0, self.sigma_beta, self.sigma_q),
            f_enabled=self.f_enabled,
        )

    def initial_field(self) -> np.ndarray:
        if self.init_kind == "file":
            if not self.init_path:
                raise ConfigError("initial condition 'file' needs a path")
            samples = np.loadtxt(self.init_path, delimiter=",")
            return solver.initial_field("custom", self.grid(), samples)
        return solver.initial_field(self.init_kind, self.grid())

    def observation_times(self) -> tuple:
        return self.t_obs if self.t_obs else (self.t_final,)

    def eps_values(self) -> np.ndarray:
        if self.eps_list:
            return np.asarray(self.eps_list, dtype=float)
        return self.t_final * 2.0 ** (-np.arange(7, 2, -1, dtype=float))

    def x_star_index(self) -> int:
        return self.grid().nearest_x_index(self.x_star)


def default_config(**overrides) -> ExperimentConfig:
    return replace(ExperimentConfig(), **overrides) if overrides else ExperimentConfig()


_FLOAT_LISTS = {"t_obs", "eps_list", "thresholds"}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in _FLOAT_LISTS:
        if raw.lower() in ("", "auto"):
            return ()
        return tuple(float(tok) for tok in raw.split(","))
    if key in ("nx", "nt", "master_seed", "replicates", "max_iter", "num_modes"):
        return int(raw)
    if key == "f_enabled":
        if raw.lower() in ("true", "1", "yes", "on"):
            return True
        if raw.lower() in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"boolean expected for f_enabled, got '{raw}'")
    if key in ("sigma_form", "init_kind", "scheme", "init_path"):
        return raw
    return float(raw)


_SECTION_KEYS = {
    "grid": {"nx": "nx", "nt": "nt", "t_final": "t_final", "num_modes": "num_modes"},
    "model": {
        "rho": "rho", "qtilde": "qtilde", "cutoff_n": "cutoff_n",
        "sigma_form": "sigma_form", "sigma_c0": "sigma_c0",
        "sigma_beta": "sigma_beta", "sigma_q": "sigma_q", "f_enabled": "f_enabled",
    },
    "initial": {"kind": "init_kind", "path": "init_path"},
    "seeds": {"master": "master_seed", "replicates": "replicates"},
    "solver": {"tol": "tol", "max_iter": "max_iter", "scheme": "scheme"},
    "observation": {
        "x_star": "x_star", "t_obs": "t_obs", "eps": "eps_list",
        "thresholds": "thresholds",
    },
}


def load_config(path: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read configuration file '{path}'")
    kwargs = {}
    for section in parser.sections():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"unknown configuration section [{section}]")
        keymap = _SECTION_KEYS[section]
        for key, raw in parser.items(section):
            if key not in keymap:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")
            try:
                kwargs[keymap[key]] = _parse_value(keymap[key], raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{key}: {exc}") from exc
    return ExperimentConfig(**kwargs)


def write_config(cfg: ExperimentConfig, stream) -> None:
    """Serialize a configuration in the sectioned key-value format."""
    def fmt(v):
        if isinstance(v, tuple):
            return ",".join(f"{x:.17g}" for x in v) if v else "auto"
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return f"{v:.17g}"
        return str(v)

    for section, keymap in _SECTION_KEYS.items():
        stream.write(f"[{section}]\n")
        for key, attr in keymap.items():
            val = getattr(cfg, attr)
            if val is None:
                continue
            stream.write(f"{key} = {fmt(val)}\n")
        stream.write("\n")


def config_digest(cfg: ExperimentConfig) -> str:
    """Short stable digest of the full configuration."""
    buf = io.StringIO()
    write_config(cfg, buf)
    return hashlib.sha256(buf.getvalue().encode()).hexdigest()[:12]


def artifact_header(cfg: ExperimentConfig) -> str:
    """Comment line content identifying the run for every output file."""
    return f"config={config_digest(cfg)} seed={cfg.master_seed}"
