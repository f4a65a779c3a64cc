"""
Configuration
-------------
Environment settings (``Config``) and the run configuration of a suite
(``RunConfig``): embedded defaults, overridden by a dotenv-style file with
``# [section]`` headers, overridden by command line flags.
"""

import logging
import os
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

from dotenv import dotenv_values, load_dotenv

from heislab.errors import ConfigError
from heislab.operators.dyadic import STRICT_DELTA

logger = logging.getLogger(__name__)

load_dotenv()

SETTINGS_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "settings")


class Config(object):
    OUT_DIR = os.environ.get('HEISLAB_OUT_DIR') or 'heislab-out'
    SEED = int(os.environ.get('HEISLAB_SEED') or 0)
    LOG_LEVEL = os.environ.get('HEISLAB_LOG_LEVEL') or 'INFO'
    CONFIG_FILE = os.environ.get('HEISLAB_CONFIG_FILE') or os.path.join(SETTINGS_DIR, 'default.env')
    CORPUS_FILE = os.environ.get('HEISLAB_CORPUS_FILE') or os.path.join(SETTINGS_DIR, 'corpus.json')


@dataclass(frozen=True)
class RunConfig:
    # general
    n: int = 1
    seed: int = Config.SEED
    out: str = Config.OUT_DIR
    corpus_file: str = Config.CORPUS_FILE

    # continuity grid (H^2 by default)
    grid_n: int = 2
    grid_z_half: float = 3.0
    grid_t_half: float = 6.0
    grid_z_cells: int = 9
    grid_t_cells: int = 17

    # spectral truncation
    spectral_k: int = 50000
    spectral_lambda: Optional[float] = None
    spectral_n_lambda: int = 96
    spectral_n_small: int = 16
    spectral_tol: float = 1e-9

    # sphere rules and sample points
    means_nodes: Optional[int] = None
    means_polar_nodes: Optional[int] = None
    means_points: int = 10
    means_radii: str = "0.5,1,2"

    # laguerre
    laguerre_k_max: int = 500
    laguerre_samples: int = 2001
    laguerre_refine: int = 4
    laguerre_scan_k_max: int = 5000
    laguerre_table_k_max: int = 10000

    # dyadic grid-build
    dyadic_delta: float = 0.01
    dyadic_k_min: int = 0
    dyadic_k_max: int = 2
    dyadic_systems: int = 3
    dyadic_strict: bool = True
    dyadic_z_half: float = 6e-4
    dyadic_t_half: float = 4e-7
    dyadic_z_cells: int = 24
    dyadic_t_cells: int = 128
    dyadic_balls: int = 100
    dyadic_slab_cells: int = 1500

    # sparse suites, per dimension where the default depends on n
    sparse_dims: str = "1,2"
    sparse_delta_1: float = 1.0 / 3.0
    sparse_delta_2: float = 0.5
    sparse_k_min: int = -1
    sparse_k_max: int = 1
    sparse_z_half_1: float = 1.2
    sparse_t_half_1: float = 0.8
    sparse_z_cells_1: int = 12
    sparse_t_cells_1: int = 24
    sparse_z_half_2: float = 0.8
    sparse_t_half_2: float = 0.5
    sparse_z_cells_2: int = 8
    sparse_t_cells_2: int = 6
    sparse_nodes_1: int = 64
    sparse_nodes_2: int = 8
    sparse_r_nodes: int = 2
    sparse_max_depth: int = 32
    sparse_refine: bool = True
    sparse_stability: float = 0.2

    # weights
    weights_power: float = -0.5
    weights_cap: float = 50.0

    def validate(self, suites=()) -> "RunConfig":
        if self.n not in (1, 2) or self.grid_n not in (1, 2):
            raise ConfigError(f"n must be 1 or 2 at desk scale, got n={self.n}, grid_n={self.grid_n}")
        for name in ("dyadic_delta", "sparse_delta_1", "sparse_delta_2"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ConfigError(f"{name} must lie in (0, 1), got {value}")
        if "grid-build" in suites and self.dyadic_strict and self.dyadic_delta > STRICT_DELTA:
            raise ConfigError(f"grid-build needs DYADIC_DELTA <= 1/96, got {self.dyadic_delta}")
        for name in ("grid_z_half", "grid_t_half", "dyadic_z_half", "dyadic_t_half",
                     "sparse_z_half_1", "sparse_t_half_1", "sparse_z_half_2", "sparse_t_half_2",
                     "spectral_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("grid_z_cells", "grid_t_cells", "dyadic_z_cells", "dyadic_t_cells",
                     "sparse_z_cells_1", "sparse_t_cells_1", "sparse_z_cells_2", "sparse_t_cells_2",
                     "dyadic_systems", "dyadic_balls", "dyadic_slab_cells", "means_points",
                     "laguerre_k_max", "laguerre_samples", "sparse_r_nodes"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.spectral_k < 0:
            raise ConfigError(f"SPECTRAL_K must be >= 0, got {self.spectral_k}")
        if self.spectral_lambda is not None and not self.spectral_lambda > 0:
            raise ConfigError(f"SPECTRAL_LAMBDA must be > 0, got {self.spectral_lambda}")
        if self.spectral_n_lambda < 2 or self.spectral_n_small < 2:
            raise ConfigError("SPECTRAL_N_LAMBDA and SPECTRAL_N_SMALL must be >= 2")
        if self.dyadic_k_max < self.dyadic_k_min or self.sparse_k_max < self.sparse_k_min:
            raise ConfigError("level ranges must be nonempty")
        for n in self.dims:
            if n not in (1, 2):
                raise ConfigError(f"SPARSE_DIMS may only list 1 and 2, got {self.sparse_dims}")
        for r in self.radii:
            if not r > 0:
                raise ConfigError(f"MEANS_RADII must be positive, got {self.means_radii}")
        return self

    @property
    def radii(self) -> list:
        return _float_list(self.means_radii, "MEANS_RADII")

    @property
    def dims(self) -> list:
        return [int(v) for v in _float_list(self.sparse_dims, "SPARSE_DIMS")]

    def sparse_value(self, name: str, n: int):
        return getattr(self, f"sparse_{name}_{n}")

    def as_dict(self) -> dict:
        return asdict(self)


def _float_list(text: str, key: str) -> list:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{key} must be a comma separated list of numbers, got {text!r}") from None


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(name: str, raw: Optional[str], kind):
    if raw is None or raw.strip() == "":
        return None
    raw = raw.strip()
    try:
        if kind is bool:
            if raw.lower() in _TRUE:
                return True
            if raw.lower() in _FALSE:
                return False
            raise ValueError(raw)
        if kind in (int, Optional[int]):
            return int(raw)
        if kind in (float, Optional[float]):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{name.upper()}={raw!r} does not parse as {kind}") from None


def load_run_config(path: Optional[str] = None, **overrides) -> RunConfig:
    """
    Defaults <- HEISLAB_SEED <- ``path`` <- ``overrides`` (None values are ignored).
    Keys in the file are the upper-case field names; unknown keys raise ConfigError.
    """
    known = {f.name: f for f in fields(RunConfig)}
    values = {"seed": Config.SEED}
    if path:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        for key, raw in dotenv_values(path).items():
            name = key.lower()
            if name not in known:
                raise ConfigError(f"unknown config key {key} in {path}")
            value = _coerce(name, raw, known[name].type)
            if value is not None:
                values[name] = value
        logger.debug("read %d config keys from %s", len(values), path)
    for name, value in overrides.items():
        if name not in known:
            raise ConfigError(f"unknown config override {name}")
        if value is not None:
            values[name] = value
    try:
        return replace(RunConfig(), **values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
