"""
Experiment configuration.

A config file is a flat YAML mapping, one key per ExperimentConfig field.
Defaults live here; `print-config` dumps the effective values.

Calibrated constants (B, B0, C_prime, ratio_band, phase, norm_c, norm_C)
are written by `--calibrate` runs to <output_dir>/locked_constants.yaml
and asserted against on later runs.
"""

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from src.errors import ConfigurationError

LOCKED_FILE = 'locked_constants.yaml'

DEFAULT_TOLERANCES: Dict[str, float] = {
    'soliton_tol': 1e-10,
    'newton_max_iter': 200,
    'gradient_steps': 400,
    'gradient_tau': 0.5,
    'fd_dlambda': 1e-3,
    'hm_clip': 1e-9,
    'hm_negative': 1e-6,
    'symmetry': 1e-10,
    'kernel_residual': 1e-8,
    'mu0_tol': 1e-6,
    'gap_tol': 0.3,
    'mu1_margin': 0.5,
    'alpha_denominator': 1e-10,
    'energy_rel': 1e-8,
    'generator_tol': 1e-5,
    'rk_rtol': 1e-10,
    'rk_atol': 1e-12,
    'max_step': math.pi / 40,
    'implicit_residual': 1e-7,
    'scan_horizon': 500.0,
    'scan_rtol': 1e-8,
    'window_tol': 1e-3,
    'growth_lo': 0.5,
    'growth_hi': 2.0,
    'evolution_step': 0.01,
    'richardson_every': 1000,
    'sample_every': 0.5,
    'bootstrap_factor': 10.0,
    'bootstrap_margin': 1.5,
    'l2_drift': 1e-7,
    'quadratic_identity': 1e-8,
    'uniformity_factor': 2.0,
    'cauchy_tol': 1e-3,
    'ratio_band_max': 4.0,
    'remainder_fraction': 0.05,
    'v_decay_factor': 5.0,
    'points_per_decade': 40,
}

LOCKED_KEYS = ('B', 'B0', 'C_prime', 'ratio_band', 'phase', 'norm_c', 'norm_C')
TRAJECTORY_INITS = ('shell', 'equilibrium')


@dataclass(frozen=True)
class ExperimentConfig:
    epsilon: float = 0.05
    n_modes: int = 128
    quad_order: int = 512
    s0: float = 20.0
    m_list: List[float] = field(default_factory=lambda: [400.0, 800.0, 1600.0])
    t_max: float = 1.0e4
    output_dir: str = 'results'
    seed: int = 1234
    workers: int = 1
    phase_steps: int = 32
    trajectory_init: str = 'shell'
    eps_scan: List[float] = field(default_factory=lambda: [1e-3, 1e-2, 1e-1])
    lambda_checks: List[float] = field(default_factory=lambda: [2.05, 2.1, 2.5])
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    locked_constants: Dict[str, Optional[float]] = field(
        default_factory=lambda: {k: None for k in LOCKED_KEYS})

    @property
    def lam(self) -> float:
        return 2.0 + self.epsilon

    def tol(self, name: str) -> float:
        return self.tolerances[name]

    def locked(self, name: str) -> Optional[float]:
        return self.locked_constants.get(name)

    def replace(self, **changes: Any) -> 'ExperimentConfig':
        return validate(dataclasses.replace(self, **changes))

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


# ============================================================================
# VALIDATION
# ============================================================================

_FLOAT_FIELDS = ('epsilon', 's0', 't_max')
_INT_FIELDS = ('n_modes', 'quad_order', 'seed', 'workers', 'phase_steps')
_LIST_FIELDS = ('m_list', 'eps_scan', 'lambda_checks')


def _as_float(name: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{name}: expected a real number, got {value!r}")
    return float(value)


def _as_int(name: str, value: Any) -> int:
    if isinstance(value, bool):
        raise ConfigurationError(f"{name}: expected an integer, got {value!r}")
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if not isinstance(value, int):
        raise ConfigurationError(f"{name}: expected an integer, got {value!r}")
    return value


def validate(config: ExperimentConfig) -> ExperimentConfig:
    """Coerce field types and check the config invariants."""
    values = dataclasses.asdict(config)
    for name in _FLOAT_FIELDS:
        values[name] = _as_float(name, values[name])
    for name in _INT_FIELDS:
        values[name] = _as_int(name, values[name])
    for name in _LIST_FIELDS:
        items = values[name]
        if not isinstance(items, (list, tuple)) or not items:
            raise ConfigurationError(f"{name}: expected a non-empty list")
        values[name] = [_as_float(f"{name}[{i}]", v) for i, v in enumerate(items)]

    tolerances = dict(DEFAULT_TOLERANCES)
    for key, value in (values['tolerances'] or {}).items():
        if key not in DEFAULT_TOLERANCES:
            raise ConfigurationError(f"tolerances: unknown key {key!r}")
        tolerances[key] = _as_float(f"tolerances.{key}", value)
    values['tolerances'] = tolerances

    locked = {k: None for k in LOCKED_KEYS}
    for key, value in (values['locked_constants'] or {}).items():
        if key not in LOCKED_KEYS:
            raise ConfigurationError(f"locked_constants: unknown key {key!r}")
        locked[key] = None if value is None else _as_float(f"locked_constants.{key}", value)
    values['locked_constants'] = locked

    if not isinstance(values['output_dir'], str) or not values['output_dir'].strip():
        raise ConfigurationError("output_dir: missing")
    if values['epsilon'] <= 0:
        raise ConfigurationError(
            f"epsilon must be > 0: no nontrivial soliton for lambda = {2.0 + values['epsilon']} <= 2")
    if values['s0'] <= 1:
        raise ConfigurationError(f"s0 must be > 1, got {values['s0']}")
    if values['n_modes'] < 1:
        raise ConfigurationError("n_modes must be >= 1")
    if values['quad_order'] < 2 * values['n_modes']:
        raise ConfigurationError(
            f"quad_order ({values['quad_order']}) must be >= 2*n_modes ({2 * values['n_modes']})")
    m_list = values['m_list']
    if any(b <= a for a, b in zip(m_list, m_list[1:])):
        raise ConfigurationError(f"m_list must be strictly increasing, got {m_list}")
    if m_list[0] <= values['s0']:
        raise ConfigurationError("m_list entries must exceed s0")
    if values['t_max'] <= values['s0']:
        raise ConfigurationError("t_max must exceed s0")
    if values['workers'] < 1:
        raise ConfigurationError("workers must be >= 1")
    if values['trajectory_init'] not in TRAJECTORY_INITS:
        raise ConfigurationError(
            f"trajectory_init must be one of {TRAJECTORY_INITS}, got {values['trajectory_init']!r}")
    return ExperimentConfig(**values)


# ============================================================================
# LOAD / SAVE
# ============================================================================

def load_config(path: Optional[str] = None, **overrides: Any) -> ExperimentConfig:
    """Defaults, then the YAML file (if any), then explicit overrides."""
    values: Dict[str, Any] = {}
    if path is not None:
        config_path = Path(path)
        if not config_path.is_file():
            raise ConfigurationError(f"config file not found: {config_path}")
        with open(config_path, 'r') as f:
            loaded = yaml.safe_load(f) or {}
        if not isinstance(loaded, dict):
            raise ConfigurationError("config file must be a flat key-value mapping")
        known = {f.name for f in dataclasses.fields(ExperimentConfig)}
        unknown = sorted(set(loaded) - known)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {unknown}")
        values.update(loaded)
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        config = ExperimentConfig(**values)
    except TypeError as e:
        raise ConfigurationError(str(e)) from e
    config = validate(config)
    return merge_locked(config, load_locked(config.output_dir))


def dump_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=True, default_flow_style=False)


def save_config(config: ExperimentConfig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        f.write(dump_config(config))
    return path


def prepare_output_dir(config: ExperimentConfig) -> Path:
    """Create the leaf output directory; its parent must exist."""
    out = Path(config.output_dir)
    if not out.parent.exists():
        raise ConfigurationError(f"output_dir parent does not exist: {out.parent}")
    try:
        out.mkdir(exist_ok=True)
    except OSError as e:
        raise ConfigurationError(f"output_dir not writable: {out} ({e})") from e
    return out


# ============================================================================
# LOCKED CONSTANTS
# ============================================================================

def load_locked(output_dir: str) -> Dict[str, Optional[float]]:
    path = Path(output_dir) / LOCKED_FILE
    if not path.is_file():
        return {}
    with open(path, 'r') as f:
        loaded = yaml.safe_load(f) or {}
    return {k: (None if v is None else float(v)) for k, v in loaded.items() if k in LOCKED_KEYS}


def merge_locked(config: ExperimentConfig, locked: Dict[str, Optional[float]]) -> ExperimentConfig:
    """Values already set in the config win over the persisted file."""
    merged = dict(config.locked_constants)
    for key, value in locked.items():
        if merged.get(key) is None:
            merged[key] = value
    return dataclasses.replace(config, locked_constants=merged)


def save_locked(output_dir: str, updates: Dict[str, float]) -> Path:
    """Merge updates into the persisted locked constants."""
    path = Path(output_dir) / LOCKED_FILE
    current = load_locked(output_dir)
    current.update({k: float(v) for k, v in updates.items() if k in LOCKED_KEYS})
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        # repr keeps the shortest round-trip form of every float
        for key in sorted(current):
            value = current[key]
            f.write(f"{key}: {'null' if value is None else repr(value)}\n")
    return path
