"""
Run configuration and logging setup for the DUCC solver pipeline

Configuration comes from a single YAML file (config.yaml by default) that is
turned into a tree of dataclasses. Unknown keys are rejected; command-line
flags are applied on top of the file afterwards.
"""

import dataclasses
import logging
import logging.handlers
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, get_type_hints

import yaml
from dotenv import load_dotenv

from errors import ConfigError
from solvers.pools import POOL_KINDS

DEFAULT_CONFIG_PATH = "config.yaml"
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

SOLVER_NAMES = ('fci', 'adapt-vqe', 'qubit-adapt-vqe', 'uccgsd', 'adapt-gcim')


@dataclass
class LoggingConfig:
    level: str = 'INFO'
    file: Optional[str] = 'logs/pipeline.log'
    max_bytes: int = 10_485_760
    backup_count: int = 5


@dataclass
class InputConfig:
    path: Optional[str] = None
    orbital_basis: str = 'auto'
    circuit: Optional[str] = None


@dataclass
class MappingConfig:
    prune_threshold: float = 1e-10


@dataclass
class MeasurementConfig:
    k: Optional[int] = None
    shots: int = 1024
    allocation: str = 'uniform'


@dataclass
class OptimizerConfig:
    gtol: float = 1e-8
    maxiter: int = 1000
    failure_gtol: float = 1e-5
    perturbation: float = 1e-2


@dataclass
class SolverConfig:
    name: str = 'fci'
    pool: str = 'fermionic-gsd'
    grad_tol: float = 1e-3
    max_iter: int = 100
    theta0: float = 0.1
    x: int = 1
    y: int = 0
    overlap_cutoff: float = 1e-8
    use_sector: bool = True
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)


@dataclass
class NoiseConfig:
    p2: float = 0.0
    trajectories: int = 64


@dataclass
class ZneConfig:
    factors: List[float] = field(default_factory=lambda: [1.0, 1.5, 2.0])
    weighted: bool = True


@dataclass
class ToyConfig:
    n_spatial: int = 4
    n_electrons: int = 4
    active_spatial: int = 2
    amplitude_scale: float = 0.1
    scales: List[float] = field(default_factory=lambda: [1e-1, 3e-2, 1e-2, 3e-3])


@dataclass
class ReferenceEntry:
    file: Optional[str] = None
    rhf: Optional[float] = None
    fci: Optional[float] = None
    adapt_vqe: Optional[float] = None
    adapt_gcim: Optional[float] = None
    adapt_gcim_22: Optional[float] = None
    qubit_adapt_vqe: Optional[float] = None
    uccgsd: Optional[float] = None
    ccsd: Optional[float] = None
    ccsd_t: Optional[float] = None
    pauli_strings: Optional[int] = None


@dataclass
class LibraryConfig:
    repository: str = 'npbauman/DUCC-Hamiltonian-Library'
    branch: str = 'main'
    api_url: str = 'https://api.github.com'
    raw_url: str = 'https://raw.githubusercontent.com'
    cache_dir: str = 'data/library'
    retry_attempts: int = 3
    timeout_seconds: int = 30
    rate_limit_rpm: int = 30
    token: Optional[str] = None
    references: Dict[str, ReferenceEntry] = field(default_factory=dict)


@dataclass
class OutputConfig:
    dir: str = 'results'


@dataclass
class RunConfig:
    """Validated configuration for one pipeline command"""

    logging: LoggingConfig = field(default_factory=LoggingConfig)
    input: InputConfig = field(default_factory=InputConfig)
    mapping: MappingConfig = field(default_factory=MappingConfig)
    measurement: MeasurementConfig = field(default_factory=MeasurementConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    zne: ZneConfig = field(default_factory=ZneConfig)
    toy: ToyConfig = field(default_factory=ToyConfig)
    library: LibraryConfig = field(default_factory=LibraryConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    seed: int = 7
    threads: int = 1

    def validate(self, command: Optional[str] = None) -> 'RunConfig':
        """Check value ranges; raises ConfigError on the first violation"""
        checks = [
            (self.input.orbital_basis in ('auto', 'spatial', 'spin'),
             f"input.orbital_basis must be auto, spatial or spin, got {self.input.orbital_basis!r}"),
            (self.mapping.prune_threshold >= 0, "mapping.prune_threshold must be >= 0"),
            (self.measurement.shots >= 1, "measurement.shots must be >= 1"),
            (self.measurement.k is None or self.measurement.k >= 1, "measurement.k must be >= 1"),
            (self.measurement.allocation in ('uniform', 'weighted'),
             "measurement.allocation must be uniform or weighted"),
            (self.solver.name in SOLVER_NAMES, f"solver.name must be one of {SOLVER_NAMES}"),
            (self.solver.pool in POOL_KINDS, f"solver.pool must be one of {POOL_KINDS}"),
            (self.solver.grad_tol > 0, "solver.grad_tol must be > 0"),
            (self.solver.max_iter >= 0, "solver.max_iter must be >= 0"),
            (self.solver.x >= 1, "solver.x must be >= 1"),
            (self.solver.y >= 0, "solver.y must be >= 0"),
            (self.solver.overlap_cutoff > 0, "solver.overlap_cutoff must be > 0"),
            (0.0 <= self.noise.p2 <= 1.0, "noise.p2 must lie in [0, 1]"),
            (self.noise.trajectories >= 1, "noise.trajectories must be >= 1"),
            (all(f >= 1.0 for f in self.zne.factors), "zne.factors must all be >= 1"),
            (self.toy.n_spatial * 2 <= 8, "toy systems are capped at 8 spin orbitals"),
            (0 < self.toy.active_spatial <= self.toy.n_spatial,
             "toy.active_spatial must lie in [1, toy.n_spatial]"),
            (self.threads >= 1, "threads must be >= 1"),
        ]
        if command == 'zne':
            checks.append((len(set(self.zne.factors)) >= 2,
                           "zne.factors needs at least two distinct noise factors"))
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        return self


def _build(cls, data: Optional[Dict[str, Any]], path: str):
    """Build dataclass ``cls`` from a mapping, rejecting unknown keys"""
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'} must be a mapping, got {type(data).__name__}")

    hints = get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        where = path or 'top level'
        raise ConfigError(f"Unknown configuration keys at {where}: {', '.join(unknown)}")

    kwargs = {}
    for name, value in data.items():
        hint = hints[name]
        child_path = f"{path}.{name}" if path else name
        if dataclasses.is_dataclass(hint):
            kwargs[name] = _build(hint, value, child_path)
        elif name == 'references':
            kwargs[name] = {key: _build(ReferenceEntry, entry, f"{child_path}.{key}")
                            for key, entry in (value or {}).items()}
        else:
            kwargs[name] = value
    return cls(**kwargs)


def apply_overrides(config: RunConfig, overrides: Dict[str, Any]) -> RunConfig:
    """Apply dotted-key overrides (``{'measurement.shots': 100}``); None values are skipped"""
    for dotted, value in overrides.items():
        if value is None:
            continue
        parts = dotted.split('.')
        config = _replace_path(config, parts, value, dotted)
    return config


def _replace_path(obj, parts: List[str], value: Any, dotted: str):
    name = parts[0]
    if not dataclasses.is_dataclass(obj) or name not in {f.name for f in dataclasses.fields(obj)}:
        raise ConfigError(f"Unknown configuration key: {dotted}")
    if len(parts) == 1:
        return dataclasses.replace(obj, **{name: value})
    child = _replace_path(getattr(obj, name), parts[1:], value, dotted)
    return dataclasses.replace(obj, **{name: child})


def load_config(config_path: Optional[str] = None) -> RunConfig:
    """Load configuration from YAML file, honouring .env overrides"""
    load_dotenv()
    config_path = config_path or os.getenv('DUCC_CONFIG') or DEFAULT_CONFIG_PATH
    path = Path(config_path)

    if path.exists():
        with open(path, 'r') as f:
            raw = yaml.safe_load(f) or {}
    elif config_path == DEFAULT_CONFIG_PATH:
        raw = {}
    else:
        raise ConfigError(f"Configuration file not found: {config_path}")

    config = _build(RunConfig, raw, '')

    env_level = os.getenv('DUCC_LOG_LEVEL')
    if env_level:
        config = apply_overrides(config, {'logging.level': env_level.upper()})
    env_token = os.getenv('DUCC_LIBRARY_TOKEN')
    if env_token:
        config = apply_overrides(config, {'library.token': env_token})
    return config


def setup_logging(log_config: LoggingConfig, verbose: bool = False) -> logging.Logger:
    """Setup logging configuration"""
    logger = logging.getLogger()
    level = logging.DEBUG if verbose else getattr(logging, log_config.level.upper(), logging.INFO)
    logger.setLevel(level)

    # Handlers are attached once per process
    if getattr(logger, '_ducc_configured', False):
        return logger

    formatter = logging.Formatter(LOG_FORMAT)

    if log_config.file:
        Path(log_config.file).parent.mkdir(parents=True, exist_ok=True)
        fh = logging.handlers.RotatingFileHandler(
            log_config.file,
            maxBytes=log_config.max_bytes,
            backupCount=log_config.backup_count
        )
        fh.setFormatter(formatter)
        logger.addHandler(fh)

    ch = logging.StreamHandler()
    ch.setFormatter(formatter)
    logger.addHandler(ch)

    logger._ducc_configured = True
    return logger
