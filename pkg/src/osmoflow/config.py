"""Run configuration: nested dataclasses loaded from TOML with strict keys."""

from dataclasses import MISSING, asdict, dataclass, field, fields, is_dataclass
import hashlib
import json

import tomli

from .core import InvalidStateError, PhysParams


class ConfigError(InvalidStateError):
    pass


@dataclass(frozen=True)
class GridConfig:
    n: int = 128
    n_coarse: int = 64
    n_fine: int = 256
    stokes_n: int = 48

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 8:
                raise ConfigError(f"grid.{f.name} must be an integer >= 8, got {v!r}")


@dataclass(frozen=True)
class SpectrumConfig:
    k_max: int = 16
    tol_zero: float = 1e-6
    spurious_shift: float = 1e-3

    def __post_init__(self):
        if not isinstance(self.k_max, int) or self.k_max < 2:
            raise ConfigError("spectrum.k_max must be an integer >= 2")
        if not self.tol_zero > 0 or not self.spurious_shift > 0:
            raise ConfigError("spectrum tolerances must be positive")


@dataclass(frozen=True)
class SimulateConfig:
    c_plus: float = 2.2
    c_minus: float = 1.0
    R: float = 1.0
    n_inner: int = 129
    n_outer: int = 129
    dt: float = 1e-3
    t_final: float = 12.0
    output_every: int = 10

    def __post_init__(self):
        if not (self.c_plus > 0 and self.c_minus > 0 and self.R > 0):
            raise ConfigError("simulate: concentrations and radius must be positive")
        if not (self.dt > 0 and self.t_final > 0) or self.output_every < 1:
            raise ConfigError("simulate: dt, t_final and output_every must be positive")
        if self.n_inner < 8 or self.n_outer < 8:
            raise ConfigError("simulate: at least 8 nodes per phase")


@dataclass(frozen=True)
class ModeEvolveConfig:
    dt: float = 1e-3
    t_final: float = 8.0
    output_every: int = 10
    tail_fraction: float = 0.5

    def __post_init__(self):
        if not (self.dt > 0 and self.t_final > 0) or self.output_every < 1:
            raise ConfigError("mode_evolve: dt, t_final and output_every must be positive")
        if not 0 < self.tail_fraction <= 1:
            raise ConfigError("mode_evolve.tail_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class RunConfig:
    """Everything a subcommand needs.  Tables: ``params``, ``grid``,
    ``spectrum``, ``simulate``, ``mode_evolve``; scalars ``seed`` and
    ``output_dir``."""

    params: PhysParams = field(default_factory=PhysParams)
    grid: GridConfig = field(default_factory=GridConfig)
    spectrum: SpectrumConfig = field(default_factory=SpectrumConfig)
    simulate: SimulateConfig = field(default_factory=SimulateConfig)
    mode_evolve: ModeEvolveConfig = field(default_factory=ModeEvolveConfig)
    seed: int = 0
    output_dir: str = "osmoflow-out"

    def to_dict(self):
        return asdict(self)

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @classmethod
    def from_mapping(cls, data):
        return _build(cls, data, "")

    @classmethod
    def from_toml(cls, path):
        with open(path, "rb") as fh:
            try:
                data = tomli.load(fh)
            except tomli.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_mapping(data)


def _build(cls, data, prefix):
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix.rstrip('.') or 'config'} must be a table")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown keys in {prefix.rstrip('.') or 'config'}: {unknown}")
    kwargs = {}
    for name, value in data.items():
        ftype = known[name].default_factory
        if ftype is not MISSING and is_dataclass(ftype):
            kwargs[name] = _build(ftype, value, prefix + name + ".")
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
