"""Experiment configuration: flat ``key = value`` text, one experiment per file."""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Optional

from .atoms import ATOMS

PROBLEMS = ("matching_pennies", "rps", "matrix", "random", "kuhn", "constrained_kuhn", "treeplex")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    problem: str
    iterations: int
    atom: str = "rm_plus"
    atom_x: Optional[str] = None
    atom_y: Optional[str] = None
    matrix_file: Optional[str] = None
    treeplex_file: Optional[str] = None
    rows: int = 3
    cols: int = 3
    backend: str = "projection"
    constraint_bound: float = 0.3
    kappa: float = 100.0
    penalty_mode: str = "fixed"
    geometry: str = "euclidean"
    reg_x: float = 0.0
    reg_y: float = 0.0
    checkpoints: str = "geometric"
    output: str = "results.csv"
    seed: int = 0

    @property
    def x_atom(self) -> str:
        return self.atom_x or self.atom

    @property
    def y_atom(self) -> str:
        return self.atom_y or self.atom

    def checkpoint_list(self) -> Optional[list[int]]:
        """``None`` means geometric (10, 20, 40, ... and the last round)."""
        spec = self.checkpoints.strip()
        T = self.iterations
        if spec == "geometric":
            return None
        if spec.startswith("every:"):
            step = int(spec.split(":", 1)[1])
            points = list(range(step, T + 1, step))
            if not points or points[-1] != T:
                points.append(T)
            return points
        points = sorted({int(p) for p in spec.split(",") if p.strip()})
        return [p for p in points if 1 <= p <= T] or [T]

    def validate(self) -> None:
        if self.problem not in PROBLEMS:
            raise ConfigError(f"problem: unknown problem {self.problem!r}; choose from {', '.join(PROBLEMS)}")
        if self.iterations < 1:
            raise ConfigError("iterations: must be at least 1")
        for key in ("atom", "atom_x", "atom_y"):
            value = getattr(self, key)
            if value is not None and value not in ATOMS:
                raise ConfigError(f"{key}: unknown atom {value!r}; choose from {', '.join(sorted(ATOMS))}")
        if self.problem == "matrix" and not self.matrix_file:
            raise ConfigError("matrix_file: required when problem = matrix")
        if self.problem == "treeplex" and not self.treeplex_file:
            raise ConfigError("treeplex_file: required when problem = treeplex")
        if self.rows < 1 or self.cols < 1:
            raise ConfigError("rows/cols: must be positive")
        if self.backend not in ("projection", "lagrangian"):
            raise ConfigError(f"backend: unknown backend {self.backend!r}")
        if self.backend == "lagrangian" and not self.kappa > 0:
            raise ConfigError("kappa: must be positive")
        if self.penalty_mode not in ("fixed", "adaptive"):
            raise ConfigError(f"penalty_mode: unknown mode {self.penalty_mode!r}")
        if self.geometry != "euclidean":
            raise ConfigError("geometry: only 'euclidean' is available from the command line")
        if self.reg_x < 0 or self.reg_y < 0:
            raise ConfigError("reg_x/reg_y: must be nonnegative")
        if (self.reg_x or self.reg_y) and self.problem not in ("matching_pennies", "rps", "matrix", "random"):
            raise ConfigError("reg_x/reg_y: regularizers are only supported for matrix games")
        try:
            self.checkpoint_list()
        except ValueError:
            raise ConfigError(f"checkpoints: cannot parse {self.checkpoints!r}") from None


_FIELDS = {f.name: f for f in fields(ExperimentConfig)}
_REQUIRED = ("problem", "iterations")


def _convert(name: str, raw: str):
    kind = _FIELDS[name].type
    if "int" in str(kind):
        return int(raw)
    if "float" in str(kind):
        return float(raw)
    return raw


def parse_config(text: str, overrides: Optional[dict] = None) -> ExperimentConfig:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        try:
            values[key] = _convert(key, value)
        except ValueError:
            raise ConfigError(f"line {lineno}: invalid value {value!r} for {key!r}") from None
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    for key in _REQUIRED:
        if key not in values:
            raise ConfigError(f"{key}: missing required field")
    config = ExperimentConfig(**values)
    config.validate()
    return config


def load_config(path, overrides: Optional[dict] = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, overrides)
