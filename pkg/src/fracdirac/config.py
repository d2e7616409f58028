"""Experiment configuration: a flat TOML subset (or the equivalent JSON).

Example::

    [model]
    alpha = 1.0
    theta = 0.0
    beta = 0.0
    p = "cos(2*x) + sin(x)"
    r = "cos(2*x) - sin(x)"
    M12 = "0"

    [solver]
    grid_points = 4097
    picard_iterations = 30

    [spectrum]
    n_lo = 1
    n_hi = 64

    [inverse]
    n_max = 64
    known = "L"          # or "pr"
    smoothing = 0

    [output]
    directory = "out"
    formats = ["csv", "json"]

Missing keys take the defaults below.  Unknown sections or keys are errors.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .conformable import DEFAULT_POINTS
from .expr import ExpressionError, ParseError, UnknownIdentifierError, parse
from .model import KERNEL_NAMES, Model

__all__ = ["ConfigError", "ExperimentConfig", "load_config"]


class ConfigError(ValueError):
    pass


@dataclass
class ModelBlock:
    alpha: float = 1.0
    theta: float = 0.0
    beta: float = 0.0
    p: str = "0"
    r: str = "0"
    M11: str = "0"
    M12: str = "0"
    M21: str = "0"
    M22: str = "0"


@dataclass
class SolverBlock:
    grid_points: int = DEFAULT_POINTS
    picard_iterations: int = 30


@dataclass
class SpectrumBlock:
    n_lo: int = 1
    n_hi: int = 64


@dataclass
class InverseBlock:
    n_max: int = 64
    known: str = "L"
    smoothing: int = 0
    window: float = 0.5
    degree: int = 3
    tol_angle: float = 5e-3
    tol_function: float = 2e-2


@dataclass
class OutputBlock:
    directory: str = "out"
    formats: list = field(default_factory=lambda: ["csv", "json"])


_BLOCKS = {
    "model": ModelBlock,
    "solver": SolverBlock,
    "spectrum": SpectrumBlock,
    "inverse": InverseBlock,
    "output": OutputBlock,
}


@dataclass
class ExperimentConfig:
    model: ModelBlock = field(default_factory=ModelBlock)
    solver: SolverBlock = field(default_factory=SolverBlock)
    spectrum: SpectrumBlock = field(default_factory=SpectrumBlock)
    inverse: InverseBlock = field(default_factory=InverseBlock)
    output: OutputBlock = field(default_factory=OutputBlock)

    def __post_init__(self):
        self.validate()

    # -- validation --------------------------------------------------------

    def validate(self):
        m = self.model
        if not (isinstance(m.alpha, (int, float)) and 0 < m.alpha <= 1):
            raise ConfigError(f"model.alpha must lie in (0, 1], got {m.alpha!r}")
        for name in ("theta", "beta"):
            v = getattr(m, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"model.{name} must be a finite number")
        for name in ("p", "r") + KERNEL_NAMES:
            src = getattr(m, name)
            if not isinstance(src, str):
                raise ConfigError(f"model.{name} must be an expression string")
            try:
                parse(src)
            except (ParseError, UnknownIdentifierError) as exc:
                raise ConfigError(f"model.{name}: {exc} (offset {exc.offset})") from exc
            except ExpressionError as exc:
                raise ConfigError(f"model.{name}: {exc}") from exc
        if self.solver.grid_points < 3:
            raise ConfigError("solver.grid_points must be >= 3")
        if self.solver.picard_iterations < 1:
            raise ConfigError("solver.picard_iterations must be >= 1")
        sp = self.spectrum
        if not 1 <= sp.n_lo <= sp.n_hi:
            raise ConfigError(f"need 1 <= spectrum.n_lo <= spectrum.n_hi, got {sp.n_lo}, {sp.n_hi}")
        inv = self.inverse
        if inv.known not in ("L", "pr"):
            raise ConfigError(f"inverse.known must be 'L' or 'pr', got {inv.known!r}")
        if inv.n_max < 1 or inv.smoothing < 0 or inv.degree < 1 or not 0 < inv.window <= 1:
            raise ConfigError("inverse: need n_max >= 1, smoothing >= 0, degree >= 1, 0 < window <= 1")
        bad = set(self.output.formats) - {"csv", "json"}
        if bad:
            raise ConfigError(f"output.formats: unknown format(s) {sorted(bad)}")

    # -- conversion --------------------------------------------------------

    def build_model(self, grid_points: int | None = None) -> Model:
        m = self.model
        return Model.build(m.alpha, m.theta, m.beta, m.p, m.r, m.M11, m.M12, m.M21, m.M22,
                           n_points=grid_points or self.solver.grid_points)

    def to_dict(self) -> dict:
        return {name: asdict(getattr(self, name)) for name in _BLOCKS}

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a table of sections")
        blocks = {}
        for section, values in data.items():
            if section not in _BLOCKS:
                raise ConfigError(f"unknown section [{section}]")
            if not isinstance(values, dict):
                raise ConfigError(f"[{section}] must be a table")
            block_cls = _BLOCKS[section]
            known = {f.name: f for f in fields(block_cls)}
            kwargs = {}
            for key, value in values.items():
                if key not in known:
                    raise ConfigError(f"unknown key {section}.{key}")
                kwargs[key] = _coerce(section, key, value, known[key].type)
            blocks[section] = block_cls(**kwargs)
        return cls(**blocks)

    def to_toml(self) -> str:
        lines = []
        for section, values in self.to_dict().items():
            lines.append(f"[{section}]")
            for key, value in values.items():
                lines.append(f"{key} = {_toml_value(value)}")
            lines.append("")
        return "\n".join(lines)

    @classmethod
    def from_toml(cls, text: str) -> "ExperimentConfig":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config syntax error: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config syntax error: {exc.msg} (at line {exc.lineno}, "
                              f"column {exc.colno})") from exc
        return cls.from_dict(data)


def _coerce(section, key, value, typ):
    typ = typ if isinstance(typ, str) else getattr(typ, "__name__", str(typ))
    where = f"{section}.{key}"
    if typ == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number, got {value!r}")
        return float(value)
    if typ == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer, got {value!r}")
        return value
    if typ == "str":
        if isinstance(value, (int, float)) and not isinstance(value, bool) and section == "model":
            return repr(value)
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string, got {value!r}")
        return value
    if typ == "list":
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ConfigError(f"{where} must be a list of strings")
        return list(value)
    raise ConfigError(f"{where}: unsupported type {typ}")  # pragma: no cover


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return _toml_string(value)
    if isinstance(value, list):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {value!r}")


_TOML_ESCAPES = {'"': '\\"', "\\": "\\\\", "\b": "\\b", "\t": "\\t", "\n": "\\n",
                 "\f": "\\f", "\r": "\\r"}


def _toml_string(text: str) -> str:
    """TOML basic string; control characters (incl. DEL) become \\uXXXX."""
    out = []
    for ch in text:
        if ch in _TOML_ESCAPES:
            out.append(_TOML_ESCAPES[ch])
        elif ord(ch) < 0x20 or ord(ch) == 0x7F:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return '"' + "".join(out) + '"'


def load_config(path) -> ExperimentConfig:
    """Read a TOML (default) or JSON (``.json`` suffix) configuration file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    if path.suffix.lower() == ".json":
        return ExperimentConfig.from_json(text)
    return ExperimentConfig.from_toml(text)
