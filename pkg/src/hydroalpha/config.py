"""
Run configuration: TOML sections, validation and a canonical serialization.

Sections and keys (every key optional)::

    [grid]    Nx, Nz, Lx
    [model]   alpha1, a, lambda_override, R_weight, c_small, C3, n_modes, n_cut
    [time]    dt, T_final, snapshot_stride, monitor_stride
    [init]    modes = [[kx, k, re, im], ...]   or   file = "snapshot.txt"
    [flags]   disable_nonlinear, forcing_file, seed
    [output]  directory, formats

Key names are unique across sections, so a key may also be written at the
top level and is then filed under its section.  An init mode
``[kx, k, re, im]`` contributes Re((re + i im) e^{i kx x}) e~_k(z).
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import tomli
import tomli_w

from .errors import ConfigError
from .model import ModelParams

__all__ = [
    "ConfigError",
    "GridConfig",
    "ModelConfig",
    "TimeConfig",
    "InitConfig",
    "FlagsConfig",
    "OutputConfig",
    "RunConfig",
    "FORMATS",
    "parse_config",
    "load_config",
    "serialize_config",
    "config_hash",
]

FORMATS = ("csv", "json", "snapshots")
DEFAULT_MODES = ((1, 2, 0.01, 0.0),)


@dataclass(frozen=True)
class GridConfig:
    Nx: int = 64
    Nz: int = 48
    Lx: float = 2.0 * math.pi


@dataclass(frozen=True)
class ModelConfig:
    alpha1: float = 1.0
    a: float = 0.1
    lambda_override: float | None = None
    R_weight: float | None = None
    c_small: float = 1.0
    C3: float = 1.0
    n_modes: int = 16
    n_cut: int | None = None


@dataclass(frozen=True)
class TimeConfig:
    dt: float = 1e-3
    T_final: float = 2.0
    snapshot_stride: int = 100
    monitor_stride: int = 1


@dataclass(frozen=True)
class InitConfig:
    """Either ``modes`` or ``file``; the default is the small single-mode datum."""

    modes: tuple | None = DEFAULT_MODES
    file: str | None = None


@dataclass(frozen=True)
class FlagsConfig:
    disable_nonlinear: bool = False
    forcing_file: str | None = None
    seed: int = 0


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    formats: tuple = FORMATS


@dataclass(frozen=True)
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    init: InitConfig = field(default_factory=InitConfig)
    flags: FlagsConfig = field(default_factory=FlagsConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def model_params(self) -> ModelParams:
        m = self.model
        return ModelParams(
            alpha1=m.alpha1, a=m.a, lam=m.lambda_override, R_weight=m.R_weight,
            c_small=m.c_small, C3=m.C3, n_modes=m.n_modes, n_cut=m.n_cut,
        )

    def with_overrides(self, dt: float | None = None, T_final: float | None = None,
                       directory: str | None = None) -> "RunConfig":
        time = self.time
        if dt is not None:
            time = replace(time, dt=float(dt))
        if T_final is not None:
            time = replace(time, T_final=float(T_final))
        out = self.output if directory is None else replace(self.output, directory=directory)
        cfg = replace(self, time=time, output=out)
        _validate(cfg, {})
        return cfg


_SECTIONS = {
    "grid": GridConfig,
    "model": ModelConfig,
    "time": TimeConfig,
    "init": InitConfig,
    "flags": FlagsConfig,
    "output": OutputConfig,
}
_KEY_SECTION = {f.name: sec for sec, cls in _SECTIONS.items() for f in fields(cls)}


def _line_of(text: str, key: str, section: str | None = None) -> int | None:
    """1-based line where ``key`` is assigned, preferring its section."""
    current = None
    first = None
    pat = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for n, line in enumerate(text.splitlines(), start=1):
        head = re.match(r"^\s*\[([^\]]+)\]", line)
        if head:
            current = head.group(1).strip()
            continue
        if pat.match(line):
            if current == section:
                return n
            if first is None:
                first = n
    return first


def _section_line(text: str, section: str) -> int | None:
    pat = re.compile(rf"^\s*\[\s*{re.escape(section)}\s*\]")
    for n, line in enumerate(text.splitlines(), start=1):
        if pat.match(line):
            return n
    return None


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _coerce(sec: str, key: str, v, line):
    """Type-check one raw TOML value into the dataclass field type."""
    name = f"{sec}.{key}"
    ints = {"Nx", "Nz", "n_modes", "n_cut", "snapshot_stride", "monitor_stride", "seed"}
    floats = {"Lx", "alpha1", "a", "lambda_override", "R_weight", "c_small", "C3", "dt",
              "T_final"}
    strs = {"file", "forcing_file", "directory"}
    if key in ints:
        if not _is_int(v):
            raise ConfigError(f"{name} must be an integer, got {v!r}", line)
        return int(v)
    if key in floats:
        if not _is_num(v):
            raise ConfigError(f"{name} must be a number, got {v!r}", line)
        return float(v)
    if key in strs:
        if not isinstance(v, str):
            raise ConfigError(f"{name} must be a string, got {v!r}", line)
        return v
    if key == "disable_nonlinear":
        if not isinstance(v, bool):
            raise ConfigError(f"{name} must be true or false, got {v!r}", line)
        return v
    if key == "formats":
        if not isinstance(v, list) or not all(isinstance(x, str) for x in v):
            raise ConfigError(f"{name} must be a list of strings", line)
        return tuple(v)
    if key == "modes":
        if not isinstance(v, list):
            raise ConfigError(f"{name} must be a list of [kx, k, re, im] entries", line)
        out = []
        for i, m in enumerate(v):
            if (not isinstance(m, list) or len(m) != 4 or not _is_int(m[0]) or not _is_int(m[1])
                    or not _is_num(m[2]) or not _is_num(m[3])):
                raise ConfigError(f"{name}[{i}] must be [kx:int, k:int, re, im], got {m!r}", line)
            out.append((int(m[0]), int(m[1]), float(m[2]), float(m[3])))
        return tuple(out)
    raise ConfigError(f"unknown key {name}", line)


def _check(cond: bool, name: str, msg: str, lines: dict):
    if not cond:
        raise ConfigError(f"{name} {msg}", lines.get(name))


def _validate(cfg: RunConfig, lines: dict) -> None:
    g, m, t, i, fl, o = cfg.grid, cfg.model, cfg.time, cfg.init, cfg.flags, cfg.output
    _check(g.Nx >= 8 and g.Nx % 2 == 0, "grid.Nx", f"must be even and >= 8, got {g.Nx}", lines)
    _check(g.Nz >= 8, "grid.Nz", f"must be >= 8, got {g.Nz}", lines)
    _check(math.isfinite(g.Lx) and g.Lx > 0, "grid.Lx", f"must be positive, got {g.Lx}", lines)
    for key in ("alpha1", "a", "c_small", "C3"):
        val = getattr(m, key)
        _check(math.isfinite(val) and val > 0, f"model.{key}", f"must be positive, got {val}",
               lines)
    if m.lambda_override is not None:
        _check(m.lambda_override > 0, "model.lambda_override",
               f"must be positive, got {m.lambda_override}", lines)
    if m.R_weight is not None:
        _check(m.R_weight >= 0, "model.R_weight", f"must be non-negative, got {m.R_weight}",
               lines)
    _check(1 <= m.n_modes <= g.Nz - 6, "model.n_modes",
           f"must lie in 1..Nz-6 = {g.Nz - 6}, got {m.n_modes}", lines)
    if m.n_cut is not None:
        _check(1 <= m.n_cut <= g.Nx // 2, "model.n_cut",
               f"must lie in 1..Nx/2 = {g.Nx // 2}, got {m.n_cut}", lines)
    _check(math.isfinite(t.dt) and t.dt > 0, "time.dt", f"must be positive, got {t.dt}", lines)
    _check(math.isfinite(t.T_final) and t.T_final >= 0, "time.T_final",
           f"must be non-negative, got {t.T_final}", lines)
    _check(t.snapshot_stride >= 1, "time.snapshot_stride",
           f"must be >= 1, got {t.snapshot_stride}", lines)
    _check(t.monitor_stride >= 1, "time.monitor_stride",
           f"must be >= 1, got {t.monitor_stride}", lines)
    _check((i.modes is None) != (i.file is None), "init.modes",
           "and init.file are mutually exclusive; give exactly one", lines)
    if i.modes is not None:
        for kx, k, _, _ in i.modes:
            _check(1 <= k <= m.n_modes, "init.modes",
                   f"basis index {k} outside 1..n_modes = {m.n_modes}", lines)
            _check(abs(kx) <= g.Nx // 2 - 1, "init.modes",
                   f"wavenumber {kx} outside |kx| <= Nx/2 - 1 = {g.Nx // 2 - 1}", lines)
    if i.file is not None:
        _check(Path(i.file).is_file(), "init.file", f"does not exist: {i.file}", lines)
    if fl.forcing_file is not None:
        _check(Path(fl.forcing_file).is_file(), "flags.forcing_file",
               f"does not exist: {fl.forcing_file}", lines)
    bad = [f for f in o.formats if f not in FORMATS]
    _check(not bad, "output.formats", f"has unknown entries {bad}; allowed {list(FORMATS)}",
           lines)


def parse_config(text: str) -> RunConfig:
    """Parse and validate TOML configuration text.

    Raises
    ------
    ConfigError
        On malformed TOML, unknown sections or keys, wrong types, or invalid
        values; the message names the offending field and, where it can be
        located, the line.
    """
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"malformed configuration: {exc}",
                          int(m.group(1)) if m else None) from None

    sections: dict = {sec: {} for sec in _SECTIONS}
    lines: dict = {}
    for key, val in raw.items():
        if isinstance(val, dict):
            if key not in _SECTIONS:
                raise ConfigError(f"unknown section [{key}]", _section_line(text, key))
            for sub, v in val.items():
                line = _line_of(text, sub, key)
                if _KEY_SECTION.get(sub) != key:
                    raise ConfigError(f"unknown key {key}.{sub}", line)
                if sub in sections[key]:
                    raise ConfigError(f"{key}.{sub} given twice", line)
                sections[key][sub] = _coerce(key, sub, v, line)
                lines[f"{key}.{sub}"] = line
        else:
            line = _line_of(text, key)
            sec = _KEY_SECTION.get(key)
            if sec is None:
                raise ConfigError(f"unknown key {key}", line)
            if key in sections[sec]:
                raise ConfigError(f"{sec}.{key} given twice", line)
            sections[sec][key] = _coerce(sec, key, val, line)
            lines[f"{sec}.{key}"] = line

    init = sections["init"]
    if "file" in init and "modes" not in init:
        init["modes"] = None
    cfg = RunConfig(**{sec: cls(**sections[sec]) for sec, cls in _SECTIONS.items()})
    _validate(cfg, lines)
    return cfg


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc.strerror}") from None
    return parse_config(text)


def _to_toml_value(v):
    if isinstance(v, tuple):
        return [_to_toml_value(x) for x in v]
    return v


def serialize_config(cfg: RunConfig) -> str:
    """Canonical TOML text; ``parse_config(serialize_config(c)) == c``.

    Unset optional values are omitted, so they parse back to None.
    """
    doc = {}
    for sec in _SECTIONS:
        body = {}
        for key, v in asdict(getattr(cfg, sec)).items():
            if v is None:
                continue
            body[key] = _to_toml_value(v)
        doc[sec] = body
    return tomli_w.dumps(doc)


def config_hash(cfg: RunConfig) -> str:
    """sha256 of the canonical serialization, output directory excluded.

    Runs differing only in where they write produce byte-identical files.
    """
    anon = replace(cfg, output=replace(cfg.output, directory=""))
    return hashlib.sha256(serialize_config(anon).encode()).hexdigest()
