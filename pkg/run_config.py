"""
Run Configuration
Flat `key = value` run files validated into a RunConfig, plus the builders
that turn a RunConfig into grids, models, integrator settings and initial data
"""

import logging
import math
import os
import re
from tokenize import TokenError
from typing import Callable, Dict, List, Literal, Optional, Tuple

import numpy as np
import sympy as sp
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field as PydanticField, ValidationError, field_validator
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from models import EquationSpec, bo_periodic_soliton
from spectral_core import Field, TorusGrid, make_grid
from timestep import IntegratorConfig

load_dotenv()

logger = logging.getLogger(__name__)

DEFAULT_OUT_DIR = os.getenv("BOLAB_OUT_DIR", "./bolab_output")

IC_KINDS = ("gaussian", "bump", "soliton", "modes", "zero", "sech2")
IC_PARAM_COUNTS = {"gaussian": 3, "bump": 3, "soliton": 2, "zero": 0, "sech2": 3}
COEFFICIENT_KEYS = ("a0", "a1", "a2", "a3", "a4")
ALLOWED_NAMES = {"x", "t", "sin", "cos", "exp", "pi"}

_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_NAME = re.compile(r"[A-Za-z_]\w*")
_ALLOWED_CHARS = re.compile(r"^[\w\s.+\-*/()]*$")

_x, _t = sp.symbols("x t", real=True)
_SYMPY_NAMES = {"x": _x, "t": _t, "sin": sp.sin, "cos": sp.cos, "exp": sp.exp, "pi": sp.pi}


class ConfigError(ValueError):
    """Invalid run configuration; names the key and, when known, its line"""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if key is not None:
            prefix += f"{key}: "
        super().__init__(prefix + message)
        self.key = key
        self.line = line


def _float_list(value):
    if isinstance(value, str):
        value = value.strip()
        if not value:
            return []
        return [float(part) for part in value.split(",")]
    return value


class RunConfig(BaseModel):
    """Validated run file; field aliases are the dotted keys of the file format"""
    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)

    model: Literal["bo", "gbo", "bh", "ilw", "kdv", "general_linear"]
    k: Optional[int] = PydanticField(default=None, ge=2)
    delta: Optional[float] = PydanticField(default=None, gt=0)
    j: Optional[int] = PydanticField(default=None, ge=0, le=4)
    a0: Optional[str] = None
    a1: Optional[str] = None
    a2: Optional[str] = None
    a3: Optional[str] = None
    a4: Optional[str] = None
    b: Optional[str] = None

    grid_n: int = PydanticField(alias="grid.n")
    grid_length: float = PydanticField(alias="grid.length", gt=0)

    time_dt: float = PydanticField(alias="time.dt", gt=0)
    time_t_final: float = PydanticField(alias="time.t_final", ge=0)
    time_stride: int = PydanticField(default=1, alias="time.stride", ge=1)
    time_cfl_safety: float = PydanticField(default=0.5, alias="time.cfl_safety", gt=0, le=1)

    ic_kind: Literal["gaussian", "bump", "soliton", "modes", "zero", "sech2"] = PydanticField(alias="ic.kind")
    ic_params: List[float] = PydanticField(default_factory=list, alias="ic.params")

    out_dir: Optional[str] = PydanticField(default=None, alias="out.dir")

    limits_deltas: List[float] = PydanticField(default_factory=list, alias="limits.deltas")

    probe_interval: List[float] = PydanticField(default_factory=list, alias="probe.interval")
    probe_partner: Literal["hilbert", "ilw_dx"] = PydanticField(default="hilbert", alias="probe.partner")
    probe_x0: float = PydanticField(default=0.0, alias="probe.x0")
    probe_radii: List[float] = PydanticField(default_factory=list, alias="probe.radii")
    probe_tol_zero: float = PydanticField(default=1e-10, alias="probe.tol_zero", gt=0)

    @field_validator("ic_params", "limits_deltas", "probe_interval", "probe_radii", mode="before")
    @classmethod
    def split_lists(cls, value):
        return _float_list(value)


# Canonical key order for format_config
FIELD_KEYS: List[Tuple[str, str]] = [
    (name, info.alias or name) for name, info in RunConfig.model_fields.items()
]
KEY_TO_FIELD = {key: name for name, key in FIELD_KEYS}


def _split_lines(text: str) -> Dict[str, Tuple[str, int]]:
    entries: Dict[str, Tuple[str, int]] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("empty key", line=number)
        if key not in KEY_TO_FIELD:
            raise ConfigError("unknown key", key=key, line=number)
        if key in entries:
            raise ConfigError(f"duplicate key (first set on line {entries[key][1]})", key=key, line=number)
        entries[key] = (value, number)
    return entries


def _location_key(loc) -> Optional[str]:
    if not loc:
        return None
    head = str(loc[0])
    return head if head in KEY_TO_FIELD else dict(FIELD_KEYS).get(head, head)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run file; every error names the key and its line"""
    entries = _split_lines(text)
    try:
        cfg = RunConfig.model_validate({key: value for key, (value, _) in entries.items()})
    except ValidationError as e:
        first = e.errors()[0]
        key = _location_key(first.get("loc"))
        line = entries[key][1] if key in entries else None
        if first.get("type") == "missing":
            raise ConfigError("missing required key", key=key) from None
        raise ConfigError(first.get("msg", "invalid value"), key=key, line=line) from None

    def line_of(key):
        return entries[key][1] if key in entries else None

    _check_cross_fields(cfg, line_of)
    return cfg


def _check_cross_fields(cfg: RunConfig, line_of: Callable[[str], Optional[int]]):
    model_line = line_of("model")
    if cfg.model == "ilw" and cfg.delta is None:
        raise ConfigError("ilw requires delta", key="model", line=model_line)
    if cfg.model == "gbo" and cfg.k is None:
        raise ConfigError("gbo requires k", key="model", line=model_line)
    if cfg.model == "general_linear":
        if cfg.b is None:
            raise ConfigError("general_linear requires b", key="model", line=model_line)
        if cfg.j is None:
            raise ConfigError("general_linear requires j", key="model", line=model_line)
        for key in COEFFICIENT_KEYS + ("b",):
            expression = getattr(cfg, key)
            if expression is not None:
                try:
                    compile_coefficient(expression)
                except ValueError as e:
                    raise ConfigError(str(e), key=key, line=line_of(key)) from None

    try:
        make_grid(cfg.grid_n, cfg.grid_length)
    except ValueError as e:
        raise ConfigError(str(e), key="grid.n", line=line_of("grid.n")) from None

    expected = IC_PARAM_COUNTS.get(cfg.ic_kind)
    count = len(cfg.ic_params)
    if expected is not None and count != expected:
        raise ConfigError(f"ic.kind={cfg.ic_kind} takes {expected} parameters, got {count}",
                          key="ic.params", line=line_of("ic.params") or line_of("ic.kind"))
    if cfg.ic_kind == "modes":
        if count == 0 or count % 3 != 0:
            raise ConfigError("ic.kind=modes takes triples k, a, b", key="ic.params",
                              line=line_of("ic.params") or line_of("ic.kind"))
        if any(not float(k).is_integer() for k in cfg.ic_params[0::3]):
            raise ConfigError("mode numbers must be integers", key="ic.params", line=line_of("ic.params"))
    if cfg.ic_kind in ("gaussian", "bump", "sech2") and cfg.ic_params[2] <= 0:
        raise ConfigError("width must be positive", key="ic.params", line=line_of("ic.params"))
    if cfg.ic_kind == "soliton" and cfg.ic_params[0] <= 0:
        raise ConfigError("soliton speed must be positive", key="ic.params", line=line_of("ic.params"))

    if cfg.limits_deltas and any(d <= 0 for d in cfg.limits_deltas):
        raise ConfigError("deltas must be positive", key="limits.deltas", line=line_of("limits.deltas"))
    if cfg.probe_interval and (len(cfg.probe_interval) != 2 or cfg.probe_interval[0] >= cfg.probe_interval[1]):
        raise ConfigError("interval must be 'a, b' with a < b", key="probe.interval",
                          line=line_of("probe.interval"))
    if cfg.probe_partner == "ilw_dx" and cfg.delta is None:
        raise ConfigError("partner ilw_dx requires delta", key="probe.partner", line=line_of("probe.partner"))


def load_config(path: str) -> RunConfig:
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as handle:
        return parse_config(handle.read())


def _format_value(value) -> str:
    if isinstance(value, list):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_config(cfg: RunConfig) -> str:
    """Print a RunConfig back to the file format (defaults and unset keys omitted)"""
    lines = []
    for name, key in FIELD_KEYS:
        value = getattr(cfg, name)
        if value is None or name not in cfg.model_fields_set:
            continue
        lines.append(f"{key} = {_format_value(value)}")
    return "\n".join(lines) + "\n"


def compile_coefficient(expression: str) -> Callable[[np.ndarray, float], np.ndarray]:
    """Turn an expression in x, t (+ - * / sin cos exp pi, numbers) into a numpy function"""
    if not expression or not expression.strip():
        raise ValueError("empty coefficient expression")
    if not _ALLOWED_CHARS.match(expression):
        raise ValueError(f"unsupported character in coefficient {expression!r}")
    names = set(_NAME.findall(_NUMBER.sub(" ", expression)))
    unknown = names - ALLOWED_NAMES
    if unknown:
        raise ValueError(f"unknown name(s) {sorted(unknown)} in coefficient {expression!r}")
    try:
        parsed = parse_expr(expression, local_dict=dict(_SYMPY_NAMES), transformations=standard_transformations)
    except (SyntaxError, TypeError, TokenError, sp.SympifyError) as e:
        raise ValueError(f"cannot parse coefficient {expression!r}: {e}") from None
    if not isinstance(parsed, sp.Expr) or parsed.free_symbols - {_x, _t}:
        raise ValueError(f"coefficient {expression!r} is not an expression in x and t")
    function = sp.lambdify((_x, _t), parsed, "numpy")

    def coefficient(x, t):
        return np.broadcast_to(np.asarray(function(x, t), dtype=np.float64), np.shape(x))

    coefficient.expression = expression
    return coefficient


def build_grid(cfg: RunConfig) -> TorusGrid:
    return make_grid(cfg.grid_n, cfg.grid_length)


def build_spec(cfg: RunConfig) -> EquationSpec:
    if cfg.model == "bo":
        return EquationSpec.bo()
    if cfg.model == "gbo":
        return EquationSpec.gbo(cfg.k)
    if cfg.model == "bh":
        return EquationSpec.bh()
    if cfg.model == "ilw":
        return EquationSpec.ilw(cfg.delta)
    if cfg.model == "kdv":
        return EquationSpec.kdv(cfg.k or 2)

    given = [getattr(cfg, key) for key in COEFFICIENT_KEYS]
    highest = max((m for m, expression in enumerate(given) if expression is not None), default=-1)
    a = tuple(compile_coefficient(given[m] or "0") for m in range(highest + 1))
    return EquationSpec.general_linear(cfg.j, a, compile_coefficient(cfg.b))


def build_integrator(cfg: RunConfig) -> IntegratorConfig:
    return IntegratorConfig(dt=cfg.time_dt, t_final=cfg.time_t_final, scheme="IFRK4",
                            snapshot_stride=cfg.time_stride, cfl_safety=cfg.time_cfl_safety)


def bump_profile(x: np.ndarray, amplitude: float = 1.0, center: float = 0.0, radius: float = 1.0) -> np.ndarray:
    """Smooth compactly supported bump, equal to amplitude at the center"""
    s = (x - center) / radius
    inside = np.abs(s) < 1.0
    out = np.zeros_like(x, dtype=np.float64)
    out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def build_initial_field(cfg: RunConfig, grid: Optional[TorusGrid] = None) -> Field:
    """Initial datum described by ic.kind and ic.params"""
    grid = grid or build_grid(cfg)
    x = grid.points
    p = cfg.ic_params
    kind = cfg.ic_kind
    if kind == "zero":
        return Field(grid, np.zeros(grid.n))
    if kind == "gaussian":
        amplitude, center, width = p
        return Field(grid, amplitude * np.exp(-((x - center) / width) ** 2))
    if kind == "sech2":
        amplitude, center, width = p
        return Field(grid, amplitude / np.cosh((x - center) / width) ** 2)
    if kind == "bump":
        amplitude, center, radius = p
        return Field(grid, bump_profile(x, amplitude, center, radius))
    if kind == "soliton":
        c, center = p
        return bo_periodic_soliton(grid, c, center)

    samples = np.zeros(grid.n)
    for k, a, b in zip(p[0::3], p[1::3], p[2::3]):
        phase = 2.0 * math.pi * k * x / grid.length
        samples += a * np.cos(phase) + b * np.sin(phase)
    return Field(grid, samples)


def output_dir(cfg: RunConfig) -> str:
    return cfg.out_dir or DEFAULT_OUT_DIR
