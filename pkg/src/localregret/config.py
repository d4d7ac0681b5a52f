"""Flat ``key = value`` experiment configuration.

Grammar (one assignment per line, ``#`` starts a comment)::

    run_id        = demo              # string
    horizon       = 1000              # integer
    x0            = 0.1, -0.2         # vector: comma-separated reals
    loss.centers  = 0, 0; 1, 1        # vector list: vectors separated by ';'
    meters        = hazan, calibration   # name list (may be empty)

Known keys and their defaults are listed in ``KEYS``. A ``scenario`` of 1, 2
or 3 fills in the schedule, window and set kinds that scenario needs and
rejects explicit values that contradict them.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ConfigError, LocalRegretError
from .geometry import AllSpace, Ball, Box, FeasibleSet
from .losses import DriftingSine, LossSpec, SwitchingQuadratic
from .optimizer import Constant, InverseSqrt
from .regret import METERS, ConstantW, Growing

Vector = tuple[float, ...]

LOSS_KINDS = ("drifting_sine", "switching_quadratic")
SET_KINDS = ("all_space", "ball", "box")
SCHEDULE_KINDS = ("constant", "inverse_sqrt")
WINDOW_KINDS = ("constant", "growing")

SCENARIO_FORCES = {
    1: {"schedule_kind": "constant", "window_kind": "constant", "set_kind": "all_space"},
    2: {"schedule_kind": "inverse_sqrt", "window_kind": "growing"},
    3: {"schedule_kind": "inverse_sqrt", "window_kind": "constant"},
}
RESOLVED_DEFAULTS = {"schedule_kind": "inverse_sqrt", "window_kind": "constant", "set_kind": "all_space"}


@dataclass(frozen=True)
class ExperimentConfig:
    run_id: str
    horizon: int
    x0: Vector
    loss_kind: str
    schedule_eta: float
    seed: int = 0
    meters: tuple[str, ...] = ("proposed_interior",)
    scenario: int | None = None
    loss_a: float = 0.0
    loss_b: float = 1.0
    loss_drift: Vector | None = None
    loss_c0: Vector | None = None
    loss_centers: tuple[Vector, ...] | None = None
    loss_period: int = 1
    set_kind: str | None = None
    set_center: Vector | None = None
    set_radius: float | None = None
    set_lower: Vector | None = None
    set_upper: Vector | None = None
    schedule_kind: str | None = None
    window_kind: str | None = None
    window_w: int = 1
    directional_u: Vector | None = None
    calibration_radius: float = 1.0
    standard_grid: int = 401
    verify_draws: int = 10_000

    @property
    def dim(self) -> int:
        return len(self.x0)


# dotted key -> (field name, value type)
KEYS = {
    "run_id": ("run_id", "str"),
    "horizon": ("horizon", "int"),
    "x0": ("x0", "vector"),
    "seed": ("seed", "int"),
    "meters": ("meters", "names"),
    "scenario": ("scenario", "int"),
    "loss.kind": ("loss_kind", "str"),
    "loss.a": ("loss_a", "float"),
    "loss.b": ("loss_b", "float"),
    "loss.drift": ("loss_drift", "vector"),
    "loss.c0": ("loss_c0", "vector"),
    "loss.centers": ("loss_centers", "vectors"),
    "loss.period": ("loss_period", "int"),
    "set.kind": ("set_kind", "str"),
    "set.center": ("set_center", "vector"),
    "set.radius": ("set_radius", "float"),
    "set.lower": ("set_lower", "vector"),
    "set.upper": ("set_upper", "vector"),
    "schedule.kind": ("schedule_kind", "str"),
    "schedule.eta": ("schedule_eta", "float"),
    "window.kind": ("window_kind", "str"),
    "window.w": ("window_w", "int"),
    "directional.u": ("directional_u", "vector"),
    "calibration.radius": ("calibration_radius", "float"),
    "standard.grid": ("standard_grid", "int"),
    "verify.draws": ("verify_draws", "int"),
}
REQUIRED = ("run_id", "horizon", "x0", "loss.kind", "schedule.eta")


def _parse_value(kind: str, raw: str):
    if kind == "str":
        if not raw:
            raise ValueError("empty value")
        return raw
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "vector":
        return tuple(float(p) for p in raw.split(","))
    if kind == "vectors":
        return tuple(tuple(float(p) for p in chunk.split(",")) for chunk in raw.split(";"))
    if kind == "names":
        return tuple(p.strip() for p in raw.split(",") if p.strip())
    raise AssertionError(kind)


def _format_value(kind: str, value) -> str:
    if kind in ("str", "int"):
        return str(value)
    if kind == "float":
        return repr(float(value))
    if kind == "vector":
        return ", ".join(repr(float(v)) for v in value)
    if kind == "vectors":
        return "; ".join(", ".join(repr(float(v)) for v in vec) for vec in value)
    if kind == "names":
        return ", ".join(value)
    raise AssertionError(kind)


def parse_config(text: str) -> ExperimentConfig:
    values: dict = {}
    lines: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError("unknown key", key=key, line=lineno)
        if key in lines:
            raise ConfigError(f"duplicate key (first set on line {lines[key]})", key=key, line=lineno)
        name, kind = KEYS[key]
        try:
            values[name] = _parse_value(kind, raw)
        except ValueError as exc:
            raise ConfigError(f"cannot parse {kind} value {raw!r}: {exc}", key=key, line=lineno) from None
        lines[key] = lineno
    for key in REQUIRED:
        if KEYS[key][0] not in values:
            raise ConfigError("required key missing", key=key)
    return _resolve(values, lines)


def _resolve(values: dict, lines: dict) -> ExperimentConfig:
    scenario = values.get("scenario")
    if scenario is not None:
        if scenario not in SCENARIO_FORCES:
            raise ConfigError("scenario must be 1, 2 or 3", key="scenario", line=lines.get("scenario"))
        for name, forced in SCENARIO_FORCES[scenario].items():
            given = values.get(name)
            if given is not None and given != forced:
                key = name.replace("_", ".", 1)
                raise ConfigError(
                    f"scenario {scenario} requires {key} = {forced}, got {given}",
                    key=key,
                    line=lines.get(key),
                )
            values[name] = forced
    for name, default in RESOLVED_DEFAULTS.items():
        values.setdefault(name, default)
    cfg = ExperimentConfig(**values)
    validate(cfg, lines)
    return cfg


def validate(cfg: ExperimentConfig, lines: dict | None = None) -> None:
    """Raise ``ConfigError`` naming the offending key if ``cfg`` cannot be built."""
    lines = lines or {}

    def fail(key, msg):
        raise ConfigError(msg, key=key, line=lines.get(key))

    if not re.fullmatch(r"[A-Za-z0-9._-]+", cfg.run_id):
        fail("run_id", "use only letters, digits, '.', '_' and '-'")
    if cfg.horizon < 1:
        fail("horizon", "horizon must be >= 1")
    if cfg.loss_kind not in LOSS_KINDS:
        fail("loss.kind", f"must be one of {', '.join(LOSS_KINDS)}")
    if cfg.set_kind not in SET_KINDS:
        fail("set.kind", f"must be one of {', '.join(SET_KINDS)}")
    if cfg.schedule_kind not in SCHEDULE_KINDS:
        fail("schedule.kind", f"must be one of {', '.join(SCHEDULE_KINDS)}")
    if cfg.window_kind not in WINDOW_KINDS:
        fail("window.kind", f"must be one of {', '.join(WINDOW_KINDS)}")
    for meter in cfg.meters:
        if meter not in METERS:
            fail("meters", f"unknown meter {meter!r}; known: {', '.join(METERS)}")
    if "hazan" in cfg.meters and cfg.window_kind != "constant":
        fail("window.kind", "the hazan meter needs a constant window width")
    if cfg.directional_u is not None and len(cfg.directional_u) != cfg.dim:
        fail("directional.u", "dimension differs from x0")
    if cfg.loss_centers is not None and len({len(c) for c in cfg.loss_centers}) != 1:
        fail("loss.centers", "all centers need the same dimension")
    for key, builder in (
        ("loss.kind", build_loss),
        ("set.kind", build_set),
        ("schedule.eta", build_schedule),
        ("window.w", build_window),
    ):
        try:
            obj = builder(cfg)
        except ConfigError:
            raise
        except (LocalRegretError, ValueError, TypeError) as exc:
            fail(key, str(exc))
        if hasattr(obj, "dim") and obj.dim != cfg.dim:
            fail(key, f"dimension {obj.dim} differs from x0 dimension {cfg.dim}")


def build_loss(cfg: ExperimentConfig) -> LossSpec:
    if cfg.loss_kind == "drifting_sine":
        zeros = (0.0,) * cfg.dim
        return DriftingSine(
            a=cfg.loss_a,
            b=cfg.loss_b,
            drift=np.array(cfg.loss_drift or zeros),
            c0=np.array(cfg.loss_c0 or zeros),
        )
    if cfg.loss_centers is None:
        raise ConfigError("switching_quadratic needs loss.centers", key="loss.centers")
    return SwitchingQuadratic(centers=np.array(cfg.loss_centers), period=cfg.loss_period)


def build_set(cfg: ExperimentConfig) -> FeasibleSet:
    if cfg.set_kind == "all_space":
        return AllSpace(cfg.dim)
    if cfg.set_kind == "ball":
        if cfg.set_radius is None:
            raise ConfigError("ball needs set.radius", key="set.radius")
        center = cfg.set_center if cfg.set_center is not None else (0.0,) * cfg.dim
        return Ball(np.array(center), cfg.set_radius)
    if cfg.set_lower is None or cfg.set_upper is None:
        raise ConfigError("box needs set.lower and set.upper", key="set.lower")
    return Box(np.array(cfg.set_lower), np.array(cfg.set_upper))


def build_schedule(cfg: ExperimentConfig):
    cls = Constant if cfg.schedule_kind == "constant" else InverseSqrt
    return cls(cfg.schedule_eta)


def build_window(cfg: ExperimentConfig):
    return Growing() if cfg.window_kind == "growing" else ConstantW(cfg.window_w)


def dump_config(cfg: ExperimentConfig) -> str:
    """Serialize every non-default field; ``parse_config`` inverts this."""
    out = []
    for key, (name, kind) in KEYS.items():
        value = getattr(cfg, name)
        default = ExperimentConfig.__dataclass_fields__[name].default
        if value is None or (key not in REQUIRED and value == default and name not in RESOLVED_DEFAULTS):
            continue
        out.append(f"{key} = {_format_value(kind, value)}".rstrip())
    return "\n".join(out) + "\n"


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def with_seed(cfg: ExperimentConfig, seed: int | None) -> ExperimentConfig:
    return cfg if seed is None else dataclasses.replace(cfg, seed=seed)
