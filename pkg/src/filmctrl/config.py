"""Plain-text configuration: one ``key = value`` per line, ``#`` comments.

Keys are dotted paths (``parameters.reynolds``, ``grid.n``, ...). Unknown
keys are errors; values are validated with the offending key named in the
message. ``write_config`` emits a canonical form that round-trips exactly
through ``parse_config``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .flow import PRESETS, FlowParameters, preset_parameters

_MODELS = ("benney", "wr")


def _float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


@dataclass
class RunConfig:
    """Fully resolved configuration shared by every CLI subcommand."""

    # parameters
    preset: str = ""
    reynolds: float = 5.0
    capillary: float = 0.05
    theta: float = math.pi / 3
    aspect: float = 30.0
    # grid
    n: int = 256
    # actuators
    count: int = 5
    width: float = 0.1
    # control
    design_model: str = "benney"
    controlled_model: str = "wr"
    beta: float = 0.5
    activation_time: float = 0.0
    # solver
    dt: float = 0.05
    newton_tol: float = 1e-10
    newton_max_iter: int = 25
    blowup_threshold: float = 10.0
    # simulation
    t_spin: float = 200.0
    t_end: float = 500.0
    initial_amplitude: float = 0.01
    initial_mode: int = 1  # 0 selects the seeded multi-mode start
    seed: int = 0
    # sweep (min-actuators)
    re_values: list = field(default_factory=lambda: [1.0, 5.0])
    ca_values: list = field(default_factory=lambda: [0.05])
    m_max: int = 8
    # output
    every: int = 0  # snapshot cadence in steps; 0 disables snapshots

    def parameters(self) -> FlowParameters:
        # presets resolve reynolds/capillary at parse time, so the resolved
        # fields are authoritative here
        return FlowParameters(self.reynolds, self.capillary, self.theta, self.aspect)


#: key path -> (attribute, parser, validator, description)
_SCHEMA = {
    "parameters.preset": ("preset", str, lambda v: v == "" or v in PRESETS,
                          f"one of {sorted(PRESETS)}"),
    "parameters.reynolds": ("reynolds", float, lambda v: v > 0, "positive"),
    "parameters.capillary": ("capillary", float, lambda v: v > 0, "positive"),
    "parameters.theta": ("theta", float, lambda v: 0 < v < math.pi / 2, "in (0, pi/2)"),
    "parameters.aspect": ("aspect", float, lambda v: v > 0, "positive"),
    "grid.n": ("n", int, lambda v: v >= 8 and v % 2 == 0, "even and >= 8"),
    "actuators.count": ("count", int, lambda v: v >= 1, ">= 1"),
    "actuators.width": ("width", float, lambda v: v > 0, "positive"),
    "control.design_model": ("design_model", str, lambda v: v in _MODELS,
                             f"one of {_MODELS}"),
    "control.controlled_model": ("controlled_model", str, lambda v: v in _MODELS,
                                 f"one of {_MODELS}"),
    "control.beta": ("beta", float, lambda v: 0 < v < 1, "in (0, 1)"),
    "control.activation_time": ("activation_time", float, lambda v: v >= 0, ">= 0"),
    "solver.dt": ("dt", float, lambda v: v > 0, "positive"),
    "solver.newton_tol": ("newton_tol", float, lambda v: v > 0, "positive"),
    "solver.newton_max_iter": ("newton_max_iter", int, lambda v: v >= 1, ">= 1"),
    "solver.blowup_threshold": ("blowup_threshold", float, lambda v: v > 1, "> 1"),
    "simulation.t_spin": ("t_spin", float, lambda v: v >= 0, ">= 0"),
    "simulation.t_end": ("t_end", float, lambda v: v > 0, "positive"),
    "simulation.initial_amplitude": ("initial_amplitude", float, lambda v: v > 0, "positive"),
    "simulation.initial_mode": ("initial_mode", int, lambda v: v >= 0, ">= 0"),
    "simulation.seed": ("seed", int, lambda v: v >= 0, ">= 0"),
    "sweep.re_values": ("re_values", _float_list,
                        lambda v: len(v) > 0 and all(x > 0 for x in v),
                        "non-empty positive list"),
    "sweep.ca_values": ("ca_values", _float_list,
                        lambda v: len(v) > 0 and all(x > 0 for x in v),
                        "non-empty positive list"),
    "sweep.m_max": ("m_max", int, lambda v: v >= 1, ">= 1"),
    "output.every": ("every", int, lambda v: v >= 0, ">= 0"),
}

_ATTR_TO_KEY = {attr: key for key, (attr, *_rest) in _SCHEMA.items()}


def set_key(config: RunConfig, key: str, raw: str, line: int | None = None) -> None:
    """Parse and validate one key/value pair into the config."""
    if key not in _SCHEMA:
        raise ConfigError("unknown configuration key", key=key, line=line)
    attr, parser, validator, expected = _SCHEMA[key]
    raw = raw.strip().strip('"').strip("'")
    try:
        value = parser(raw)
    except ValueError:
        raise ConfigError(f"cannot parse value {raw!r}", key=key, line=line) from None
    if not validator(value):
        raise ConfigError(f"value {value!r} is invalid; expected {expected}",
                          key=key, line=line)
    setattr(config, attr, value)


def parse_config(text: str) -> RunConfig:
    """Parse configuration text; defaults apply to every omitted key."""
    config = RunConfig()
    preset_line = None
    assignments = []
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        if key == "parameters.preset":
            preset_line = (key, value, lineno)
        else:
            assignments.append((key, value, lineno))
    # the preset resolves first so explicit parameter keys can override it
    if preset_line is not None:
        set_key(config, *preset_line)
        if config.preset:
            params = preset_parameters(config.preset, config.aspect)
            config.reynolds = params.reynolds
            config.capillary = params.capillary
    for key, value, lineno in assignments:
        set_key(config, key, value, lineno)
    return config


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def write_config(config: RunConfig) -> str:
    """Canonical text form; parse(write(c)) == c and write is idempotent."""
    lines = []
    for key in _SCHEMA:
        attr = _SCHEMA[key][0]
        value = getattr(config, attr)
        if key == "parameters.preset" and not value:
            continue
        lines.append(f"{key} = {_format_value(value)}")
    return "\n".join(lines) + "\n"


def config_hash(config: RunConfig) -> str:
    """Stable digest of the resolved configuration for provenance headers."""
    return hashlib.sha256(write_config(config).encode()).hexdigest()[:16]


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
