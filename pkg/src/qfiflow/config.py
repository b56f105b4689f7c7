"""Scenario configuration: a flat ``key = value`` text format with dotted keys.

Example::

    # weak coupling run
    model = damped_jc
    model.W = 0.3
    model.lambda = 1.0
    model.phi = 0.0
    time.t_max = 10
    time.dt = 0.001
    stepper = fixed_rk4
    report.M = 1,10,100
    sweep.param = W
    sweep.values = 0.3,3.0

Blank lines and ``#`` comments are ignored. ``parse_config`` reports every
violation it finds, not just the first one.
"""

import math
from dataclasses import dataclass, fields, replace

from .errors import RangeError, SchemaError

MODELS = ("damped_jc", "markov_control", "custom_generator")
STEPPERS = ("fixed_rk4", "halving")
SWEEPABLE = ("W", "lambda", "phi", "gamma0", "t_max", "dt")
JUMP_NAMES = ("sigma_minus", "sigma_plus", "sigma_x", "sigma_y", "sigma_z")


@dataclass(frozen=True)
class ChannelSpec:
    """Constant jump operator with rate ``offset + amplitude * cos(frequency * t)``."""

    operator: str
    offset: float
    amplitude: float = 0.0
    frequency: float = 0.0

    def rate(self, t):
        return self.offset + self.amplitude * math.cos(self.frequency * t)

    def render(self):
        if self.amplitude == 0.0 and self.frequency == 0.0:
            return f"{self.operator}:{self.offset!r}"
        return f"{self.operator}:{self.offset!r}:{self.amplitude!r}:{self.frequency!r}"


@dataclass(frozen=True)
class ScenarioConfig:
    model: str = "damped_jc"
    t_max: float = 10.0
    W: float | None = None
    lam: float | None = None
    phi: float = 0.0
    gamma0: float | None = None
    dt: float | None = None
    stepper: str = "fixed_rk4"
    tol: float = 1e-10
    hamiltonian: tuple = (0.0, 0.0, 0.0)
    channels: tuple = ()
    outputs: tuple = ()
    M_values: tuple = (1,)
    witness_eps: float | None = None
    sweep_param: str | None = None
    sweep_values: tuple = ()

    @property
    def effective_dt(self):
        if self.dt is not None:
            return self.dt
        if self.model == "damped_jc" and self.lam:
            return 1e-3 / self.lam
        return 1e-3 * self.t_max

    def with_param(self, name, value):
        """Copy with one sweepable parameter replaced (sweep settings cleared)."""
        attr = "lam" if name == "lambda" else name
        return replace(self, **{attr: value, "sweep_param": None, "sweep_values": ()})

    def sweep_plan(self):
        if self.sweep_param is None:
            return [self]
        return [self.with_param(self.sweep_param, v) for v in self.sweep_values]


# key -> (attribute, kind)
_KEYS = {
    "model": ("model", "str"),
    "model.W": ("W", "float"),
    "model.lambda": ("lam", "float"),
    "model.phi": ("phi", "float"),
    "model.gamma0": ("gamma0", "float"),
    "custom.hamiltonian": ("hamiltonian", "floats3"),
    "custom.channels": ("channels", "channels"),
    "time.t_max": ("t_max", "float"),
    "time.dt": ("dt", "float"),
    "stepper": ("stepper", "str"),
    "stepper.tol": ("tol", "float"),
    "outputs": ("outputs", "strs"),
    "report.M": ("M_values", "ints"),
    "witness.eps": ("witness_eps", "float"),
    "sweep.param": ("sweep_param", "str"),
    "sweep.values": ("sweep_values", "floats"),
}
_ATTR_TO_KEY = {attr: key for key, (attr, _) in _KEYS.items()}


def _split_list(text):
    return [item.strip() for item in text.split(",") if item.strip()]


def _parse_channel(text):
    parts = [p.strip() for p in text.split(":")]
    if len(parts) not in (2, 4) or parts[0] not in JUMP_NAMES:
        raise ValueError(f"bad channel spec {text!r} (expected op:rate or op:offset:amplitude:frequency)")
    return ChannelSpec(parts[0], *(float(p) for p in parts[1:]))


def _convert(kind, raw):
    if kind == "str":
        return raw
    if kind == "float":
        return float(raw)
    if kind == "floats":
        return tuple(float(x) for x in _split_list(raw))
    if kind == "floats3":
        vals = tuple(float(x) for x in _split_list(raw))
        if len(vals) != 3:
            raise ValueError("expected three numbers")
        return vals
    if kind == "ints":
        out = []
        for x in _split_list(raw):
            v = float(x)
            if v != int(v):
                raise ValueError(f"{x!r} is not an integer")
            out.append(int(v))
        return tuple(out)
    if kind == "strs":
        return tuple(_split_list(raw))
    if kind == "channels":
        return tuple(_parse_channel(c) for c in _split_list(raw))
    raise AssertionError(kind)


def parse_config(text, overrides=None):
    """Parse and validate configuration text.

    ``overrides`` maps attribute names (``dt``, ``t_max``, ...) to values that
    replace whatever the text sets. Raises :class:`SchemaError` when any key is
    unknown or malformed, otherwise :class:`RangeError` on value violations;
    both carry the full violation list.
    """
    schema, values, seen = [], {}, set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            schema.append(f"line {lineno}: expected 'key = value'")
            continue
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            schema.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in seen:
            schema.append(f"line {lineno}: duplicate key {key!r}")
            continue
        seen.add(key)
        attr, kind = _KEYS[key]
        try:
            values[attr] = _convert(kind, raw)
        except ValueError as exc:
            schema.append(f"line {lineno}: {key}: {exc}")
    values.update(overrides or {})

    if values.get("model", "damped_jc") not in MODELS:
        schema.append(f"model must be one of {', '.join(MODELS)}")
    if values.get("stepper", "fixed_rk4") not in STEPPERS:
        schema.append(f"stepper must be one of {', '.join(STEPPERS)}")
    if values.get("sweep_param") not in (None, *SWEEPABLE):
        schema.append(f"sweep.param must be one of {', '.join(SWEEPABLE)}")
    if schema:
        raise SchemaError(schema + _range_violations(values, partial=True))

    config = ScenarioConfig(**values)
    problems = _range_violations(values)
    if problems:
        raise RangeError(problems)
    return config


def _range_violations(v, partial=False):
    out = []

    def positive(attr, label):
        x = v.get(attr)
        if isinstance(x, float) and not (math.isfinite(x) and x > 0):
            out.append(f"{label} must be positive and finite")

    model = v.get("model", "damped_jc")
    t_max = v.get("t_max", ScenarioConfig.t_max)
    positive("t_max", "time.t_max")
    positive("dt", "time.dt")
    positive("W", "model.W")
    positive("lam", "model.lambda")
    positive("gamma0", "model.gamma0")
    positive("tol", "stepper.tol")
    dt = v.get("dt")
    if isinstance(dt, float) and isinstance(t_max, float) and dt > t_max / 10:
        out.append("time.dt must not exceed time.t_max / 10")
    if not partial:
        if model == "damped_jc":
            for attr in ("W", "lam"):
                if v.get(attr) is None:
                    out.append(f"{_ATTR_TO_KEY[attr]} is required for damped_jc")
        if model == "markov_control" and v.get("gamma0") is None:
            out.append("model.gamma0 is required for markov_control")
        if v.get("sweep_param") is not None:
            vals = v.get("sweep_values", ())
            if not vals:
                out.append("sweep.values must be nonempty when sweep.param is set")
            elif not all(math.isfinite(x) for x in vals):
                out.append("sweep.values must be finite")
        elif v.get("sweep_values"):
            out.append("sweep.values given without sweep.param")
    if any(m < 1 for m in v.get("M_values", ())):
        out.append("report.M entries must be >= 1")
    if "M_values" in v and not v["M_values"]:
        out.append("report.M must be nonempty")
    return out


def emit_config(config):
    """Render a config back to text; ``parse_config(emit_config(c)) == c``."""
    default = ScenarioConfig()
    lines = []
    for f in fields(ScenarioConfig):
        value = getattr(config, f.name)
        if value is None or (value == getattr(default, f.name) and f.name != "model"):
            continue
        key = _ATTR_TO_KEY[f.name]
        kind = _KEYS[key][1]
        if kind in ("float",):
            text = repr(float(value))
        elif kind in ("floats", "floats3"):
            text = ",".join(repr(float(x)) for x in value)
        elif kind == "ints":
            text = ",".join(str(x) for x in value)
        elif kind == "strs":
            text = ",".join(value)
        elif kind == "channels":
            text = ",".join(c.render() for c in value)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
