"""Run configuration: a key=value file presets flags, the command line overrides."""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from typing import Optional


class ConfigError(ValueError):
    pass


COMMANDS = ("tw2", "tw1", "kpz", "gue-extreme", "laws", "popl", "schur", "verify", "sample")
TW2_METHODS = ("fredholm", "painleve-classical", "painleve-new", "max-product")
FAMILIES = ("airy", "airy-varying", "kpz", "gue", "circle", "popl", "schur")
SUITES = ("painleve-identity", "borodin-okounkov", "bessel-airy-limit", "kpz-kernel", "fuchs",
          "chen-stein", "rescaling")
SAMPLE_KINDS = ("gue", "cue", "popl", "gamma", "geometric")

# file keys that are spelled differently from the field names
ALIASES = {"ortho.precision": "precision", "s-min": "s_min", "s-max": "s_max", "s-step": "s_step",
           "k-max": "k_max"}


@dataclass
class RunConfig:
    command: str = ""
    method: str = "fredholm"
    route: str = "ferrari_spohn"
    family: str = "airy"
    suite: str = ""
    kind: str = "gue"
    s: Optional[float] = None
    s_min: float = -5.0
    s_max: float = 4.0
    s_step: float = 1.0
    n: int = 10
    k: int = 1
    k_max: int = 40
    xi: float = 1.0
    t: float = 1.0
    side: str = "max"
    alphabet: str = "[0.4]"
    precision: str = "double"
    seed: int = 0
    samples: int = 100000
    jobs: int = 1
    validate: bool = False
    out: str = "-"
    format: str = "csv"
    extras: dict = field(default_factory=dict, repr=False)

    def s_values(self):
        if self.s is not None:
            return [float(self.s)]
        n = int(round((self.s_max - self.s_min) / self.s_step)) + 1
        return [self.s_min + i * self.s_step for i in range(n)]

    def validate_fields(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.command == "tw2" and self.method not in TW2_METHODS:
            raise ConfigError(f"tw2 method must be one of {TW2_METHODS}")
        if self.command == "tw1" and self.route not in ("ferrari_spohn", "sqrt_formula"):
            raise ConfigError("tw1 route must be ferrari_spohn or sqrt_formula")
        if self.command == "laws" and self.family not in FAMILIES:
            raise ConfigError(f"laws family must be one of {FAMILIES}")
        if self.command == "verify" and self.suite not in SUITES:
            raise ConfigError(f"verify suite must be one of {SUITES}")
        if self.command == "sample" and self.kind not in SAMPLE_KINDS:
            raise ConfigError(f"sample kind must be one of {SAMPLE_KINDS}")
        if self.side not in ("max", "min"):
            raise ConfigError("side must be max or min")
        if self.precision not in ("double", "extended"):
            raise ConfigError("precision must be double or extended")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.s is None and not (self.s_step > 0 and self.s_max >= self.s_min):
            raise ConfigError("need s_step > 0 and s_max >= s_min")
        if self.jobs < 1 or self.samples < 1 or self.n < 0 or self.k_max < 1:
            raise ConfigError("jobs, samples, k_max must be positive and n non-negative")
        if self.xi < 0 or self.t <= 0:
            raise ConfigError("need xi >= 0 and t > 0")
        return self


def _coerce(name: str, raw: str):
    f = {x.name: x for x in dataclasses.fields(RunConfig)}[name]
    kind = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
    try:
        if "bool" in kind:
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if "int" in kind:
            return int(raw)
        if "float" in kind:
            return None if raw.lower() == "none" else float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc
    return raw


def parse_config_text(text: str) -> dict:
    """key = value lines, '#' comments; unknown keys are rejected."""
    names = {x.name for x in dataclasses.fields(RunConfig)} - {"extras"}
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (p.strip() for p in line.split("=", 1))
        key = ALIASES.get(key, key.replace("-", "_"))
        if key not in names:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = _coerce(key, val)
    return out


def load_config_file(path: str) -> dict:
    with open(path) as fh:
        return parse_config_text(fh.read())


def build_config(file_values: dict, cli_values: dict) -> RunConfig:
    merged = dict(file_values)
    merged.update({k: v for k, v in cli_values.items() if v is not None})
    env = os.environ.get("MAXINDEP_PRECISION")
    if env:
        merged["precision"] = env
    return RunConfig(**merged).validate_fields()
