"""Flat key = value experiment configuration with dotted sections."""
from dataclasses import dataclass, field as dc_field
from importlib import resources

from .errors import ConfigError

__all__ = ["ExperimentConfig", "parse_text", "load", "REQUIRED_BLOCKS"]

REQUIRED_BLOCKS = {
    "verify-hermite": ("hermite",),
    "verify-semigroup": ("semigroup",),
    "verify-commutator": ("commutator",),
    "linear-expansion": ("linear",),
    "run-cgl": ("params", "grid", "init", "solver"),
    "expand": ("params", "grid", "expansion"),
    "fit-rates": ("params", "grid", "expansion", "rates"),
    "full-pipeline": ("params", "grid", "init", "solver", "expansion", "rates"),
}


def parse_text(text, origin="<config>"):
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{origin}:{lineno}: empty key")
        out[key] = value
    return out


def _defaults():
    return parse_text(resources.files("cgl_lab").joinpath("defaults.cfg").read_text(), "defaults.cfg")


def _complex(s):
    s = s.replace(" ", "")
    if s.endswith("i"):
        s = s[:-1] + "j"
    return complex(s)


def _float(s):
    return float(s)


def _bool(s):
    v = s.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


@dataclass
class ExperimentConfig:
    subcommand: str
    values: dict
    out: str = "out"
    seed: int = 0
    user_keys: set = dc_field(default_factory=set)

    def __post_init__(self):
        blocks = REQUIRED_BLOCKS.get(self.subcommand)
        if blocks is None:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        present = {k.split(".", 1)[0] for k in self.values if "." in k}
        for b in blocks:
            if b not in present:
                raise ConfigError(f"subcommand {self.subcommand!r} needs the '{b}.' block")

    def _get(self, key, conv):
        if key not in self.values:
            raise ConfigError(f"missing config key '{key}'")
        try:
            return conv(self.values[key])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for '{key}': {self.values[key]!r} ({exc})") from None

    def get_str(self, key):
        return self._get(key, str)

    def get_float(self, key):
        return self._get(key, _float)

    def get_int(self, key):
        return self._get(key, lambda s: int(s) if s.strip().lstrip("+-").isdigit() else int(float(s)))

    def get_complex(self, key):
        return self._get(key, _complex)

    def get_bool(self, key):
        return self._get(key, _bool)

    def get_list(self, key, conv=_float):
        conv = _complex if conv is complex else conv
        return self._get(key, lambda s: [conv(v.strip()) for v in s.split(",") if v.strip()])


def load(subcommand, path=None, out=None, seed=None):
    """Merge the packaged defaults with a user file; unknown keys are errors."""
    values = _defaults()
    user = {}
    if path is not None:
        try:
            with open(path) as fh:
                user = parse_text(fh.read(), str(path))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        for key in user:
            if key not in values:
                raise ConfigError(f"unknown config key '{key}' in {path}")
        values.update(user)
    cfg = ExperimentConfig(subcommand, values, user_keys=set(user))
    cfg.out = out or values.get("out", "out")
    if seed is not None:
        cfg.seed = int(seed)
    else:
        cfg.seed = cfg.get_int("seed")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return cfg
