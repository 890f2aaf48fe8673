"""Experiment configuration files.

INI syntax read with :mod:`configparser`::

    [experiment]
    theta = golden
    phi = constant(c=4)
    seed = 7

    [criterion]
    k_max = 200
    series = main, shifted

Every key is typed; unknown sections or keys are rejected by name.  The
canonical text from :meth:`ExperimentConfig.to_text` parses back to an equal
config.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple

from .certified import render_rational
from .cf_core import IrrationalSpec
from .errors import ConfigError
from .phi_funcs import PhiSpec
from .specfmt import parse_phi, parse_theta


def _int(text: str) -> int:
    return int(text.strip().replace("_", ""))


def _int_list(text: str) -> Tuple[int, ...]:
    return tuple(_int(t) for t in text.split(",") if t.strip())


def _str_list(text: str) -> Tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _rational(text: str) -> Fraction:
    return Fraction(text.strip())


def _pairs(text: str) -> Tuple[Tuple[int, int], ...]:
    text = text.strip()
    if text == "auto":
        return ()
    out = []
    for item in text.split(","):
        if not item.strip():
            continue
        a, _, b = item.partition(":")
        out.append((_int(a), _int(b)))
    return tuple(out)


def _fmt_list(xs) -> str:
    return ", ".join(str(x) for x in xs)


def _fmt_pairs(xs) -> str:
    return "auto" if not xs else ", ".join(f"{a}:{b}" for a, b in xs)


# (parser, formatter, default); a default of None marks the key optional.
Field = Tuple[Callable[[str], Any], Callable[[Any], str], Any]

SCHEMA: Dict[str, Dict[str, Field]] = {
    "cf": {
        "k_max": (_int, str, 20),
    },
    "criterion": {
        "k_max": (_int, str, 200),
        "series": (_str_list, _fmt_list, ("main", "shifted", "condition_i", "condition_ii", "prop2")),
        "d": (_rational, render_rational, None),
    },
    "measure": {
        "k_min": (_int, str, 1),
        "k_max": (_int, str, 10),
        "pairs": (_pairs, _fmt_pairs, ()),
        "koksma_k": (_int_list, _fmt_list, (8, 12)),
        "koksma_arcs": (_int, str, 20),
        "export_sets": (_int, str, 0),
    },
    "simulate": {
        "mode": (str.strip, str, "liminf"),
        "m": (_int, str, 100),
        "checkpoints": (_int_list, _fmt_list, (1000, 10000)),
        "n_max": (_int, str, 100000),
        "k_range": (_int_list, _fmt_list, (1, 10)),
    },
    "build-theta": {
        "k_max": (_int, str, 20),
    },
}

SIM_MODES = ("liminf", "minkowski", "borel_cantelli")
SERIES = ("main", "shifted", "condition_i", "condition_ii", "prop2")


@dataclass
class ExperimentConfig:
    theta_text: str
    phi_text: str
    seed: int = 0
    sections: Dict[str, Dict[str, Any]] = field(default_factory=dict)

    def __post_init__(self):
        self.theta: IrrationalSpec = parse_theta(self.theta_text)
        self.phi: PhiSpec = parse_phi(self.phi_text)
        # Canonical spellings so that text -> config -> text is stable.
        self.theta_text = self.theta.to_config()
        self.phi_text = self.phi.to_config()
        if not 0 <= self.seed < 1 << 64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def get(self, section: str, key: str) -> Any:
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise KeyError(f"{section}.{key}")
        return self.sections.get(section, {}).get(key, SCHEMA[section][key][2])

    def __eq__(self, other):
        if not isinstance(other, ExperimentConfig):
            return NotImplemented
        return (self.theta_text, self.phi_text, self.seed, self._explicit()) == (
            other.theta_text, other.phi_text, other.seed, other._explicit())

    def _explicit(self):
        return {s: dict(v) for s, v in sorted(self.sections.items()) if v}

    def to_text(self) -> str:
        lines = ["[experiment]", f"theta = {self.theta_text}", f"phi = {self.phi_text}", f"seed = {self.seed}"]
        for section in SCHEMA:
            values = self.sections.get(section)
            if not values:
                continue
            lines += ["", f"[{section}]"]
            for key, (_, fmt, _) in SCHEMA[section].items():
                if key in values:
                    lines.append(f"{key} = {fmt(values[key])}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
        cp.optionxform = str.lower
        try:
            cp.read_string(text, source=source)
        except configparser.Error as exc:
            raise ConfigError(f"{source}: {exc}") from None
        if "experiment" not in cp:
            raise ConfigError(f"{source}: missing [experiment] section")
        exp = cp["experiment"]
        for key in exp:
            if key not in ("theta", "phi", "seed"):
                raise ConfigError(f"{source}: unknown key {key!r} in [experiment]")
        for key in ("theta", "phi"):
            if key not in exp:
                raise ConfigError(f"{source}: [experiment] is missing key {key!r}")
        try:
            seed = _int(exp.get("seed", "0"))
        except ValueError:
            raise ConfigError(f"{source}: key 'seed' is not an integer") from None
        sections: Dict[str, Dict[str, Any]] = {}
        for name in cp.sections():
            if name == "experiment":
                continue
            if name not in SCHEMA:
                raise ConfigError(f"{source}: unknown section [{name}]; known: {', '.join(SCHEMA)}")
            vals = {}
            for key, raw in cp[name].items():
                if key not in SCHEMA[name]:
                    raise ConfigError(f"{source}: unknown key {key!r} in [{name}]")
                parser = SCHEMA[name][key][0]
                try:
                    vals[key] = parser(raw)
                except (ValueError, ZeroDivisionError):
                    raise ConfigError(f"{source}: key {key!r} in [{name}] has invalid value {raw!r}") from None
            sections[name] = vals
        cfg = cls(exp["theta"], exp["phi"], seed, sections)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        return cls.from_text(text, path)

    def validate(self) -> None:
        mode = self.get("simulate", "mode")
        if mode not in SIM_MODES:
            raise ConfigError(f"key 'mode' in [simulate] must be one of {SIM_MODES}, got {mode!r}")
        for s in self.get("criterion", "series"):
            if s not in SERIES:
                raise ConfigError(f"key 'series' in [criterion]: unknown series {s!r}; known: {SERIES}")
        cps = self.get("simulate", "checkpoints")
        if not cps or any(b <= a for a, b in zip(cps, cps[1:])) or cps[0] < 1:
            raise ConfigError("key 'checkpoints' in [simulate] must be positive and strictly increasing")
        if self.get("measure", "k_min") < 1 or self.get("measure", "k_max") < self.get("measure", "k_min"):
            raise ConfigError("keys 'k_min'/'k_max' in [measure] need 1 <= k_min <= k_max")
