"""INI-style run configuration with a fixed schema.

Every section is a flat ``key = value`` map.  Parsing collects every problem
(syntax, unknown section or key, bad type, missing required key) before
raising a single :class:`ConfigError`.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

__all__ = ["ConfigError", "RunConfig", "SCHEMA", "MODES", "parse_config", "emit", "load"]

MODES = ("simulate", "steady", "squeeze", "continuation", "verify-operator",
         "verify-potential", "mms")
PROFILES = ("zero", "constant", "sine", "random", "file")
REQUIRED = object()


@dataclass(frozen=True)
class Key:
    kind: str  # int | float | bool | str | ints | floats
    default: object = None
    choices: tuple | None = None


SCHEMA: dict[str, dict[str, Key]] = {
    "domain": {
        "cells": Key("ints", (128,)),
        "side_lengths": Key("floats"),
    },
    "kernel": {
        "family": Key("str", "gaussian", ("gaussian", "bump", "table", "zero")),
        "scale": Key("float", 0.1),
        "amplitude": Key("float", 1.0),
        "table": Key("str"),
    },
    "potential": {
        "kind": Key("str", "double_well", ("double_well", "logarithmic", "custom_smooth")),
        "gamma": Key("float", 0.0),
        "epsilon": Key("float", 1.0),
        "kappa_f": Key("float", 1.0),
        "delta": Key("float"),
    },
    "lambda": {
        # kernel: lambda = linear part - kappa(x) + value; constant: lambda = value
        "mode": Key("str", "kernel", ("kernel", "constant")),
        "value": Key("float", 0.0),
    },
    "scheme": {
        "newton_tol": Key("float", 1e-12),
        "newton_max_iter": Key("int", 100),
        "linear_solver": Key("str", "auto", ("auto", "tridiagonal", "conjugate-residual")),
        "cfl_guard": Key("bool", True),
    },
    "run": {
        "mode": Key("str", "simulate", MODES),
        "dt": Key("float", REQUIRED),
        "T": Key("float", REQUIRED),
        "stride": Key("int", 1),
        "snapshot_every": Key("int", 0),
        "seed": Key("int", 0),
        "theta_profile": Key("str", "sine", PROFILES),
        "theta_amplitude": Key("float", 1.0),
        "theta_mode": Key("int", 1),
        "theta_file": Key("str"),
        "chi_profile": Key("str", "sine", PROFILES),
        "chi_amplitude": Key("float", 0.5),
        "chi_mode": Key("int", 2),
        "chi_file": Key("str"),
    },
    "experiment": {
        "c0": Key("float"),
        "taus": Key("floats", (0.01, 0.1, 1.0)),
        "deltas": Key("floats", (0.2, 0.1, 0.05, 0.025)),
        "window": Key("floats", (0.0, 1.0)),
        "sup_from": Key("float", 1.0),
        "pairs": Key("int", 10),
        "burn_in": Key("float", 1.0),
        "rank": Key("int", 0),
        "eta_factor": Key("float", 0.1),
        "steady_tol": Key("float", 1e-8),
        "steady_max_iter": Key("int", 100000),
        "tol_theta": Key("float", 1e-4),
        "tol_chi": Key("float", 1e-3),
        "samples": Key("int", 200),
    },
}


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass
class RunConfig:
    sections: dict = field(default_factory=dict)

    def __getitem__(self, section: str) -> dict:
        return self.sections[section]

    def replace(self, section: str, **values) -> "RunConfig":
        new = {s: dict(v) for s, v in self.sections.items()}
        new[section].update(values)
        return RunConfig(new)


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(kind: str, raw: str):
    raw = raw.strip()
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "bool":
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind in ("ints", "floats"):
        conv = int if kind == "ints" else float
        items = [p for p in raw.replace(",", " ").split()]
        if not items:
            raise ValueError("empty list")
        return tuple(conv(p) for p in items)
    return raw


def _format(kind: str, value) -> str:
    if kind == "bool":
        return "true" if value else "false"
    if kind == "float":
        return repr(float(value))
    if kind in ("ints", "floats"):
        return ", ".join(repr(v) for v in value)
    return str(value)


def parse_config(text: str) -> RunConfig:
    """Parse and type-check ``text``; unspecified keys take their defaults."""
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=("#",), strict=True,
                                   default_section="__none__")
    cp.optionxform = str
    errors = []
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError([f"line {exc.lineno}: key outside any section: {exc.line.strip()}"]) from None
    except configparser.ParsingError as exc:
        errors += [f"line {ln}: syntax error: {line.strip(chr(39)).removesuffix(chr(92) + 'n').strip()}"
                   for ln, line in exc.errors]
        raise ConfigError(errors) from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ConfigError([f"line {exc.lineno}: {exc.message.splitlines()[0]}"]) from None

    for sec in cp.sections():
        if sec not in SCHEMA:
            errors.append(f"[{sec}]: unknown section")
    out = {}
    for sec, keys in SCHEMA.items():
        given = cp[sec] if cp.has_section(sec) else {}
        for k in given:
            if k not in keys:
                errors.append(f"{sec}.{k}: unknown key")
        vals = {}
        missing = []
        for k, spec in keys.items():
            if k in given:
                try:
                    v = _convert(spec.kind, given[k])
                except ValueError as exc:
                    errors.append(f"{sec}.{k}: expected {spec.kind}: {exc}")
                    continue
                if spec.choices and v not in spec.choices:
                    errors.append(f"{sec}.{k}: {v!r} not one of {', '.join(spec.choices)}")
                    continue
                vals[k] = v
            elif spec.default is REQUIRED:
                missing.append(k)
            else:
                vals[k] = spec.default
        if missing:
            errors.append(f"[{sec}]: missing required keys: {', '.join(missing)}")
        out[sec] = vals
    if not errors:
        errors += _semantic_errors(out)
    if errors:
        raise ConfigError(errors)
    return RunConfig(out)


def _semantic_errors(c: dict) -> list[str]:
    err = []
    cells = c["domain"]["cells"]
    if not 1 <= len(cells) <= 2:
        err.append("domain.cells: one or two cell counts expected")
    side = c["domain"]["side_lengths"]
    if side is not None and len(side) != len(cells):
        err.append("domain.side_lengths: length must match domain.cells")
    if c["kernel"]["family"] == "table" and not c["kernel"]["table"]:
        err.append("kernel.table: required for family = table")
    for name in ("theta", "chi"):
        if c["run"][f"{name}_profile"] == "file" and not c["run"][f"{name}_file"]:
            err.append(f"run.{name}_file: required for {name}_profile = file")
    for k in ("dt", "T"):
        if not c["run"][k] > 0:
            err.append(f"run.{k}: must be positive")
    dt, T = c["run"]["dt"], c["run"]["T"]
    if dt > 0 and T > 0 and abs(round(T / dt) * dt - T) > 1e-9 * T:
        err.append("run.T: must be a whole number of steps dt")
    if c["run"]["stride"] < 1:
        err.append("run.stride: must be at least 1")
    d = c["potential"]["delta"]
    if d is not None and not 0 < d < 1:
        err.append("potential.delta: must lie in (0, 1)")
    return err


def emit(cfg: RunConfig) -> str:
    """Serialize every resolved key; ``parse_config(emit(cfg)) == cfg``."""
    lines = []
    for sec, keys in SCHEMA.items():
        lines.append(f"[{sec}]")
        for k, spec in keys.items():
            v = cfg.sections[sec].get(k)
            if v is not None:
                lines.append(f"{k} = {_format(spec.kind, v)}")
        lines.append("")
    return "\n".join(lines)


def load(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError([f"{path}: {exc}"]) from None
    return parse_config(text)
