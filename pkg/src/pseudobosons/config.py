"""Run configuration: a single JSON document, optionally overridden by flags.

Example::

    {"model": "ex1", "eps": 0.5, "xi": 1, "nmax": 8,
     "sweep": {"eps": [0.1, 0.5, 0.9], "xi": [-1, 1]},
     "checks": ["ccr", "vacuum"], "tolerances": {"ccr": 1e-9}}

Model parameters may be given at the top level or under ``"params"``.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
import numbers
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import ParameterError, PseudoBosonError
from .models import BUILDERS
from .verify import CHECKS, DEFAULT_TOLERANCES, QB_NMAX

FORMATS = ("json", "csv", "md")
DEFAULT_NMAX = 8
SETTINGS = {"model", "params", "sweep", "nmax", "qb_nmax", "checks", "tolerances", "seed", "oracle", "out", "format"}


class ConfigError(PseudoBosonError, ValueError):
    """Invalid configuration; the message starts with the offending key path."""

    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")


@dataclass
class RunConfig:
    model: str
    params: dict[str, Any] = field(default_factory=dict)
    sweep: dict[str, list] = field(default_factory=dict)
    nmax: int = DEFAULT_NMAX
    qb_nmax: int = QB_NMAX
    checks: tuple[str, ...] = CHECKS
    tolerances: dict[str, float] = field(default_factory=dict)
    seed: int | None = None
    oracle: bool = True
    out: str | None = None
    formats: tuple[str, ...] = ("json",)

    def points(self) -> list[dict[str, Any]]:
        """Cartesian product of the sweep grids over the fixed parameters."""
        if not self.sweep:
            return [dict(self.params)]
        names = list(self.sweep)
        return [{**self.params, **dict(zip(names, combo))} for combo in itertools.product(*(self.sweep[k] for k in names))]


def param_names(model: str) -> tuple[str, ...]:
    cls, _ = BUILDERS[model]
    return tuple(f.name for f in dataclasses.fields(cls))


def _number(path: str, value, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if integer:
        if float(value) != int(value):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return int(value)
    return value


def _grid(path: str, entry) -> list:
    if isinstance(entry, Mapping):
        extra = set(entry) - {"linspace"}
        if extra:
            raise ConfigError(f"{path}.{sorted(extra)[0]}", "unknown key (grids are lists or {\"linspace\": [start, stop, num]})")
        ls = entry.get("linspace")
        if not isinstance(ls, list) or len(ls) != 3:
            raise ConfigError(f"{path}.linspace", "expected [start, stop, num]")
        start = _number(f"{path}.linspace[0]", ls[0])
        stop = _number(f"{path}.linspace[1]", ls[1])
        num = _number(f"{path}.linspace[2]", ls[2], integer=True)
        if num < 1:
            raise ConfigError(f"{path}.linspace[2]", "grid must be non-empty")
        return [float(x) for x in np.linspace(start, stop, num)]
    if not isinstance(entry, list):
        raise ConfigError(path, f"expected a list of values, got {entry!r}")
    if not entry:
        raise ConfigError(path, "grid must be non-empty")
    return [_number(f"{path}[{i}]", v) for i, v in enumerate(entry)]


def _validate_point(model: str, point: dict, origin: Mapping[str, str]) -> None:
    cls, _ = BUILDERS[model]
    try:
        cls(**point)
    except TypeError as exc:  # missing required parameter
        raise ConfigError("params", str(exc)) from None
    except ParameterError as exc:
        name = str(exc).split("=", 1)[0] if "=" in str(exc).split(":", 1)[0] else None
        raise ConfigError(origin.get(name, "params"), str(exc)) from None


def parse_config(source: str | Path | Mapping | None = None, **overrides) -> RunConfig:
    """Validate a configuration document (path, JSON text or mapping) and fill defaults.

    Keyword ``overrides`` take precedence over the document; keys are the
    same as in the document, and ``params`` / ``tolerances`` are merged.
    Fixed parameters are checked against the model guards here; swept
    points are validated when they run so that one bad point does not stop
    a sweep.
    """
    if source is None:
        doc: dict = {}
    elif isinstance(source, Mapping):
        doc = dict(source)
    else:
        text = Path(source).read_text() if not str(source).lstrip().startswith("{") else str(source)
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("<document>", f"malformed JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("<document>", "top level must be a JSON object")
    for key, val in overrides.items():
        if val is None:
            continue
        if key in ("params", "tolerances") and isinstance(doc.get(key), Mapping):
            doc[key] = {**doc[key], **val}
        else:
            doc[key] = val

    model = doc.get("model")
    if model not in BUILDERS:
        raise ConfigError("model", f"expected one of {sorted(BUILDERS)}, got {model!r}")
    allowed = param_names(model)

    params: dict[str, Any] = {}
    origin: dict[str, str] = {}
    # top-level parameters first so that the (possibly flag-merged) "params" object wins
    for key, val in doc.items():
        if key in SETTINGS:
            continue
        if key not in allowed:
            raise ConfigError(key, f"unknown key; expected a setting {sorted(SETTINGS)} or a {model} parameter {list(allowed)}")
        params[key] = _number(key, val)
        origin[key] = key
    nested = doc.get("params", {})
    if not isinstance(nested, Mapping):
        raise ConfigError("params", "expected an object")
    for key, val in nested.items():
        if key not in allowed:
            raise ConfigError(f"params.{key}", f"unknown parameter for {model}; expected one of {list(allowed)}")
        params[key] = _number(f"params.{key}", val)
        origin[key] = f"params.{key}"

    sweep: dict[str, list] = {}
    raw_sweep = doc.get("sweep", {})
    if not isinstance(raw_sweep, Mapping):
        raise ConfigError("sweep", "expected an object of parameter grids")
    for key, entry in raw_sweep.items():
        if key not in allowed:
            raise ConfigError(f"sweep.{key}", f"unknown parameter for {model}; expected one of {list(allowed)}")
        sweep[key] = _grid(f"sweep.{key}", entry)
        origin[key] = f"sweep.{key}"

    nmax = _number("nmax", doc.get("nmax", DEFAULT_NMAX), integer=True)
    if not 0 <= nmax <= 12:
        raise ConfigError("nmax", f"must lie in [0, 12], got {nmax}")
    qb_nmax = _number("qb_nmax", doc.get("qb_nmax", QB_NMAX), integer=True)
    if not 5 <= qb_nmax <= 80:
        raise ConfigError("qb_nmax", f"must lie in [5, 80], got {qb_nmax}")

    raw_checks = doc.get("checks", list(CHECKS))
    if isinstance(raw_checks, Mapping):
        for key, on in raw_checks.items():
            if key not in CHECKS:
                raise ConfigError(f"checks.{key}", f"unknown check; expected one of {list(CHECKS)}")
            if not isinstance(on, bool):
                raise ConfigError(f"checks.{key}", f"expected true/false, got {on!r}")
        checks = tuple(c for c in CHECKS if raw_checks.get(c, True))
    elif isinstance(raw_checks, list):
        for i, key in enumerate(raw_checks):
            if key not in CHECKS:
                raise ConfigError(f"checks[{i}]", f"unknown check {key!r}; expected one of {list(CHECKS)}")
        checks = tuple(c for c in CHECKS if c in raw_checks)
    else:
        raise ConfigError("checks", "expected a list of names or an object of booleans")

    tolerances = {}
    raw_tol = doc.get("tolerances", {})
    if not isinstance(raw_tol, Mapping):
        raise ConfigError("tolerances", "expected an object")
    for key, val in raw_tol.items():
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"tolerances.{key}", f"unknown tolerance; expected one of {sorted(DEFAULT_TOLERANCES)}")
        val = _number(f"tolerances.{key}", val)
        if not val >= 0:
            raise ConfigError(f"tolerances.{key}", "must be non-negative")
        tolerances[key] = float(val)

    seed = doc.get("seed")
    if seed is not None:
        seed = _number("seed", seed, integer=True)
    oracle = doc.get("oracle", True)
    if not isinstance(oracle, bool):
        raise ConfigError("oracle", f"expected true/false, got {oracle!r}")

    fmt = doc.get("format", ["json"])
    if isinstance(fmt, str):
        fmt = [f.strip() for f in fmt.split(",") if f.strip()]
    if not isinstance(fmt, list) or not fmt:
        raise ConfigError("format", "expected a non-empty list or comma-separated string")
    for i, f in enumerate(fmt):
        if f not in FORMATS:
            raise ConfigError(f"format[{i}]", f"unknown format {f!r}; expected one of {list(FORMATS)}")
    out = doc.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("out", "expected a directory path")

    cfg = RunConfig(model, params, sweep, nmax, qb_nmax, checks, tolerances, seed, oracle, out, tuple(dict.fromkeys(fmt)))
    if not sweep:
        _validate_point(model, params, origin)
    else:
        missing = [n for n in allowed if n not in params and n not in sweep and _required(model, n)]
        if missing:
            raise ConfigError("params", f"missing required parameter(s) {missing}")
    return cfg


def _required(model: str, name: str) -> bool:
    cls, _ = BUILDERS[model]
    f = next(f for f in dataclasses.fields(cls) if f.name == name)
    return f.default is dataclasses.MISSING
