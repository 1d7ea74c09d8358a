"""Flat ``section.key = value`` experiment configuration.

Blank lines and ``#`` comments are ignored.  Every key has a type and a
default; unknown keys, malformed values and constraint violations are all
collected (with line numbers) before anything is raised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .datagen import COUPLINGS, KINDS, DataSpec
from .linear import MaterialParams
from .quadrature import QuadratureSpec
from .solver import SolverConfig
from .spectral import GridSpec

EXPERIMENTS = (
    "symbol-check",
    "linear-decay",
    "profile-error",
    "enstrophy",
    "splitting",
    "nonlinear-run",
    "gen-data",
)


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise ValueError(f"expected a number, got {text!r}") from None
    if not math.isfinite(x):
        raise ValueError(f"expected a finite number, got {text!r}")
    return x


def _parse_int(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise ValueError(f"expected an integer, got {text!r}") from None


def _parse_auto_float(text: str):
    return "auto" if text.strip().lower() == "auto" else _parse_float(text)


def _parse_auto_int(text: str):
    return "auto" if text.strip().lower() == "auto" else _parse_int(text)


def _parse_intervals(text: str) -> tuple:
    out = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        a, sep, b = chunk.partition(":")
        if not sep:
            raise ValueError(f"expected 't1:t2' pairs, got {chunk!r}")
        out.append((_parse_float(a), _parse_float(b)))
    if not out:
        raise ValueError("need at least one interval")
    return tuple(out)


def _choice(options) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text

    return parse


def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(f"{_fmt_value(a)}:{_fmt_value(b)}" for a, b in value)
    return str(value)


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: Any
    check: Callable[[Any], str | None] | None = None


def _gt0(name):
    return lambda v: None if v > 0 else f"{name} must be > 0"


def _ge0(name):
    return lambda v: None if v >= 0 else f"{name} must be >= 0"


def _ge(name, lo):
    return lambda v: None if v >= lo else f"{name} must be >= {lo}"


def _auto_or(check):
    return lambda v: None if v == "auto" else check(v)


SCHEMA: dict[str, dict[str, Key]] = {
    "run": {
        "experiment": Key(_choice(EXPERIMENTS), "symbol-check"),
        "seed": Key(_parse_int, 0, lambda v: None if 0 <= v < 2**64 else "seed must be a 64-bit unsigned integer"),
        "out_dir": Key(str, "out"),
        "jobs": Key(_parse_int, 1, _ge("jobs", 1)),
    },
    "params": {
        "mu": Key(_parse_float, 1.0, _gt0("mu")),
        "chi": Key(_parse_float, 1.0, _gt0("chi")),
        "gamma": Key(_parse_float, 0.0, _ge0("gamma")),
        "kappa": Key(_parse_float, 0.0, _ge0("kappa")),
    },
    "data": {
        "kind": Key(_choice(KINDS), "continuum-profile"),
        "q": Key(_parse_float, 0.0, _ge("q", -1)),
        "sigma": Key(_parse_float, 1.0, _gt0("sigma")),
        "amplitude": Key(_parse_float, 1.0, _ge0("amplitude")),
        "coupling": Key(_choice(COUPLINGS), "independent"),
        "u_weight": Key(_parse_float, 1.0, _ge0("u_weight")),
        "w_weight": Key(_parse_float, 0.0, _ge0("w_weight")),
        "w_longitudinal": Key(_parse_float, 0.0, _ge0("w_longitudinal")),
    },
    "quad": {
        "r_min": Key(_parse_auto_float, "auto", _auto_or(_gt0("r_min"))),
        "r_max": Key(_parse_auto_float, "auto", _auto_or(_gt0("r_max"))),
        "n_radial": Key(_parse_int, 256, _ge("n_radial", 16)),
        "n_angular": Key(_parse_int, 8, _ge("n_angular", 2)),
    },
    "times": {
        "t_min": Key(_parse_float, 1.0, _gt0("t_min")),
        "t_max": Key(_parse_float, 1e4, _gt0("t_max")),
        "count": Key(_parse_int, 41, _ge("count", 2)),
    },
    "fit": {
        "t_a": Key(_parse_float, 1e2, _gt0("t_a")),
        "t_b": Key(_parse_float, 1e4, _gt0("t_b")),
    },
    "symbol": {
        "draws": Key(_parse_int, 1000, _ge("draws", 1)),
    },
    "enstrophy": {
        "intervals": Key(_parse_intervals, ((1.0, 2.0), (10.0, 20.0))),
        "tol": Key(_parse_float, 1e-6, _gt0("tol")),
    },
    "solver": {
        "n": Key(_parse_int, 32, lambda v: None if v >= 4 and v % 2 == 0 else "n must be an even integer >= 4"),
        "box_length": Key(_parse_float, 2.0 * math.pi, _gt0("box_length")),
        "dt": Key(_parse_float, 1e-3, _gt0("dt")),
        "t_end": Key(_parse_float, 1.0, _gt0("t_end")),
        "epsilon": Key(_parse_float, 0.0, _ge0("epsilon")),
        "n_cut": Key(_parse_auto_int, "auto", _auto_or(_ge0("n_cut"))),
        "record_every": Key(_parse_int, 10, _ge("record_every", 1)),
        "nonlinear": Key(_parse_bool, True),
        "store_states": Key(_parse_bool, False),
        "residual_tol": Key(_parse_float, 1e-5, _gt0("residual_tol")),
    },
}


@dataclass(frozen=True)
class TimeGrid:
    t_min: float
    t_max: float
    count: int

    def values(self) -> np.ndarray:
        return np.geomspace(self.t_min, self.t_max, self.count)


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Validated configuration; ``values`` maps ``section.key`` to the effective value."""

    values: dict = field(default_factory=dict)
    params: MaterialParams | None = None
    data: DataSpec | None = None
    quad: QuadratureSpec | None = None
    solver: SolverConfig | None = None
    times: TimeGrid | None = None

    def __getitem__(self, key: str):
        return self.values[key]

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.values == other.values

    @property
    def experiment(self) -> str:
        return self.values["run.experiment"]

    @property
    def seed(self) -> int:
        return self.values["run.seed"]

    @property
    def out_dir(self) -> str:
        return self.values["run.out_dir"]

    @property
    def window(self) -> tuple[float, float]:
        return (self.values["fit.t_a"], self.values["fit.t_b"])

    def as_dict(self) -> dict:
        return {k: (list(map(list, v)) if isinstance(v, tuple) else v) for k, v in self.values.items()}


def defaults() -> dict:
    return {f"{s}.{k}": key.default for s, keys in SCHEMA.items() for k, key in keys.items()}


def iter_entries(text: str):
    """Yield ``(line_no, key, raw_value)`` or ``(line_no, None, error)``."""
    for no, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, raw = body.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            yield no, None, "expected 'section.key = value'"
            continue
        yield no, key, raw


def _line_order(msg: str) -> tuple[int, int]:
    # file lines first in order, then defaults and overrides
    head = msg.split(":", 1)[0]
    if head.startswith("line "):
        return (0, int(head[5:]))
    return (1, 0)


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse, fill defaults, apply ``overrides`` (``section.key -> value``) and validate.

    Raises :class:`ConfigError` listing every problem found.
    """
    values = defaults()
    lines: dict[str, int] = {}
    errors: list[str] = []
    bad: set[str] = set()
    for no, key, raw in iter_entries(text):
        if key is None:
            errors.append(f"line {no}: {raw}")
            continue
        section, dot, name = key.partition(".")
        spec = SCHEMA.get(section, {}).get(name) if dot else None
        if spec is None:
            errors.append(f"line {no}: unknown key '{key}'")
            continue
        if key in lines:
            errors.append(f"line {no}: duplicate key '{key}' (first set on line {lines[key]})")
            continue
        lines[key] = no
        try:
            values[key] = spec.parse(raw)
        except ValueError as exc:
            errors.append(f"line {no}: {key}: {exc}")
            bad.add(key)
    for key, value in (overrides or {}).items():
        if key not in values:
            errors.append(f"override: unknown key '{key}'")
            continue
        values[key] = value
        lines[key] = 0

    def where(key):
        no = lines.get(key)
        return f"line {no}" if no else "default" if no is None else "command line"

    for section, keys in SCHEMA.items():
        for name, spec in keys.items():
            key = f"{section}.{name}"
            if spec.check is not None and key not in bad:
                msg = spec.check(values[key])
                if msg:
                    errors.append(f"{where(key)}: {key}: {msg}")

    if errors:
        raise ConfigError(sorted(errors, key=_line_order))
    cfg, cross = _build(values)
    if cross:
        raise ConfigError([f"{where(k)}: {k}: {m}" for k, m in cross])
    return cfg


def _build(v: dict) -> tuple[ExperimentConfig | None, list[tuple[str, str]]]:
    cross: list[tuple[str, str]] = []
    if v["times.t_max"] <= v["times.t_min"]:
        cross.append(("times.t_max", "t_max must exceed t_min"))
    if v["fit.t_b"] <= v["fit.t_a"]:
        cross.append(("fit.t_b", "t_b must exceed t_a"))
    for t1, t2 in v["enstrophy.intervals"]:
        if not 0 <= t1 < t2:
            cross.append(("enstrophy.intervals", f"interval {t1}:{t2} must satisfy 0 <= t1 < t2"))
    n = v["solver.n"]
    n_cut = None if v["solver.n_cut"] == "auto" else v["solver.n_cut"]
    if n_cut is not None and n_cut > n // 2:
        cross.append(("solver.n_cut", "n_cut must be <= n/2"))
    if v["run.experiment"] == "nonlinear-run" and v["data.kind"] != "torus-random":
        cross.append(("data.kind", "nonlinear-run needs data.kind = torus-random"))
    if v["data.coupling"] != "independent" and v["data.kind"] != "continuum-profile":
        cross.append(("data.coupling", "coupled data is available for continuum profiles only"))
    sigma, t_max = v["data.sigma"], v["times.t_max"]
    auto = QuadratureSpec.for_profile(sigma, t_max)
    r_min = float(auto.r_min if v["quad.r_min"] == "auto" else v["quad.r_min"])
    r_max = float(auto.r_max if v["quad.r_max"] == "auto" else v["quad.r_max"])
    if not r_min < r_max:
        cross.append(("quad.r_max", "r_max must exceed r_min"))
    if cross:
        return None, cross

    params = MaterialParams(v["params.mu"], v["params.chi"], v["params.gamma"], v["params.kappa"])
    data = DataSpec(
        kind=v["data.kind"],
        q=v["data.q"],
        sigma=sigma,
        amplitude=v["data.amplitude"],
        seed=v["run.seed"],
        coupling=v["data.coupling"],
        u_weight=v["data.u_weight"],
        w_weight=v["data.w_weight"],
        w_longitudinal=v["data.w_longitudinal"],
    )
    quad = QuadratureSpec(r_min, r_max, v["quad.n_radial"], v["quad.n_angular"])
    solver = SolverConfig(
        grid=GridSpec(n, v["solver.box_length"]),
        params=params,
        dt=v["solver.dt"],
        t_end=v["solver.t_end"],
        epsilon=v["solver.epsilon"],
        n_cut=n_cut,
        record_every=v["solver.record_every"],
        store_states=v["solver.store_states"],
        nonlinear=v["solver.nonlinear"],
    )
    times = TimeGrid(v["times.t_min"], t_max, v["times.count"])
    return ExperimentConfig(dict(v), params, data, quad, solver, times), []


def emit_config(cfg: ExperimentConfig) -> str:
    """Effective configuration in the input format (re-parses to an equal config)."""
    out = []
    for section, keys in SCHEMA.items():
        out.append(f"# {section}")
        for name in keys:
            key = f"{section}.{name}"
            out.append(f"{key} = {_fmt_value(cfg.values[key])}")
        out.append("")
    return "\n".join(out)
