"""YAML experiment configuration: defaults, validation, canonical echo."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass

import yaml

from .engine import SimConfig, StopCriteria
from .errors import InvalidConfig, ParseError, ValidationError
from .noise import NoiseModel, noise_from_dict
from .problem import TargetFunction, problem_from_dict
from .stepsize import Constant, Deterministic, Kesten, Multiplicative, PowerSchedule

DEFAULTS: dict = {
    "problem": {"name": "tanh", "params": {"a": 1.0}},
    "noise": {"family": "gaussian", "params": {"sigma": 0.1}},
    "rule": {"variant": "multiplicative", "u": 1.05, "d": 0.9, "gbar": 0.5, "c": None, "alpha": 1.0, "g": None},
    "init": {"x0": 2.0, "gamma0": None, "gamma1": None},
    "run": {"horizon": 20000, "seed": 0, "n_seeds": 100, "record_stride": 1},
    "stop": {"conv_window": 200, "conv_tol": 1e-6, "gamma_tail_tol": 1e-8, "blowup_bound": 1e6},
    "sweep": {"u_grid": [], "d_grid": [], "d_list": []},
    "kcurve": {"z_min": None, "z_max": None, "n_points": 21, "mc_samples": 100000},
    "output": {"path": None, "format": "csv"},
    "force": False,
}

# sections whose "params" mapping is free-form (validated by the builders)
_FREE = {("problem", "params"), ("noise", "params")}

_INT_KEYS = {"run.horizon", "run.seed", "run.n_seeds", "run.record_stride", "stop.conv_window",
             "kcurve.n_points", "kcurve.mc_samples"}
_STR_KEYS = {"problem.name", "noise.family", "rule.variant", "output.path", "output.format"}
_LIST_KEYS = {"sweep.u_grid", "sweep.d_grid", "sweep.d_list"}


def _merge(defaults, given, path=()):
    if not isinstance(given, dict):
        raise ValidationError(f"{'.'.join(path) or 'config'}: expected a mapping, got {type(given).__name__}")
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        where = ".".join(path + (str(key),))
        if key not in defaults:
            raise ValidationError(f"unknown key {where!r}")
        if path + (key,) in _FREE:
            if value is None:
                value = {}
            if not isinstance(value, dict):
                raise ValidationError(f"{where}: expected a mapping")
            out[key] = copy.deepcopy(value)
        elif isinstance(defaults[key], dict):
            out[key] = _merge(defaults[key], value or {}, path + (key,))
        else:
            out[key] = _check_scalar(where, value)
    return out


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_scalar(where, value):
    if value is None:
        return None
    if where in _INT_KEYS:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ValidationError(f"{where}: expected an integer, got {value!r}")
        return value
    if where in _STR_KEYS:
        if not isinstance(value, str):
            raise ValidationError(f"{where}: expected a string, got {value!r}")
        return value
    if where in _LIST_KEYS:
        if not isinstance(value, list) or not all(_is_number(v) for v in value):
            raise ValidationError(f"{where}: expected a list of numbers")
        return [float(v) for v in value]
    if where == "force":
        if not isinstance(value, bool):
            raise ValidationError("force: expected true/false")
        return value
    if not _is_number(value):
        raise ValidationError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _build_rule(r: dict):
    variant = r["variant"]
    if variant == "multiplicative":
        return Multiplicative(r["u"], r["d"], r["gbar"])
    if variant in ("kesten", "deterministic"):
        c = r["c"] if r["c"] is not None else r["gbar"]
        sched = PowerSchedule(c, r["alpha"])
        return Kesten(sched) if variant == "kesten" else Deterministic(sched)
    if variant == "constant":
        if r["g"] is None:
            raise InvalidConfig("g is required for the constant rule")
        return Constant(r["g"])
    raise InvalidConfig(f"unknown variant {variant!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    data: dict
    problem: TargetFunction
    noise: NoiseModel
    rule: object
    stop: StopCriteria

    @property
    def force(self) -> bool:
        return bool(self.data["force"])

    def sim_config(self) -> SimConfig:
        init, run = self.data["init"], self.data["run"]
        return SimConfig(self.problem, self.noise, self.rule, x0=init["x0"], gamma0=init["gamma0"],
                         gamma1=init["gamma1"], horizon=run["horizon"], seed=run["seed"],
                         record_stride=run["record_stride"], stop=self.stop, force=self.force)

    def echo(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=False)

    def canonical_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def build_config(raw: dict | None, gate: bool = True) -> ExperimentConfig:
    data = _merge(DEFAULTS, raw or {})
    built = {}
    for section, builder in (("problem", problem_from_dict), ("noise", noise_from_dict), ("rule", _build_rule),
                             ("stop", lambda s: StopCriteria(**s))):
        try:
            built[section] = builder(data[section])
        except (InvalidConfig, KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"{section}: {exc}") from None
    if data["output"]["format"] not in ("csv", "json"):
        raise ValidationError("output.format: must be csv or json")
    cfg = ExperimentConfig(data, built["problem"], built["noise"], built["rule"], built["stop"])
    try:
        sim = cfg.sim_config()
        if gate:
            sim.assumptions().require(force=cfg.force)
    except InvalidConfig as exc:
        raise ValidationError(str(exc)) from None
    return cfg


def parse_config(text: str, gate: bool = True, overrides: dict | None = None) -> ExperimentConfig:
    """Parse YAML text into a validated config.

    ``overrides`` maps dotted keys (e.g. ``"run.n_seeds"``) to values applied
    before validation. ``gate=False`` skips the A5/A6 refusal (used by ``check``).
    """
    try:
        raw = yaml.safe_load(text) if text.strip() else {}
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark is not None else ""
        raise ParseError(f"invalid YAML{where}: {exc.problem}") from None
    except yaml.YAMLError as exc:
        raise ParseError(f"invalid YAML: {exc}") from None
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ValidationError("config: top level must be a mapping")
    for dotted, value in (overrides or {}).items():
        node = raw
        *parents, leaf = dotted.split(".")
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = value
    return build_config(raw, gate=gate)
