"""Scenario files (YAML), CSV logs and metric summaries.

A scenario file is a mapping with ``schema_version`` and ``scenario`` keys.
Field names and units match :class:`robustqp.sim.Scenario`; unknown keys are
rejected so that typos never pass silently.
"""

from __future__ import annotations

import dataclasses
import types
import typing
from pathlib import Path

import numpy as np
import yaml

from .plant import ServoParams
from .sim import (
    BarrierConfig,
    Disturbance,
    GainRamp,
    Metrics,
    PostureConfig,
    Scenario,
    Setpoint,
    SimLog,
    TaskConfig,
)

SCHEMA_VERSION = 1
FLOAT_FORMAT = "%.17g"

_NESTED = {
    "servos": ServoParams,
    "tasks": TaskConfig,
    "setpoints": Setpoint,
    "barriers": BarrierConfig,
    "disturbances": Disturbance,
    "gain_ramp": GainRamp,
    "posture": PostureConfig,
}


class ScenarioParseError(ValueError):
    """The scenario file is malformed or does not match the schema."""


def _plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (tuple, list)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def scenario_to_dict(s: Scenario) -> dict:
    return {"schema_version": SCHEMA_VERSION, "scenario": _plain(s)}


def dump_scenario(s: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(s), sort_keys=False)


def _is_tuple_type(tp) -> bool:
    origin = typing.get_origin(tp)
    if origin is tuple:
        return True
    if origin in (typing.Union, types.UnionType):
        return any(_is_tuple_type(a) for a in typing.get_args(tp))
    return False


def _build(cls, data, where: str):
    if not isinstance(data, dict):
        raise ScenarioParseError(f"{where}: expected a mapping, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ScenarioParseError(f"{where}: unknown key(s) {', '.join(unknown)}")
    kwargs = {}
    for name, f in fields.items():
        if name not in data:
            if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
                raise ScenarioParseError(f"{where}.{name}: required field missing")
            continue
        value = data[name]
        path = f"{where}.{name}"
        if name in _NESTED and value is not None:
            sub = _NESTED[name]
            if isinstance(value, list):
                value = tuple(_build(sub, v, f"{path}[{i}]") for i, v in enumerate(value))
            else:
                value = _build(sub, value, path)
        elif isinstance(value, list):
            if not _is_tuple_type(hints[name]):
                raise ScenarioParseError(f"{path}: a list is not allowed here")
            value = tuple(value)
        elif value is not None and _is_tuple_type(hints[name]) and not isinstance(value, tuple):
            raise ScenarioParseError(f"{path}: expected a list")
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ScenarioParseError(f"{where}: {exc}") from exc


def scenario_from_dict(doc) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioParseError("document root must be a mapping")
    unknown = sorted(set(doc) - {"schema_version", "scenario"})
    if unknown:
        raise ScenarioParseError(f"unknown top-level key(s) {', '.join(unknown)}")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ScenarioParseError(f"schema_version: expected {SCHEMA_VERSION}, got {version!r}")
    if "scenario" not in doc:
        raise ScenarioParseError("scenario: section missing")
    return _build(Scenario, doc["scenario"], "scenario")


def parse_scenario(text: str) -> Scenario:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioParseError(f"YAML syntax error: {exc}") from exc
    return scenario_from_dict(doc)


def load_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read {path}: {exc}") from exc
    return parse_scenario(text)


def write_log_csv(log: SimLog, path) -> None:
    np.savetxt(path, log.data, delimiter=",", header=",".join(log.columns), comments="", fmt=FLOAT_FORMAT)


def read_log_csv(path) -> tuple[tuple[str, ...], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return tuple(header), data


def dump_metrics(m: Metrics, extra: dict | None = None) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "metrics": m.as_dict()}
    if extra:
        doc.update(extra)
    return yaml.safe_dump(doc, sort_keys=False)
