"""Experiment configuration: JSON schema, loading and validation."""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from ..errors import InvalidInput

OPERATIONS = ("space-check", "prox", "flow", "ppa", "median", "mean", "center", "mosco", "wijsman", "ar")

SEED_MAX = 2**64 - 1


class ConfigError(InvalidInput):
    """Configuration does not validate; ``path`` locates the offending field."""

    def __init__(self, message, path="$"):
        super().__init__(f"{path}: {message}")
        self.path = path


_positive = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_count = {"type": "integer", "minimum": 1}

SCHEDULE_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["constant", "harmonic", "custom"]},
        "lambda": _positive,
        "c": _positive,
        "values": {"type": "array", "minItems": 1, "items": _positive},
        "divergent": {"type": "boolean"},
    },
    "additionalProperties": False,
    "allOf": [
        {"if": {"properties": {"kind": {"const": "constant"}}}, "then": {"required": ["lambda"]}},
        {"if": {"properties": {"kind": {"const": "custom"}}}, "then": {"required": ["values"]}},
    ],
}

PARAMS_SCHEMA = {
    "type": "object",
    "properties": {
        "lambda": _positive,
        "lambdas": {"type": "array", "minItems": 1, "items": _positive},
        "t": _nonneg,
        "n": _count,
        "N": _count,
        "n_steps": _count,
        "samples": _count,
        "tol": _positive,
        "target_err": _positive,
        "schedule": SCHEDULE_SCHEMA,
        "stationarity_tol": _positive,
        "gap_tol": _positive,
        "t_grid": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "hflow experiment",
    "type": "object",
    "properties": {
        "operation": {"enum": list(OPERATIONS)},
        "space": {"type": "object", "required": ["kind"]},
        "functional": {"type": "object", "required": ["kind"]},
        "x0": {},
        "x": {},
        "reference": {},
        "points": {"type": "array", "minItems": 1},
        "points_csv": {"type": "string"},
        "weights": {"type": "array", "items": _positive},
        "window_start": {"type": "integer", "minimum": 0},
        "probes": {"type": "array"},
        "family": {"type": "object", "required": ["family"]},
        "ar": {"type": "object", "required": ["kind"]},
        "sequence": {"type": "object", "required": ["kind"]},
        "params": PARAMS_SCHEMA,
        "expect": {
            "type": "object",
            "properties": {"final_point": {}, "atol": _positive},
            "additionalProperties": False,
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": SEED_MAX},
        "output": {
            "type": "object",
            "properties": {"trace": {"type": "string"}, "summary": {"type": "string"}},
            "additionalProperties": False,
        },
    },
    "required": ["operation"],
    "additionalProperties": False,
    "allOf": [
        {
            "if": {"properties": {"operation": {"enum": ["space-check", "prox", "flow", "ppa", "median", "mean", "center"]}}},
            "then": {"required": ["space"]},
        },
        {
            "if": {"properties": {"operation": {"enum": ["prox", "flow", "ppa"]}}},
            "then": {"required": ["functional", "x0"]},
        },
        {
            "if": {"properties": {"operation": {"enum": ["median", "mean", "center"]}}},
            "then": {"anyOf": [{"required": ["points"]}, {"required": ["points_csv"]}]},
        },
        {"if": {"properties": {"operation": {"enum": ["mosco", "wijsman"]}}}, "then": {"required": ["family", "x"]}},
        {"if": {"properties": {"operation": {"const": "ar"}}}, "then": {"required": ["ar", "x"]}},
    ],
}

SUMMARY_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "hflow run summary",
    "type": "object",
    "required": ["operation", "status", "seed", "config", "metrics", "artifacts"],
    "properties": {
        "operation": {"enum": list(OPERATIONS)},
        "status": {"enum": ["pass", "fail", "solver-failure"]},
        "seed": {"type": "integer", "minimum": 0, "maximum": SEED_MAX},
        "config": {k: v for k, v in CONFIG_SCHEMA.items() if k != "$schema"},
        "metrics": {"type": "object"},
        "artifacts": {"type": "array", "items": {"type": "string"}},
        "message": {"type": "string"},
    },
    "additionalProperties": False,
}

_validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
_summary_validator = jsonschema.Draft202012Validator(SUMMARY_SCHEMA)


def _json_path(error):
    path = "$"
    for part in error.absolute_path:
        path += f"[{part}]" if isinstance(part, int) else f".{part}"
    return path


def _raise_first(validator, obj):
    errors = list(validator.iter_errors(obj))
    if errors:
        # the deepest error names the field that actually broke
        err = max(errors, key=lambda e: (len(e.absolute_path), e.message))
        raise ConfigError(err.message, _json_path(err))


def validate_config(obj):
    _raise_first(_validator, obj)
    return obj


def validate_summary(obj):
    _raise_first(_summary_validator, obj)
    return obj


def load_config(source):
    """Config from a dict, a JSON string path, or a Path; validated against the schema."""
    if isinstance(source, dict):
        return validate_config(json.loads(json.dumps(source)))
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config: {err}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"invalid JSON at line {err.lineno} column {err.colno}: {err.msg}") from None
    return validate_config(obj)
