"""Config validation for the command-line runner.

Every subcommand owns a flat JSON schema; unknown keys are rejected so a
typo in a config file fails loudly instead of silently running defaults.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import jsonschema

_COMMON = {
    "seed": {"type": "integer", "minimum": 0},
    "out": {"type": "string"},
    "verify": {"type": "boolean"},
    "tol": {"type": "number", "exclusiveMinimum": 0},
}

_POS_INT = {"type": "integer", "minimum": 1}
_POS_NUM = {"type": "number", "exclusiveMinimum": 0}
_GROWTH = {"type": "number", "exclusiveMinimum": 1}


def _schema(extra: dict, required: list[str]) -> dict:
    return {
        "type": "object",
        "properties": {**_COMMON, **extra},
        "required": required,
        "additionalProperties": False,
    }


SCHEMAS: dict[str, dict] = {
    "approx-strong": _schema({
        "dim": _POS_INT,
        "R": _GROWTH,
        "n_controls": _POS_INT,
        "epsilon": _POS_NUM,
    }, ["dim", "R", "n_controls", "epsilon"]),
    "approx-weak": _schema({
        "dim": _POS_INT,
        "R": _GROWTH,
        "n_pairs": _POS_INT,
        "epsilon": _POS_NUM,
        "supercyclic": {"type": "boolean"},
    }, ["dim", "n_pairs", "epsilon"]),
    "cyclic-unitary": _schema({
        "d": _POS_INT,
        "truncation": {"type": "integer", "minimum": 0},
        "precision_bits": {"type": "integer", "minimum": 64},
        "mode": {"enum": ["roots", "random"]},
    }, ["d", "truncation"]),
    "independence": _schema({
        "dim": _POS_INT,
        "epsilon": _POS_NUM,
        "trials": _POS_INT,
    }, ["dim", "epsilon"]),
    "orbit": _schema({
        "dim": _POS_INT,
        "steps": {"type": "integer", "minimum": 0},
        "norm": _POS_NUM,
        "figure": {"type": "boolean"},
    }, ["dim", "steps"]),
    "density": _schema({
        "dim": _POS_INT,
        "steps": {"type": "integer", "minimum": 0},
        "n_probes": _POS_INT,
        "radius": _POS_NUM,
        "mode": {"enum": ["exact", "projective"]},
        "figure": {"type": "boolean"},
    }, ["dim", "steps", "n_probes", "radius"]),
    "drive": _schema({
        "dim": _POS_INT,
        "n_targets": _POS_INT,
        "R": _GROWTH,
        "epsilon": _POS_NUM,
    }, ["dim", "n_targets", "epsilon"]),
    "prop2-check": _schema({
        "dim": _POS_INT,
        "trials": _POS_INT,
        "l_max": _POS_INT,
    }, ["trials"]),
    "suite": _schema({}, []),
}


class ConfigError(ValueError):
    """Invalid configuration; the CLI maps this to exit code 1."""


@dataclass
class ExperimentConfig:
    subcommand: str
    params: dict

    def digest(self) -> str:
        canon = json.dumps({"subcommand": self.subcommand, **self.params},
                           sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()


def validate_config(subcommand: str, params: dict) -> ExperimentConfig:
    if subcommand not in SCHEMAS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    validator = jsonschema.Draft202012Validator(SCHEMAS[subcommand])
    errors = sorted(validator.iter_errors(params), key=lambda e: list(e.path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {e.message}")
    return ExperimentConfig(subcommand=subcommand, params=dict(params))


def load_config_file(subcommand: str, path: str) -> ExperimentConfig:
    """Parse and validate a JSON config, reporting line/column on bad JSON."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        params = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(
            f"{path}: invalid JSON at line {e.lineno} column {e.colno}: "
            f"{e.msg}") from e
    if not isinstance(params, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return validate_config(subcommand, params)
