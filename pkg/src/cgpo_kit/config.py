"""JSON experiment configs: schemas, validation and object construction."""

from __future__ import annotations

import hashlib
import json
import math

import jsonschema
import numpy as np

from .presets import STATE_PRESETS, paper_hamiltonian, preset_state
from .qcore import HarmonicHamiltonian, matrix_from_dict, validate_density_matrix


class ConfigError(ValueError):
    code = "schema_violation"


_NUM = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}
_MATRIX = {"type": "array", "items": {"type": "array", "items": _NUM}}

DEFS = {
    "system": {
        "oneOf": [
            {
                "type": "object",
                "properties": {"preset": {"enum": ["paper-qubit"]}},
                "required": ["preset"],
                "additionalProperties": False,
            },
            {
                "type": "object",
                "properties": {
                    "levels": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
                    "delta": {"type": "number", "exclusiveMinimum": 0},
                    "beta": {"type": "number", "minimum": 0},
                },
                "required": ["levels", "delta", "beta"],
                "additionalProperties": False,
            },
        ]
    },
    "state": {
        "oneOf": [
            {"enum": sorted(STATE_PRESETS)},
            {
                "type": "object",
                "properties": {"diag": {"type": "array", "items": _NUM, "minItems": 1}},
                "required": ["diag"],
                "additionalProperties": False,
            },
            {
                "type": "object",
                "properties": {"dim": _POS_INT, "re": _MATRIX, "im": _MATRIX},
                "required": ["re"],
                "additionalProperties": False,
            },
        ]
    },
    "channel": {
        "type": "object",
        "properties": {
            "kind": {"enum": ["identity", "gibbs_replacement", "dephasing", "random_gp", "choi"]},
            "covariant": {"type": "boolean"},
            "choi": {
                "type": "object",
                "properties": {"dim": _POS_INT, "re": _MATRIX, "im": _MATRIX},
                "required": ["re"],
                "additionalProperties": False,
            },
        },
        "required": ["kind"],
        "additionalProperties": False,
    },
    "alpha": {"oneOf": [_NUM, {"enum": ["inf", "-inf"]}]},
}


def _schema(properties: dict, required=()) -> dict:
    props = {"system": {"$ref": "#/$defs/system"}, "seed": {"type": "integer", "minimum": 0}}
    props.update(properties)
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "type": "object",
        "properties": props,
        "required": list(required),
        "additionalProperties": False,
        "$defs": DEFS,
    }


_STATE = {"$ref": "#/$defs/state"}
_TOL = {"type": "number", "exclusiveMinimum": 0}

SCHEMAS = {
    "free-energy": _schema({
        "state": _STATE,
        "alphas": {"type": "array", "items": {"$ref": "#/$defs/alpha"}},
    }, ["state"]),
    "thermomajorize": _schema({"p": _STATE, "p_prime": _STATE, "tol": _TOL}, ["p", "p_prime"]),
    "check-channel": _schema({
        "channel": {"$ref": "#/$defs/channel"},
        "copies": _POS_INT,
        "tol": _TOL,
    }, ["channel"]),
    "feasibility": _schema({
        "rho": _STATE,
        "target": _STATE,
        "epsilon": {"type": "number", "minimum": 0},
        "covariant": {"type": "boolean"},
        "diagonal": {"type": "boolean"},
        "max_iters": _POS_INT,
        "tol": _TOL,
        "minimize": {"type": "boolean"},
        "steps": _POS_INT,
    }, ["rho", "target"]),
    "phase-est": _schema({
        "state": _STATE,
        "copies": {"type": "array", "items": _POS_INT, "minItems": 1},
        "shots": _POS_INT,
        "bins_per_copy": _POS_INT,
    }, ["state", "copies"]),
    "pipeline": _schema({
        "reference": _STATE,
        "target": _STATE,
        "params": {
            "type": "object",
            "properties": {
                "N": _POS_INT, "set_size": _POS_INT, "nu": _POS_INT, "b1": _POS_INT, "b2": _POS_INT,
                "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "L": _POS_INT, "delta1": _TOL, "epsilon": _TOL,
            },
            "required": ["N"],
            "additionalProperties": False,
        },
        "share_estimator": {"type": "boolean"},
        "covariance_check": {
            "type": "object",
            "properties": {"grid": _POS_INT, "inputs": _POS_INT},
            "additionalProperties": False,
        },
        "sweep": {
            "type": "object",
            "properties": {
                "L": {"type": "array", "items": _POS_INT, "minItems": 1},
                "delta1": {"type": "array", "items": _TOL, "minItems": 1},
            },
            "required": ["L", "delta1"],
            "additionalProperties": False,
        },
    }, ["reference", "params"]),
    "catalyst": _schema({
        "rho": _STATE,
        "rho_prime": _STATE,
        "mode": {"enum": ["compile", "convert"]},
        "copies": _POS_INT,
        "epsilon": {"type": "number", "minimum": 0},
        "max_copies": _POS_INT,
        "bisection_steps": _POS_INT,
        "max_iters": _POS_INT,
    }, ["rho", "rho_prime"]),
    "sublinear": _schema({
        "state": _STATE,
        "target": _STATE,
        "N": {"type": "array", "items": _POS_INT, "minItems": 1},
        "M": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "runs": _POS_INT,
        "workers": _POS_INT,
        "L": _POS_INT,
    }, ["state", "N", "M"]),
    "reproduce-example": _schema({
        "c_min": _NUM,
        "c_max": _NUM,
        "c_points": {"type": "integer", "minimum": 2},
        "max_iters": _POS_INT,
    }),
}


def validate(command: str, config: dict) -> dict:
    try:
        jsonschema.validate(config, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    return config


def load(path: str, command: str) -> dict:
    try:
        with open(path) as fh:
            config = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return validate(command, config)


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def system_from(config: dict) -> tuple[HarmonicHamiltonian, float]:
    spec = config.get("system", {"preset": "paper-qubit"})
    if "preset" in spec:
        H = paper_hamiltonian()
    else:
        H = HarmonicHamiltonian(tuple(spec["levels"]), spec["delta"], spec["beta"])
    return H, float(H.beta)


def state_from(spec, dim: int | None = None) -> np.ndarray:
    if isinstance(spec, str):
        rho = preset_state(spec)
    elif "diag" in spec:
        rho = np.diag(np.asarray(spec["diag"], dtype=float)).astype(complex)
    else:
        rho = matrix_from_dict(spec)
    if dim is not None and rho.shape[0] != dim:
        raise ConfigError(f"state has dimension {rho.shape[0]}, system has {dim}")
    try:
        return validate_density_matrix(rho)
    except ValueError as exc:
        raise ConfigError(f"invalid state: {exc}") from None


def alpha_from(value) -> float:
    if value == "inf":
        return math.inf
    if value == "-inf":
        return -math.inf
    return float(value)
