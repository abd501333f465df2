"""JSON model files.

::

    {"agents": m,
     "time_clusters": [{"states": ["a", "b"], "partitions": [[["a", "b"]], ...]}, ...],
     "gaps": [{"chains": [{"clusters": [cluster, ...]}, ...]}, ...],
     "loop": null | L,
     "valuation": {"x1": ["t0.a", "g0.0.0.c"], ...}}

An optional ``"bridge_gaps": false`` disables the direct C(i) -> C(i+1) links.
"""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from .frames import Chain, Cluster, FrameSpec, validate
from .semantics import EvaluationError, Model


class ModelFileError(ValueError):
    pass


_CLUSTER = {
    "type": "object",
    "required": ["states", "partitions"],
    "additionalProperties": False,
    "properties": {
        "states": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "partitions": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "array", "items": {"type": "string"}}},
        },
    },
}

SCHEMA = {
    "type": "object",
    "required": ["agents", "time_clusters", "gaps", "loop", "valuation"],
    "additionalProperties": False,
    "properties": {
        "agents": {"type": "integer", "minimum": 1},
        "time_clusters": {"type": "array", "items": _CLUSTER, "minItems": 1},
        "gaps": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["chains"],
                "additionalProperties": False,
                "properties": {"chains": {"type": "array", "items": {
                    "type": "object",
                    "required": ["clusters"],
                    "additionalProperties": False,
                    "properties": {"clusters": {"type": "array", "items": _CLUSTER, "minItems": 1}},
                }}},
            },
        },
        "loop": {"type": ["integer", "null"], "minimum": 0},
        "valuation": {
            "type": "object",
            "patternProperties": {r"^x[1-9][0-9]*$": {"type": "array", "items": {"type": "string"}}},
            "additionalProperties": False,
        },
        "bridge_gaps": {"type": "boolean"},
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def _cluster(d: dict) -> Cluster:
    return Cluster.of(d["states"], d["partitions"])


def model_from_dict(data) -> Model:
    errors = sorted(_VALIDATOR.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ModelFileError(f"schema violation at {path}: {e.message}")
    spec = FrameSpec(
        agents=data["agents"],
        time_clusters=tuple(_cluster(c) for c in data["time_clusters"]),
        gaps=tuple(tuple(Chain(tuple(_cluster(c) for c in ch["clusters"])) for ch in g["chains"])
                   for g in data["gaps"]),
        loop=data["loop"],
        bridge_gaps=data.get("bridge_gaps", True),
    )
    problems = validate(spec)
    if problems:
        if any("partitions for" in p for p in problems):
            raise ModelFileError("agent-count mismatch: " + "; ".join(problems))
        raise ModelFileError("invalid frame: " + "; ".join(problems))
    valuation = {int(k[1:]): v for k, v in data["valuation"].items()}
    try:
        return Model(spec, valuation)
    except EvaluationError as e:
        raise ModelFileError(str(e)) from None


def _cluster_dict(c: Cluster) -> dict:
    return {"states": list(c.states), "partitions": [[list(b) for b in p] for p in c.partitions]}


def model_to_dict(model: Model) -> dict:
    spec = model.spec
    order = {s: k for k, s in enumerate(spec.state_names())}
    out = {
        "agents": spec.agents,
        "time_clusters": [_cluster_dict(c) for c in spec.time_clusters],
        "gaps": [{"chains": [{"clusters": [_cluster_dict(c) for c in ch.clusters]} for ch in g]}
                 for g in spec.gaps],
        "loop": spec.loop,
        "valuation": {f"x{v}": sorted(states, key=order.__getitem__)
                      for v, states in sorted(model.valuation.items())},
    }
    if not spec.bridge_gaps:
        out["bridge_gaps"] = False
    return out


def load_model(path) -> Model:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ModelFileError(f"cannot read {path}: {e.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFileError(f"{path}: not JSON ({e.msg} at line {e.lineno})") from None
    return model_from_dict(data)


def dumps_model(model: Model) -> str:
    return json.dumps(model_to_dict(model), indent=2)


def save_model(model: Model, path) -> None:
    Path(path).write_text(dumps_model(model) + "\n", encoding="utf-8")

