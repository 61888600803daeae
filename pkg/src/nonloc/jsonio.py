"""JSON file loading with schema checks whose diagnostics point at a line and column."""

from __future__ import annotations

import json
import re
from json.decoder import scanstring
from pathlib import Path

import jsonschema

from .errors import StructuralError

_NUMBER = re.compile(r"-?(?:0|[1-9]\d*)(?:\.\d+)?(?:[eE][-+]?\d+)?")
_WS = re.compile(r"[ \t\n\r]*")

_PROB = {"oneOf": [{"type": "string", "pattern": r"^-?\d+(/\d+)?$"}, {"type": "number"}, {"type": "integer"}]}
_INTS = {"type": "array", "items": {"type": "integer", "minimum": 0}}

BEHAVIOR_SCHEMA = {
    "type": "object",
    "required": ["scenario", "table"],
    "properties": {
        "scenario": {
            "type": "object",
            "required": ["settings", "outcomes"],
            "properties": {"settings": {**_INTS, "minItems": 1}, "outcomes": {**_INTS, "minItems": 1}},
        },
        "mode": {"enum": ["rational", "float"]},
        "table": {
            "type": "array",
            "items": {"type": "object", "required": ["x", "a", "p"],
                      "properties": {"x": _INTS, "a": _INTS, "p": _PROB}},
        },
    },
}

_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

STATE_SCHEMA = {
    "type": "object",
    "required": ["dims"],
    "properties": {
        "dims": {**_INTS, "minItems": 1},
        "amplitudes": {"type": "array", "items": _COMPLEX},
        "density": {"type": "array", "items": {"type": "array", "items": _COMPLEX}},
    },
    "oneOf": [{"required": ["amplitudes"]}, {"required": ["density"]}],
}

MEASUREMENT_SCHEMA = {
    "type": "object",
    "required": ["parties"],
    "properties": {
        "parties": {"type": "array", "minItems": 1, "items": {
            "type": "array", "minItems": 1, "items": {
                "type": "array", "minItems": 1, "items": {
                    "type": "array", "items": {"type": "array", "items": _COMPLEX}}}}},
    },
}

_STEP = {
    "type": "object",
    "required": ["party", "observable"],
    "properties": {
        "party": {"type": "integer", "minimum": 0},
        "observable": {"type": "string"},
        "condition": {"type": "object", "required": ["step", "equals"],
                      "properties": {"step": {"type": "integer"}, "equals": {"enum": [0, 1]}}},
    },
}

SMOLIN_PROTOCOL_SCHEMA = {
    "type": "object",
    "required": ["pairs", "qubits"],
    "properties": {
        "qubits": {"type": "integer"},
        "pairs": {"type": "object", "additionalProperties": {
            "type": "object",
            "required": ["pair", "targets", "steps"],
            "properties": {
                "pair": {**_INTS, "minItems": 2, "maxItems": 2},
                "targets": {"type": "array", "minItems": 2, "maxItems": 2, "items": _INTS},
                "steps": {"type": "array", "items": _STEP},
            },
        }},
    },
}

ADJACENCY_SCHEMA = {
    "type": "object",
    "required": ["adjacency"],
    "properties": {"adjacency": {"type": "array", "items": {"type": "array", "items": {"enum": [0, 1]}}}},
}


def locate(text: str) -> dict[tuple, int]:
    """Map each JSON path (tuple of keys / indices) to the offset where its value starts."""
    spots: dict[tuple, int] = {}

    def value(i: int, path: tuple) -> int:
        i = _WS.match(text, i).end()
        spots[path] = i
        c = text[i:i + 1]
        if c == "{":
            i = _WS.match(text, i + 1).end()
            if text[i:i + 1] == "}":
                return i + 1
            while True:
                key, i = scanstring(text, _WS.match(text, i).end() + 1)
                i = _WS.match(text, i).end() + 1  # colon
                i = value(i, path + (key,))
                i = _WS.match(text, i).end()
                if text[i] == "}":
                    return i + 1
                i += 1
        if c == "[":
            i = _WS.match(text, i + 1).end()
            if text[i:i + 1] == "]":
                return i + 1
            k = 0
            while True:
                i = value(i, path + (k,))
                i = _WS.match(text, i).end()
                if text[i] == "]":
                    return i + 1
                i, k = i + 1, k + 1
        if c == '"':
            return scanstring(text, i + 1)[1]
        for lit in ("true", "false", "null"):
            if text.startswith(lit, i):
                return i + len(lit)
        m = _NUMBER.match(text, i)
        return m.end() if m else i + 1

    value(0, ())
    return spots


def _line_col(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    return line, offset - (text.rfind("\n", 0, offset) + 1) + 1


def position_of(text: str, path) -> tuple[int, int]:
    """Line and column of the deepest existing prefix of ``path``."""
    spots = locate(text)
    path = tuple(path)
    while path not in spots:
        path = path[:-1]
    return _line_col(text, spots[path])


def parse(text: str, schema: dict | None = None, source: str = "<input>"):
    """Decode ``text`` and validate it against ``schema``; errors name ``source:line:col``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StructuralError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    if schema is not None:
        err = jsonschema.exceptions.best_match(jsonschema.Draft202012Validator(schema).iter_errors(doc))
        if err is not None:
            line, col = position_of(text, err.absolute_path)
            where = "/".join(map(str, err.absolute_path)) or "<root>"
            raise StructuralError(f"{source}:{line}:{col}: at {where}: {err.message}")
    return doc


def load(path, schema: dict | None = None):
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise StructuralError(f"cannot read {p}: {exc.strerror}") from None
    return parse(text, schema, str(p))


def dumps(doc) -> str:
    """Deterministic serialization used for every artifact."""
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"
