"""Deterministic serialization and minimal schema validation.

Output files must be byte-identical across repeated runs with the same
configuration, so floats are always rendered with %.17g (round-trip
exact for doubles), JSON keys are emitted sorted, and CSV uses a fixed
column order with Unix newlines.

Schema documents live under /schemas in the repository; the validator
here checks required keys and primitive types, which is what the tests
and the CLI need.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .errors import ValidationError

__all__ = [
    "format_float",
    "dumps_json",
    "write_csv",
    "validate_against_schema",
    "load_schema",
]


def format_float(x: float) -> str:
    if isinstance(x, float) and (math.isnan(x) or math.isinf(x)):
        return '"%s"' % repr(x)
    return format(float(x), ".17g")


def _emit(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_emit(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: kv[0])
        return "{" + ",".join(json.dumps(k) + ":" + _emit(v) for k, v in items) + "}"
    raise ValidationError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj) -> str:
    """Deterministic JSON: sorted keys, %.17g floats, compact separators."""
    return _emit(obj) + "\n"


def write_csv(path_or_handle, header: list[str], rows: list[list]) -> str:
    """Render rows with %.17g floats; returns the text (and writes it)."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, bool):
                cells.append("1" if v else "0")
            elif isinstance(v, float):
                cells.append(format(v, ".17g"))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if path_or_handle is not None:
        if hasattr(path_or_handle, "write"):
            path_or_handle.write(text)
        else:
            Path(path_or_handle).write_text(text)
    return text


_TYPES = {
    "object": dict,
    "array": list,
    "string": str,
    "boolean": bool,
}


def _check(node, schema, path: str):
    stype = schema.get("type")
    if stype == "number":
        if not isinstance(node, (int, float)) or isinstance(node, bool):
            raise ValidationError(f"{path}: expected number, got {type(node).__name__}")
        return
    if stype == "integer":
        if not isinstance(node, int) or isinstance(node, bool):
            raise ValidationError(f"{path}: expected integer, got {type(node).__name__}")
        return
    if stype in _TYPES and not isinstance(node, _TYPES[stype]):
        raise ValidationError(f"{path}: expected {stype}, got {type(node).__name__}")
    if stype == "object":
        for key in schema.get("required", []):
            if key not in node:
                raise ValidationError(f"{path}: missing required key {key!r}")
        props = schema.get("properties", {})
        for key, sub in props.items():
            if key in node:
                _check(node[key], sub, f"{path}.{key}")
    if stype == "array" and "items" in schema:
        for i, item in enumerate(node):
            _check(item, schema["items"], f"{path}[{i}]")
    if "enum" in schema and node not in schema["enum"]:
        raise ValidationError(f"{path}: {node!r} not in {schema['enum']}")


def schemas_dir() -> Path:
    here = Path(__file__).resolve()
    for parent in here.parents:
        cand = parent / "schemas"
        if cand.is_dir():
            return cand
    raise ValidationError("schemas directory not found")


def load_schema(name: str) -> dict:
    path = schemas_dir() / f"{name}.schema.json"
    return json.loads(path.read_text())


def validate_against_schema(doc: dict, schema_name: str) -> None:
    _check(doc, load_schema(schema_name), path=schema_name)
