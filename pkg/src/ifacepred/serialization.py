"""Shared versioned JSON envelope for every trained model."""

import json
from pathlib import Path

FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


def dumps(model_type: str, payload: dict) -> str:
    doc = {"format_version": FORMAT_VERSION, "model_type": model_type}
    doc.update(payload)
    # sort_keys + repr floats makes re-serialisation byte-identical
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n"


def loads(text: str, expected_type: str = None) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not a model document: {exc}") from exc
    if not isinstance(doc, dict) or "model_type" not in doc:
        raise ModelFormatError("model document lacks a model_type field")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format_version {doc.get('format_version')!r}")
    if expected_type is not None and doc["model_type"] != expected_type:
        raise ModelFormatError(f"expected a {expected_type} model, found {doc['model_type']}")
    return doc


def model_type_of(path) -> str:
    return loads(Path(path).read_text())["model_type"]
