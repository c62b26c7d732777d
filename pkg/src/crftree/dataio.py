"""File I/O for the JSON document formats, with canonical serialization.

Writes are canonical (sorted keys, fixed separators, trailing newline), so
re-training with identical inputs produces byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

from pydantic import ValidationError

from .schemas import DatasetDocument, ModelDocument, PredictionsDocument


class DataFormatError(ValueError):
    """A file exists but does not match its schema."""


def canonical_json_bytes(payload: dict) -> bytes:
    return (json.dumps(payload, sort_keys=True, indent=1, separators=(",", ": ")) + "\n").encode()


def _load(path, model_cls):
    p = Path(path)
    try:
        raw = p.read_text()
    except OSError as err:
        raise FileNotFoundError(f"{p}: {err.strerror or err}") from err
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as err:
        raise DataFormatError(f"{p}: invalid JSON: {err}") from err
    try:
        return model_cls.model_validate(data)
    except ValidationError as err:
        raise DataFormatError(f"{p}: {err}") from err


def _save(doc, path):
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_bytes(canonical_json_bytes(doc.model_dump(mode="json")))


def load_dataset(path) -> DatasetDocument:
    return _load(path, DatasetDocument)


def save_dataset(doc: DatasetDocument, path) -> None:
    _save(doc, path)


def load_model(path) -> ModelDocument:
    return _load(path, ModelDocument)


def save_model(doc: ModelDocument, path) -> None:
    _save(doc, path)


def load_predictions(path) -> PredictionsDocument:
    return _load(path, PredictionsDocument)


def save_predictions(doc: PredictionsDocument, path) -> None:
    _save(doc, path)
