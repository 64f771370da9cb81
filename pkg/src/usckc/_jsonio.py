"""Shared JSON loading helpers for the asset file loaders."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .errors import AssetError


def _reject_duplicate_keys(pairs):
    seen = {}
    for key, value in pairs:
        if key in seen:
            raise ValueError(f"duplicate key {key!r}")
        seen[key] = value
    return seen


def read_json(path: str | Path, *, kind: str) -> Any:
    """Read a JSON document, mapping I/O and parse failures to AssetError."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise AssetError(f"cannot read {kind} file {path}: {exc}") from exc
    try:
        return json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except ValueError as exc:
        raise AssetError(f"{kind} file {path} is not valid JSON: {exc}") from exc


def read_json_lines(path: str | Path, *, kind: str) -> list[tuple[int, Any]]:
    """Read a JSONL document; returns (1-based line number, parsed object) pairs."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise AssetError(f"cannot read {kind} file {path}: {exc}") from exc
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append((lineno, json.loads(line, object_pairs_hook=_reject_duplicate_keys)))
        except ValueError as exc:
            raise AssetError(
                f"{kind} file {path} line {lineno} is not valid JSON: {exc}"
            ) from exc
    return out


def write_json(path: str | Path, payload: Any) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def compact_json(payload: Any) -> str:
    """Canonical single-line rendering used for line-delimited exports."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))
