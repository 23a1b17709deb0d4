"""Line-delimited record (JSONL) I/O shared by every pipeline stage.

Every output file the pipeline writes starts with a metadata header line
(``{"_meta": {...}}``) carrying config hash, seeds and tool version so a run
can be reproduced.  Readers skip the header transparently.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Iterable, Iterator

from transec import __version__


class RecordError(Exception):
    """A malformed line in a record file.  Carries the 1-based line number."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


def read_records(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield (line_no, record) for each non-meta line of a JSONL file."""
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordError(f"invalid JSON: {exc}", line_no) from exc
            if not isinstance(obj, dict):
                raise RecordError("record is not an object", line_no)
            if "_meta" in obj:
                continue
            yield line_no, obj


def read_meta(path: str | Path) -> dict | None:
    """Return the metadata header of a record file, if present."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
    if not first:
        return None
    try:
        obj = json.loads(first)
    except json.JSONDecodeError:
        return None
    if isinstance(obj, dict) and "_meta" in obj:
        return obj["_meta"]
    return None


def make_meta(config: dict | None = None, seeds: dict | None = None, **extra: Any) -> dict:
    meta: dict[str, Any] = {"tool_version": __version__}
    if config is not None:
        meta["config_hash"] = config_hash(config)
    if seeds:
        meta["seeds"] = seeds
    meta.update(extra)
    return meta


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def write_records(
    path: str | Path,
    records: Iterable[dict],
    meta: dict | None = None,
) -> int:
    """Write records as JSONL, with an optional metadata header line.

    Returns the number of data records written.
    """
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        if meta is not None:
            fh.write(json.dumps({"_meta": meta}, sort_keys=True) + "\n")
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
            count += 1
    return count
