"""Pinhole intrinsics records and their JSON form.

A file holds either one shared record ``{"fx":..,"fy":..,"cx":..,"cy":..,
"width":..,"height":..}`` or a per-frame array of the same records, each
extended with a ``frame_id``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import ParseError, SchemaError

_FIELDS = ("fx", "fy", "cx", "cy", "width", "height")


@dataclass(frozen=True)
class IntrinsicsRecord:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        object.__setattr__(self, "fx", float(self.fx))
        object.__setattr__(self, "fy", float(self.fy))
        object.__setattr__(self, "cx", float(self.cx))
        object.__setattr__(self, "cy", float(self.cy))
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        if self.fx <= 0 or self.fy <= 0:
            raise SchemaError("fx/fy", f"focal lengths must be positive, got ({self.fx}, {self.fy})")
        if self.width <= 0 or self.height <= 0:
            raise SchemaError("width/height", f"image size must be positive, got {self.width}x{self.height}")
        if not 0 < self.cx < self.width:
            raise SchemaError("cx", f"principal point x {self.cx} outside (0, {self.width})")
        if not 0 < self.cy < self.height:
            raise SchemaError("cy", f"principal point y {self.cy} outside (0, {self.height})")


def _record_from_dict(obj: dict, loc: str) -> IntrinsicsRecord:
    missing = [k for k in _FIELDS if k not in obj]
    if missing:
        raise SchemaError(f"{loc}.{missing[0]}" if loc else missing[0], "missing required field")
    try:
        return IntrinsicsRecord(*(obj[k] for k in _FIELDS))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(loc or "$", f"non-numeric intrinsics field: {exc}") from None


def read_intrinsics(path):
    """Read intrinsics JSON; returns a record or a {frame_id: record} dict."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"intrinsics file is not valid JSON: {exc}") from None
    if isinstance(obj, dict):
        return _record_from_dict(obj, "")
    if isinstance(obj, list):
        records = {}
        for i, entry in enumerate(obj):
            loc = f"[{i}]"
            if not isinstance(entry, dict):
                raise SchemaError(loc, "must be an object")
            if "frame_id" not in entry:
                raise SchemaError(f"{loc}.frame_id", "missing required field")
            fid = entry["frame_id"]
            if isinstance(fid, bool) or not isinstance(fid, int):
                raise SchemaError(f"{loc}.frame_id", "must be an integer")
            if fid in records:
                raise SchemaError(f"{loc}.frame_id", f"duplicate id {fid}")
            records[fid] = _record_from_dict(entry, loc)
        return records
    raise SchemaError("$", "intrinsics must be an object or a per-frame array")


def write_intrinsics(record: IntrinsicsRecord, path) -> None:
    payload = {k: getattr(record, k) for k in _FIELDS}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
