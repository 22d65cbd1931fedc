"""Sparse JSON instance files with exact rational values.

Quadratic::

    {"format": "qtsp-quad-v1", "n": 5,
     "entries": [{"i": 1, "j": 2, "k": 3, "l": 4, "v": "7/2"}, ...]}

Linear::

    {"format": "qtsp-lin-v1", "n": 5, "entries": [{"i": 1, "j": 2, "v": "3"}, ...]}

Nodes are 1-based and unlisted cells are zero. Values are integers or
strings ``"p"`` / ``"p/q"``; floats are refused. An optional ``"meta"``
object (family, seed) is carried through untouched.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Optional

from qtsplin.model import (
    Arc,
    InputError,
    LinearCostMatrix,
    QuadraticCostMatrix,
    check_arc,
    format_rational,
    to_rational,
)

QUAD_FORMAT = "qtsp-quad-v1"
LIN_FORMAT = "qtsp-lin-v1"


def _node(entry: dict, key: str) -> int:
    value = entry.get(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise InputError(f"entry {entry}: field {key!r} must be an integer node index")
    return value


def _header(doc: Any, expected: str) -> int:
    if not isinstance(doc, dict):
        raise InputError("instance file must hold a JSON object")
    if doc.get("format") != expected:
        raise InputError(f"expected format {expected!r}, got {doc.get('format')!r}")
    n = doc.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise InputError(f"'n' must be a positive integer, got {n!r}")
    if not isinstance(doc.get("entries", []), list):
        raise InputError("'entries' must be a list")
    meta = doc.get("meta")
    if meta is not None and not isinstance(meta, dict):
        raise InputError("'meta' must be an object when present")
    return n


def _value(entry: dict):
    if "v" not in entry:
        raise InputError(f"entry {entry} has no value 'v'")
    try:
        return to_rational(entry["v"])
    except (InputError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"entry {entry}: {exc}") from exc


def quad_from_dict(doc: Any) -> tuple[QuadraticCostMatrix, Optional[dict]]:
    n = _header(doc, QUAD_FORMAT)
    cells = {}
    for entry in doc.get("entries", []):
        if not isinstance(entry, dict):
            raise InputError(f"entry {entry!r} is not an object")
        e = Arc(_node(entry, "i"), _node(entry, "j"))
        f = Arc(_node(entry, "k"), _node(entry, "l"))
        check_arc(e, n)
        check_arc(f, n)
        if (e, f) in cells:
            raise InputError(f"duplicate cell {tuple(e)},{tuple(f)}")
        cells[e, f] = _value(entry)
    return QuadraticCostMatrix(n, cells), doc.get("meta")


def lin_from_dict(doc: Any) -> tuple[LinearCostMatrix, Optional[dict]]:
    n = _header(doc, LIN_FORMAT)
    values = {}
    for entry in doc.get("entries", []):
        if not isinstance(entry, dict):
            raise InputError(f"entry {entry!r} is not an object")
        a = Arc(_node(entry, "i"), _node(entry, "j"))
        check_arc(a, n)
        if a in values:
            raise InputError(f"duplicate cell {tuple(a)}")
        values[a] = _value(entry)
    return LinearCostMatrix.from_entries(n, values), doc.get("meta")


def quad_to_dict(Q: QuadraticCostMatrix, meta: Optional[dict] = None) -> dict:
    entries = [
        {"i": e.tail, "j": e.head, "k": f.tail, "l": f.head, "v": format_rational(v)}
        for (e, f), v in Q.items()
    ]
    doc = {"format": QUAD_FORMAT, "n": Q.n, "entries": entries}
    if meta:
        doc["meta"] = meta
    return doc


def lin_to_dict(C: LinearCostMatrix, meta: Optional[dict] = None) -> dict:
    entries = [
        {"i": a.tail, "j": a.head, "v": format_rational(v)}
        for a, v in C.entries()
        if v != 0
    ]
    doc = {"format": LIN_FORMAT, "n": C.n, "entries": entries}
    if meta:
        doc["meta"] = meta
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _load(path: str | Path) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


def read_quadratic(path: str | Path) -> tuple[QuadraticCostMatrix, Optional[dict]]:
    return quad_from_dict(_load(path))


def read_linear(path: str | Path) -> tuple[LinearCostMatrix, Optional[dict]]:
    return lin_from_dict(_load(path))


def write_quadratic(path: str | Path, Q: QuadraticCostMatrix, meta: Optional[dict] = None) -> None:
    Path(path).write_text(dumps(quad_to_dict(Q, meta)))


def write_linear(path: str | Path, C: LinearCostMatrix, meta: Optional[dict] = None) -> None:
    Path(path).write_text(dumps(lin_to_dict(C, meta)))
