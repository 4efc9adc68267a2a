"""Deterministic JSON/CSV writers.

Reports must be reproducible byte-for-byte, so floats are rendered with a
fixed 17-significant-digit format and dict keys keep insertion order.
Files are written atomically (temp file + rename).
"""
from __future__ import annotations

import math
import os
import tempfile

FLOAT_FMT = "%.17g"


def format_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return FLOAT_FMT % x


def to_json_text(obj, indent: int = 2) -> str:
    out: list[str] = []
    _encode(obj, out, indent, 0)
    out.append("\n")
    return "".join(out)


def _encode(obj, out: list, indent: int, depth: int) -> None:
    pad = " " * (indent * (depth + 1))
    end_pad = " " * (indent * depth)
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append(_escape(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.append(pad)
            out.append(_escape(str(k)))
            out.append(": ")
            _encode(v, out, indent, depth + 1)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end_pad + "}")
    elif isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            out.append("[]")
            return
        out.append("[\n")
        for i, v in enumerate(seq):
            out.append(pad)
            _encode(v, out, indent, depth + 1)
            out.append(",\n" if i < len(seq) - 1 else "\n")
        out.append(end_pad + "]")
    else:
        # numpy scalars and arrays
        item = getattr(obj, "item", None)
        if item is not None and getattr(obj, "ndim", 1) == 0:
            _encode(obj.item(), out, indent, depth)
        elif hasattr(obj, "tolist"):
            _encode(obj.tolist(), out, indent, depth)
        else:
            raise TypeError(f"cannot serialize {type(obj)!r}")


_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def _escape(s: str) -> str:
    chunks = ['"']
    for ch in s:
        if ch in _ESCAPES:
            chunks.append(_ESCAPES[ch])
        elif ord(ch) < 0x20:
            chunks.append("\\u%04x" % ord(ch))
        else:
            chunks.append(ch)
    chunks.append('"')
    return "".join(chunks)


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, obj) -> None:
    _atomic_write(path, to_json_text(obj))


def write_csv(path: str, header: list, rows: list) -> None:
    lines = [",".join(str(h) for h in header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, float):
                cells.append(format_float(cell))
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    _atomic_write(path, "\n".join(lines) + "\n")
