"""Round-trip serialisation: every float as 17 significant digits."""

from __future__ import annotations

import io
import math
import os
import tempfile
from contextlib import contextmanager
from enum import Enum


def fmt_number(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        raise ValueError(f"non-finite value {x!r} cannot be serialised")
    return "%.17g" % x


def _json_value(value):
    if value is None:
        return "null"
    if isinstance(value, Enum):
        value = value.value
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    return fmt_number(value)


def json_text(record: dict) -> str:
    """Flat JSON object, keys in the given order, one field per line."""
    body = ",\n".join(f'  "{k}": {_json_value(v)}' for k, v in record.items())
    return "{\n" + body + "\n}\n"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_csv_cell(v) for v in row) + "\n")
    return buf.getvalue()


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, str):
        return value
    return fmt_number(value)


@contextmanager
def atomic_writer(path):
    """Write to a temporary file next to ``path`` and rename on success."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            yield handle
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def json_rows_text(rows) -> str:
    """JSON array of flat objects, one object per line."""
    body = ",\n".join(
        "  {" + ", ".join(f'"{k}": {_json_value(v)}' for k, v in r.items()) + "}"
        for r in rows
    )
    return "[\n" + body + "\n]\n"
