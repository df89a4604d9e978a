"""CSV and JSON emission helpers shared by the library and the CLI.

All numeric fields are written with 17 significant digits so that emitted
files round-trip through float parsing exactly and byte-level diffs of
re-runs are meaningful.  Files are written atomically (temp file in the
destination directory, then rename).
"""

from __future__ import annotations

import json
import os
import tempfile


def fmt(value) -> str:
    """Render a cell: floats at full precision, everything else via str."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def render_csv(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(c) for c in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_text_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv_atomic(path: str, header, rows) -> None:
    write_text_atomic(path, render_csv(header, rows))


def write_json_atomic(path: str, payload: dict) -> None:
    write_text_atomic(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
