"""CSV and JSON emission with a provenance header."""

import csv
import enum
import io
import json
import math
from pathlib import Path

import numpy as np

from . import __version__

ARTIFACT = "dirichlet-lab"


def _plain(value):
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    return value


def _cell(value):
    value = _plain(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if isinstance(value, list):
        return " ".join(_cell(v) for v in value)
    return "" if value is None else str(value)


def header_line(config):
    cfg = json.dumps(_plain(config), sort_keys=True, separators=(",", ":"))
    return f"# {ARTIFACT} {__version__} config={cfg}"


def render_csv(rows, columns, config):
    """CSV text: one provenance comment line, a header row, then the data rows."""
    buf = io.StringIO()
    buf.write(header_line(config) + "\n")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def render_json(rows, columns, config):
    doc = {
        "artifact": ARTIFACT,
        "version": __version__,
        "config": _plain(config),
        "columns": list(columns),
        "rows": [{c: _plain(r.get(c)) for c in columns} for r in rows],
    }
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=True) + "\n"


def write_table(rows, columns, config, out=None, fmt="csv"):
    """Render rows and write them to ``out`` (a path) or return the text."""
    text = render_csv(rows, columns, config) if fmt == "csv" else render_json(rows, columns, config)
    if out is not None:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def read_csv(path):
    """Parse a file written by :func:`write_table`; returns ``(config, rows)``."""
    with open(path, encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError("missing provenance line")
        config = json.loads(first.split("config=", 1)[1])
        rows = list(csv.DictReader(fh))
    return config, rows
