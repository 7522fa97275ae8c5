import csv
import io
import json
import math

import numpy as np

from dirichlet_lab import __version__
from dirichlet_lab.io import header_line, read_csv, render_csv, render_json, write_table
from dirichlet_lab.scan import Status


def test_header_echoes_config_and_version():
    line = header_line({"m": 1, "psi": "powerlog:1,0", "arr": np.array([1, 2])})
    assert line.startswith(f"# dirichlet-lab {__version__} config=")
    assert json.loads(line.split("config=", 1)[1]) == {"arr": [1, 2], "m": 1, "psi": "powerlog:1,0"}


def test_csv_is_rfc4180_after_the_comment():
    rows = [{"a": 1.5, "b": "x,y", "c": np.array([1, 2])}, {"a": math.inf, "b": 'say "hi"', "c": None}]
    text = render_csv(rows, ["a", "b", "c"], {"k": 1})
    body = text.split("\n", 1)[1]
    assert body.endswith("\r\n")
    parsed = list(csv.reader(io.StringIO(body)))
    assert parsed == [["a", "b", "c"], ["1.5", "x,y", "1 2"], ["inf", 'say "hi"', ""]]


def test_float_cells_round_trip_exactly():
    x = 0.1 + 0.2
    text = render_csv([{"v": x}], ["v"], {})
    assert float(text.splitlines()[-1]) == x


def test_enum_cells():
    text = render_csv([{"s": Status.FAILS_AT}], ["s"], {})
    assert text.splitlines()[-1] == "FailsAt"


def test_json_document():
    doc = json.loads(render_json([{"a": np.float64(2.0), "b": np.int64(3)}], ["a", "b"], {"seed": 1}))
    assert doc["rows"] == [{"a": 2.0, "b": 3}] and doc["config"] == {"seed": 1}
    assert doc["version"] == __version__


def test_write_and_read_back(tmp_path):
    out = tmp_path / "sub" / "t.csv"
    text = write_table([{"x": 1, "y": 2.5}], ["x", "y"], {"m": 2}, out)
    assert out.read_bytes() == text.encode("utf-8")
    config, rows = read_csv(out)
    assert config == {"m": 2} and rows == [{"x": "1", "y": "2.5"}]


def test_rendering_is_deterministic():
    rows = [{"v": float(i) / 7} for i in range(20)]
    assert render_csv(rows, ["v"], {"a": 1, "b": 2}) == render_csv(rows, ["v"], {"b": 2, "a": 1})
