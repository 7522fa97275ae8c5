import json
import subprocess
import sys

import pytest

from dirichlet_lab import __version__
from dirichlet_lab.cli import main
from dirichlet_lab.io import read_csv


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_dim_prints_prediction(capsys):
    code, out, _ = run(capsys, "dim", "--m", "1", "--n", "1", "--a", "0.5", "--mode", "singly")
    assert code == 0 and float(out) == pytest.approx(2 / 3)


def test_zsolve_reciprocal_rate_is_zero(capsys):
    code, out, _ = run(capsys, "zsolve", "--psi", "powerlog:1,0", "--t", "5")
    assert code == 0 and float(out) == 0.0


def test_zsolve_table(capsys):
    code, out, _ = run(capsys, "zsolve", "--psi", "powerlog:0.5,0", "--t", "3,5")
    lines = out.splitlines()
    assert lines[0].startswith("# dirichlet-lab") and lines[1].strip() == "t,z"
    assert float(lines[2].split(",")[1]) == pytest.approx(1.0)


def test_series(capsys):
    code, out, _ = run(capsys, "series", "--psi", "powerlog:0.5,1", "--s", str(2 / 3))
    assert code == 0 and out.strip() == "Converges"
    code, out, _ = run(capsys, "series", "--psi", "powerlog:0.5,0.5", "--s", str(2 / 3))
    assert out.strip() == "Diverges"


def test_scan_fixture_rows(tmp_path, capsys):
    out = tmp_path / "scan.csv"
    code, _, _ = run(capsys, "scan", "--A", "0", "--b-vec", "0.5", "--T-samples", "5", "--out", str(out))
    assert code == 0
    config, rows = read_csv(out)
    assert config["b_vec"] == "0.5" and config["T_samples"] == 5
    assert [r["status"] for r in rows] == ["FailsAt"] * 5
    assert all(float(r["residual"]) == 0.5 for r in rows)


def test_dani_and_transfer(capsys):
    code, out, _ = run(capsys, "dani", "--A", "0", "--b-vec", "0.5", "--T-samples", "3")
    assert code == 0 and out.count("FailsAt") == 3
    code, out, _ = run(capsys, "transfer", "--A", "0", "--b-vec", "0.5", "--S-list", "4,20")
    rows = out.splitlines()[2:]
    assert code == 0 and rows and all(r.startswith("20.0,") for r in rows)


def test_exponent(capsys):
    code, out, _ = run(capsys, "exponent", "--A", "0.3", "--b-vec", "1")
    assert code == 0 and out.strip() == "inf"


def test_cover_and_ubiquity(capsys):
    code, out, _ = run(capsys, "cover", "--psi", "powerlog:0.5,0", "--t-list", "2,3", "--C0", "-3")
    assert code == 0 and len(out.splitlines()) == 4
    code, out, _ = run(capsys, "ubiquity", "--b-vec", "0.5", "--N", "6,7")
    assert code == 0 and len(out.splitlines()) == 4
    code, out, _ = run(capsys, "ubiquity", "--m", "2", "--b-vec", "0.5,0.3", "--N", "20",
                       "--samples", "200", "--format", "json")
    doc = json.loads(out)
    assert doc["rows"][0]["sizeI"] > 0


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"m": 1, "n": 1, "a": 0.8, "mode": "singly"}))
    _, out, _ = run(capsys, "dim", "--config", str(cfg))
    assert float(out) == pytest.approx(2 * 0.8 / 1.8)
    _, out, _ = run(capsys, "dim", "--config", str(cfg), "--a", "0.5")
    assert float(out) == pytest.approx(2 / 3)


def test_bit_identical_reruns(tmp_path, capsys):
    path = tmp_path / "a.csv"
    blobs = []
    for _ in range(2):
        run(capsys, "ubiquity", "--m", "2", "--b-vec", "0.5,0.3", "--N", "20", "--samples", "300",
            "--seed", "5", "--workers", "2", "--out", str(path))
        blobs.append(path.read_bytes())
    assert blobs[0] == blobs[1]


def test_errors_exit_nonzero(capsys):
    code, _, err = run(capsys, "scan", "--A", "0", "--b-vec", "0.5", "--psi", "bogus:1")
    assert code == 2 and "error" in err
    code, _, err = run(capsys, "dim", "--m", "1")
    assert code == 2
    code, _, err = run(capsys, "scan", "--b-vec", "0.5")
    assert code == 2
    with pytest.raises(SystemExit):
        main(["acceptance"])


def test_unknown_suite(capsys):
    code, _, err = run(capsys, "acceptance", "nightly")
    assert code == 2 and "unknown suite" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "dirichlet_lab", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout
