"""Every acceptance criterion at its stated tolerance, one PASS/FAIL line each."""

import pytest

from dirichlet_lab.acceptance import FULL, SMOKE, run_suite
from dirichlet_lab.cli import main
from dirichlet_lab.io import read_csv


@pytest.mark.parametrize("criterion", FULL, ids=lambda c: f"criterion-{c.number}")
def test_criterion(criterion, capsys):
    result = criterion(workers=1)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()


def test_smoke_suite_runs_quickly():
    results = run_suite("smoke", echo=None)
    assert len(results) == len(SMOKE)
    assert all(r.passed for r in results)
    assert sum(r.elapsed for r in results) < 60


def test_acceptance_command_writes_report(tmp_path, capsys):
    out = tmp_path / "acc.csv"
    assert main(["acceptance", "smoke", "--out", str(out)]) == 0
    printed = capsys.readouterr().out.splitlines()
    assert len(printed) == len(SMOKE) and all(line.startswith("[PASS]") for line in printed)
    config, rows = read_csv(out)
    assert config["suite"] == "smoke" and [r["passed"] for r in rows] == ["True"] * len(SMOKE)
