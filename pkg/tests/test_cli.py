import json
import subprocess
import sys

import pytest

from faultline.cli import main
from faultline.fixtures.scenarios import KV_CATALOG


def load(out):
    return json.loads((out / "report.json").read_text())


def test_profile_login_writes_both_reports(tmp_path):
    code = main(["--scenario", "profile_login", "--out", str(tmp_path)])
    assert code == 1
    assert (tmp_path / "report.json").exists() and (tmp_path / "report.html").exists()


def test_all_pass_scenario_exits_zero(tmp_path):
    assert main(["--scenario", "profile_login_resilient", "--out", str(tmp_path)]) == 0
    assert load(tmp_path)["summary"]["failed"] == 0


def test_unknown_flag_exits_2(capsys):
    assert main(["--scenario", "profile_login", "--bogus"]) == 2
    assert "usage" in capsys.readouterr().err


def test_missing_target_exits_2():
    assert main([]) == 2


def test_max_combination_size_flag(tmp_path):
    main(["--scenario", "profile_login", "--out", str(tmp_path), "--max-combination-size", "1"])
    doc = load(tmp_path)
    assert max(len(it["assignment"]) for it in doc["iterations"]) == 1
    assert doc["summary"]["total"] == 38


def test_format_json_only(tmp_path):
    main(["--scenario", "no_calls", "--out", str(tmp_path), "--format", "json"])
    assert (tmp_path / "report.json").exists() and not (tmp_path / "report.html").exists()


def test_bad_catalog_exits_2(tmp_path):
    bad = tmp_path / "bad.catalog"
    bad.write_text("{}")
    assert main(["--scenario", "profile_login", "--out", str(tmp_path), "--catalog", str(bad)]) == 2


def test_invalid_value_exits_2(tmp_path):
    assert main(["--scenario", "profile_login", "--out", str(tmp_path), "--max-iterations", "0"]) == 2


def test_config_env_and_flag_override(tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"max_combination_size": 1, "max_iterations": 10}))
    monkeypatch.setenv("FAULTLINE_CONFIG", str(cfg))
    main(["--scenario", "profile_login", "--out", str(tmp_path / "a")])
    assert load(tmp_path / "a")["summary"]["total"] == 10
    main(["--scenario", "profile_login", "--out", str(tmp_path / "b"), "--max-iterations", "100"])
    assert load(tmp_path / "b")["summary"]["total"] == 38


def test_bad_config_env_exits_2(tmp_path, monkeypatch):
    monkeypatch.setenv("FAULTLINE_CONFIG", str(tmp_path / "missing.json"))
    assert main(["--scenario", "profile_login", "--out", str(tmp_path)]) == 2


def test_failing_baseline_exits_1(tmp_path):
    assert main(["--scenario", "failing_baseline", "--out", str(tmp_path)]) == 1
    assert load(tmp_path)["summary"]["total"] == 1


def test_external_test_callable(tmp_path):
    code = main(["--test", "sample_targets:lookup", "--out", str(tmp_path),
                 "--catalog", str(KV_CATALOG)])
    assert code == 1  # the char mutation makes the assertion fail
    doc = load(tmp_path)
    assert doc["test_name"] == "sample_targets:lookup"
    assert doc["summary"]["total"] == 1 + 1 + 1


def test_external_scenario_object(tmp_path):
    main(["--test", "sample_targets:TWO_SITES", "--out", str(tmp_path)])
    assert load(tmp_path)["test_name"] == "two_sites"


def test_test_spec_errors(tmp_path):
    assert main(["--test", "nocolon", "--out", str(tmp_path)]) == 2
    assert main(["--test", "no.such.module:x", "--out", str(tmp_path)]) == 2


def test_catalog_flag_replaces(tmp_path):
    main(["--scenario", "profile_login", "--out", str(tmp_path), "--catalog", str(KV_CATALOG),
          "--max-combination-size", "1"])
    assert load(tmp_path)["summary"]["total"] == 38


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "faultline", "--scenario", "no_calls",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "1 iterations" in proc.stdout
