import json
import os
import textwrap

import pytest
from click.testing import CliRunner

from latticewalk import util
from latticewalk.cli import main
from latticewalk.verifiers import VERIFIERS

SIMULATE_CONFIG = """
seed: 42
environment:
  variant: alternating
simulate:
  steps: 1000
  runs: 2
  trajectory: true
"""

CLASSIFY_CONFIG = """
seed: 7
environment:
  variant: iid_uniform
budget:
  N: 2000
  replicas: 4
thresholds:
  delta1: 0.1
  delta2: 0.1
  delta3: 0.1
classify:
  mode: return
"""

COUNTEREXAMPLE_CONFIG = """
seed: 11
environment:
  variant: explicit_defects
  pattern: [1, -1]
  seed: 3
counterexample:
  targets: [0.5, 1.5]
  k_max: 2
  max_horizon: 4096
  replicas: 32
"""


@pytest.fixture
def runner(monkeypatch, tmpdir):
    monkeypatch.setattr(util, "CONFIG_FILE", str(tmpdir.join("setup.cfg")))
    monkeypatch.delenv("LATTICEWALK_JOBS", raising=False)
    monkeypatch.delenv("LATTICEWALK_OUT_DIR", raising=False)
    return CliRunner()


def write(name, text):
    with open(name, "w") as config_file:
        config_file.write(textwrap.dedent(text).lstrip("\n"))
    return name


def read(path):
    with open(path) as result_file:
        return result_file.read()


def test_version(runner):
    result = runner.invoke(main, ["version"])
    assert result.exit_code == 0
    assert "latticewalk" in result.output


def test_setup_saves_defaults(runner):
    result = runner.invoke(main, ["setup", "-j", "3"])
    assert result.exit_code == 0
    assert util.load_config()["jobs"] == 3


def test_simulate(runner):
    with runner.isolated_filesystem():
        config = write("run.yaml", SIMULATE_CONFIG)
        result = runner.invoke(main, ["simulate", "-c", config, "--out", "first"])
        assert result.exit_code == 0, result.output
        assert "returns_to_start" in result.output
        again = runner.invoke(main, ["simulate", "-c", config, "--out", "second"])
        assert again.exit_code == 0
        assert read("first/statistics.json") == read("second/statistics.json")
        statistics = json.loads(read("first/statistics.json"))
        assert len(statistics["runs"]) == 2
        assert all(run["coupled"] for run in statistics["runs"])
        assert len(read("first/trajectory.tsv").splitlines()) == 1001


def test_seed_flag_overrides(runner):
    with runner.isolated_filesystem():
        config = write("run.yaml", SIMULATE_CONFIG)
        runner.invoke(main, ["simulate", "-c", config, "--out", "a"])
        runner.invoke(main, ["simulate", "-c", config, "-s", "43", "--out", "b"])
        assert json.loads(read("b/statistics.json"))["seed"] == 43
        assert read("a/statistics.json") != read("b/statistics.json")


def test_missing_seed(runner):
    with runner.isolated_filesystem():
        config = write("run.yaml", "environment:\n  variant: alternating\nsimulate:\n  steps: 10\n")
        result = runner.invoke(main, ["simulate", "-c", config])
        assert result.exit_code != 0
        assert not os.path.exists("statistics.json")


def test_malformed_config(runner, caplog):
    with runner.isolated_filesystem():
        config = write("run.yaml", "seed: 1\nenvironment: [1,\n")
        result = runner.invoke(main, ["simulate", "-c", config])
        assert result.exit_code != 0
        assert "line" in caplog.text


def test_classify(runner):
    with runner.isolated_filesystem():
        config = write("run.yaml", CLASSIFY_CONFIG)
        serial = runner.invoke(main, ["classify", "-c", config, "--out", "serial", "-j", "1"])
        assert serial.exit_code == 0, serial.output
        assert "Evidence" in serial.output
        pooled = runner.invoke(main, ["classify", "-c", config, "--out", "pooled", "-j", "2"])
        assert pooled.exit_code == 0
        for name in ("records.jsonl", "summary.csv"):
            assert read(os.path.join("serial", name)) == read(os.path.join("pooled", name))
        assert read("serial/summary.csv").startswith("# config_hash=")


def test_classify_json_output(runner):
    with runner.isolated_filesystem():
        config = write("run.yaml", CLASSIFY_CONFIG)
        result = runner.invoke(main, ["classify", "-c", config, "-f", "json",
                                      "-o", "report.json"])
        assert result.exit_code == 0
        report = json.loads(read("report.json"))
        assert report["evidence"] in ("RecurrentLeaning", "TransientLeaning", "Inconclusive")
        assert report["replicas"] == 4


def test_classify_rejects_zero_replicas(runner):
    with runner.isolated_filesystem():
        config = write("run.yaml", CLASSIFY_CONFIG.replace("replicas: 4", "replicas: 0"))
        result = runner.invoke(main, ["classify", "-c", config])
        assert result.exit_code != 0


def test_verify_list(runner):
    result = runner.invoke(main, ["verify", "--list"])
    assert result.exit_code == 0
    for name in VERIFIERS:
        assert name in result.output


def test_verify_selected(runner):
    with runner.isolated_filesystem():
        result = runner.invoke(main, ["verify", "--only", "reflection,smoothing"])
        assert result.exit_code == 0, result.output
        report = json.loads(read("verify.json"))
        assert [entry["name"] for entry in report["verifiers"]] == ["reflection", "smoothing"]
        assert report["passed"]


def test_verify_fault_fails(runner):
    with runner.isolated_filesystem():
        config = write("run.yaml", """
            seed: 3
            verify:
              coupling_seeds: 2
              coupling_steps: 200
        """)
        result = runner.invoke(main, ["verify", "-c", config, "--only", "coupling",
                                      "--inject-fault", "coupling"])
        assert result.exit_code == 1
        assert "FAIL" in result.output


def test_verify_unknown_name(runner):
    result = runner.invoke(main, ["verify", "--only", "nonsense"])
    assert result.exit_code != 0


def test_counterexample(runner):
    with runner.isolated_filesystem():
        config = write("run.yaml", COUNTEREXAMPLE_CONFIG)
        result = runner.invoke(main, ["counterexample", "-c", config, "--out", "out"])
        assert result.exit_code == 0, result.output
        certificate = json.loads(read("out/certificate.json"))
        assert certificate["complete"]
        assert certificate["defect_levels"][0] == 0

        replayed = runner.invoke(main, ["counterexample", "-c", config, "--certificate",
                                        "out/certificate.json", "-f", "json"])
        assert replayed.exit_code == 0
        assert '"verified": true' in replayed.output
