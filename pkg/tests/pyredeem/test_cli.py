import json

import pytest

from pyredeem.cli import EXIT_CONFIG, EXIT_OK, build_parser, main

FAST_CONFIG = """\
population:
  n_users: 3
  endowment: constant(2000)
runs: 1
mechanisms: [IIQ, GDPR]
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "fast.yaml"
    path.write_text(FAST_CONFIG, encoding="utf-8")
    return path


def test_compare_writes_report(config_path, tmp_path):
    out = tmp_path / "results"
    code = main(["compare", "--config", str(config_path), "--out", str(out), "--no-progress"])
    assert code == EXIT_OK
    target = out / "compare"
    for name in ("raw.csv", "summary.json", "effective-config.yaml", "provenance.json"):
        assert (target / name).is_file()
    summary = json.loads((target / "summary.json").read_text())
    assert [cell["mechanism"] for cell in summary["cells"]] == ["IIQ", "GDPR"]


def test_flags_override_the_file(config_path, tmp_path):
    out = tmp_path / "results"
    argv = [
        "compare",
        "--config",
        str(config_path),
        "--out",
        str(out),
        "--seed",
        "5",
        "--runs",
        "2",
        "--rho",
        "0,1",
        "--no-progress",
    ]
    assert main(argv) == EXIT_OK
    provenance = json.loads((out / "compare" / "provenance.json").read_text())
    assert provenance["master_seed"] == 5
    summary = json.loads((out / "compare" / "summary.json").read_text())
    assert len(summary["cells"]) == 4
    assert all(cell["welfare_count"] == 2 for cell in summary["cells"])


def test_ledger_command(config_path, tmp_path):
    out = tmp_path / "results"
    argv = ["ledger", "--config", str(config_path), "--out", str(out), "--replicate", "1"]
    assert main(argv) == EXIT_OK
    assert (out / "ledger" / "ledger.csv").is_file()
    assert (out / "ledger" / "outcome.csv").is_file()


def test_bad_config_exits_with_config_code(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("runs: 1\nbogus: 2\n", encoding="utf-8")
    assert main(["compare", "--config", str(path), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_bad_override_exits_with_config_code(config_path, tmp_path):
    argv = ["compare", "--config", str(config_path), "--out", str(tmp_path), "--workers", "0"]
    assert main(argv) == EXIT_CONFIG


def test_parser_rejects_malformed_lists():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["compare", "--rho", "0,high"])


def test_parser_needs_a_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_parser_lists(config_path):
    args = build_parser().parse_args(["robustness", "--sigma", "0, 0.5,1", "--strategy", "prop"])
    assert args.sigma == [0.0, 0.5, 1.0]
    assert args.strategy == "prop"
