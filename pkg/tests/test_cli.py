from __future__ import annotations

import json
from pathlib import Path

import pytest

from conftest import FIXTURE_DIR, fixture_text
from salp.cli import (
    EXIT_ERROR,
    EXIT_NEGATIVE,
    EXIT_OK,
    EXIT_USAGE,
    Config,
    load_config,
    main,
)


def run(capsys, *argv: str) -> tuple[int, str]:
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def fixture_path(name: str) -> str:
    return str(FIXTURE_DIR / f"{name}.loop")


# ---------------------------------------------------------------------------
# configuration


def test_default_config_values():
    c = Config()
    assert c.n_grid == (1, 2, 3, 4)
    assert c.enumeration_bound == 32
    assert c.format == "dsl"


def test_config_validation_rejects_nonpositive_budgets(tmp_path):
    bad = tmp_path / "cfg.json"
    bad.write_text(json.dumps({"refine_budget": 0}))
    with pytest.raises(ValueError):
        load_config(str(bad))


def test_config_file_overrides(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_grid": [2, 3], "enumeration_bound": 16}))
    c = load_config(str(cfg))
    assert c.n_grid == (2, 3)
    assert c.enumeration_bound == 16


def test_config_env_var(tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 9}))
    monkeypatch.setenv("SALP_CONFIG", str(cfg))
    assert load_config(None).seed == 9


def test_config_unknown_key_rejected(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"no_such_option": 1}))
    with pytest.raises(ValueError):
        load_config(str(cfg))


# ---------------------------------------------------------------------------
# parse


def test_parse_echoes_canonical_text(capsys):
    code, out = run(capsys, "parse", fixture_path("shift"))
    assert code == EXIT_OK
    assert out == fixture_text("shift")


def test_parse_json_ir(capsys):
    code, out = run(capsys, "parse", "--json", fixture_path("triangular"))
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["schema"] == "program/1"
    assert doc["nests"][0]["loops"][1]["var"] == "j"


def test_parse_missing_file_is_usage_error(capsys):
    code, _ = run(capsys, "parse", "/nonexistent/path.loop")
    assert code == EXIT_USAGE


def test_parse_malformed_program_is_error(capsys, tmp_path):
    bad = tmp_path / "bad.loop"
    bad.write_text("loop i: 1..;\nstmt: A[i] = f(A[i]);\n")
    code, _ = run(capsys, "parse", str(bad))
    assert code == EXIT_ERROR


def test_unknown_subcommand_is_usage_error(capsys):
    code, _ = run(capsys, "frobnicate")
    assert code == EXIT_USAGE


# ---------------------------------------------------------------------------
# analyze


def test_analyze_shift_reports_flow_edge(capsys):
    code, out = run(capsys, "analyze", fixture_path("shift"))
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["schema"] == "analyze/1"
    raw = [e for e in doc["edges"] if e["kind"] == "RAW"][0]
    assert raw["present"] is True
    assert raw["integer_pairs"] == {"1": 0, "2": 1, "3": 2, "4": 3}
    waw = [e for e in doc["edges"] if e["kind"] == "WAW"][0]
    assert waw["present"] is False


# ---------------------------------------------------------------------------
# schedule


def test_schedule_shift(capsys):
    code, out = run(capsys, "schedule", fixture_path("shift"))
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["level"] == 1
    assert doc["region"] == "-v1_1 < 0"
    assert doc["witness"] == {"v1_0": "-1", "v1_1": "1"}
    assert doc["schedule"] == ["i - 1"]


def test_schedule_triangular_pins_outer_level(capsys):
    code, out = run(capsys, "schedule", fixture_path("triangular"))
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["level"] == 2
    assert doc["region"] == "-v1_1_0 = 0 && -v2_1_0 < 0"


# ---------------------------------------------------------------------------
# transform


def test_transform_explicit_schedule_dsl(capsys):
    code, out = run(
        capsys, "transform", fixture_path("interchange"), "--schedule", "j, i"
    )
    assert code == EXIT_OK
    assert "A[y2][y1] = f(A[y2 - 1][y1])" in out


def test_transform_json_format(capsys):
    code, out = run(
        capsys,
        "transform",
        fixture_path("interchange"),
        "--schedule",
        "j, i",
        "--format",
        "json",
    )
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["schema"] == "transform/1"
    assert doc["chosen_case"] == 0
    assert doc["validity"][0]["integer_valid"] is True


def test_transform_auto_uses_schedule_search(capsys):
    code, out = run(capsys, "transform", fixture_path("shift"), "--auto")
    assert code == EXIT_OK
    assert "A[y1 + 1] = f(A[y1])" in out


def test_transform_fractional_schedule_is_analysis_negative(capsys):
    code = main(["transform", fixture_path("shift"), "--schedule", "1/2*i"])
    captured = capsys.readouterr()
    assert code == EXIT_NEGATIVE
    doc = json.loads(captured.err)
    assert doc["error"] == "no integer-valid case"
    assert doc["validity"][0]["integer_valid"] is False


def test_transform_nonlinear_schedule_is_error(capsys):
    code, _ = run(capsys, "transform", fixture_path("shift"), "--schedule", "i^2")
    assert code == EXIT_ERROR


def test_transform_requires_schedule_or_auto(capsys):
    code, _ = run(capsys, "transform", fixture_path("shift"))
    assert code == EXIT_USAGE


def test_transform_dump_cad(capsys, tmp_path):
    dump = tmp_path / "tree.json"
    code, _ = run(
        capsys,
        "transform",
        fixture_path("shift"),
        "--schedule",
        "i - 1",
        "--dump-cad",
        str(dump),
    )
    assert code == EXIT_OK
    doc = json.loads(dump.read_text())
    assert "root" in doc


def test_transform_skew_annotates_parallel_outer_loop(capsys):
    code, out = run(capsys, "transform", fixture_path("skew"), "--auto")
    assert code == EXIT_OK
    assert " parallel;" in out


# ---------------------------------------------------------------------------
# verify


def make_corpus(tmp_path: Path, names: list[str]) -> str:
    d = tmp_path / "corpus"
    d.mkdir()
    for name in names:
        (d / f"{name}.loop").write_text(fixture_text(name))
    return str(d)


def test_verify_small_corpus(capsys, tmp_path):
    corpus = make_corpus(tmp_path, ["shift", "parity", "nodep"])
    code, out = run(capsys, "verify", "--fixtures", corpus)
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["ok"] is True
    assert [f["fixture"] for f in doc["fixtures"]] == [
        "nodep.loop",
        "parity.loop",
        "shift.loop",
    ]
    for f in doc["fixtures"]:
        assert all(entry["match"] for entry in f["dependences"])


def test_verify_is_deterministic(capsys, tmp_path):
    corpus = make_corpus(tmp_path, ["shift", "scalar"])
    _, first = run(capsys, "verify", "--fixtures", corpus)
    _, second = run(capsys, "verify", "--fixtures", corpus)
    assert first == second


def test_verify_honors_n_grid_override(capsys, tmp_path):
    corpus = make_corpus(tmp_path, ["shift"])
    code, out = run(capsys, "verify", "--fixtures", corpus, "--n-grid", "2,3")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert [e["n"] for e in doc["fixtures"][0]["dependences"]] == [2, 3]


def test_verify_missing_corpus_is_usage_error(capsys, tmp_path):
    code, _ = run(capsys, "verify", "--fixtures", str(tmp_path / "nowhere"))
    assert code == EXIT_USAGE


def test_verify_config_env_applies(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_grid": [2]}))
    monkeypatch.setenv("SALP_CONFIG", str(cfg))
    corpus = make_corpus(tmp_path, ["shift"])
    code, out = run(capsys, "verify", "--fixtures", corpus)
    assert code == EXIT_OK
    doc = json.loads(out)
    assert [e["n"] for e in doc["fixtures"][0]["dependences"]] == [2]


def test_bad_config_json_is_usage_error(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    code, _ = run(capsys, "--config", str(cfg), "parse", fixture_path("shift"))
    assert code == EXIT_USAGE
