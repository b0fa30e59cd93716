import json

import pytest
import yaml

from dermsoap import parse_soap, read_training, render_soap
from dermsoap.cli import (
    EXIT_ABORTED,
    EXIT_BACKEND,
    EXIT_CONFIG,
    EXIT_DATA,
    main,
)
from dermsoap.soap import SoapNote


@pytest.fixture
def workspace(tmp_path):
    assert main(["sample-data", "--dest", str(tmp_path)]) == 0
    return tmp_path


def cfg_path(workspace):
    return str(workspace / "config.yaml")


def test_sample_data_layout(workspace):
    assert (workspace / "config.yaml").exists()
    assert (workspace / "sample_lesions.csv").exists()
    assert (workspace / "descriptor_banks.json").exists()
    assert len(list((workspace / "corpus").iterdir())) == 4
    assert (workspace / "eval_cases" / "candidates.jsonl").exists()


def test_index_then_reload_equal(workspace, capsys):
    assert main(["index", "--config", cfg_path(workspace)]) == 0
    out = capsys.readouterr().out
    assert "indexed" in out and "dim 64" in out
    snapshot = workspace / "out" / "index.json"
    assert snapshot.exists()
    first = snapshot.read_bytes()
    assert main(["index", "--config", cfg_path(workspace)]) == 0
    assert snapshot.read_bytes() == first


def test_index_empty_corpus_fails_with_config_code(tmp_path, capsys):
    (tmp_path / "corpus").mkdir()
    config = {
        "paths": {"corpus_dir": "corpus", "output_dir": "out"},
        "provider": {"kind": "stub", "dim": 16},
        "backend": {"kind": "mock"},
    }
    cfg = tmp_path / "config.yaml"
    cfg.write_text(yaml.safe_dump(config), encoding="utf-8")
    assert main(["index", "--config", str(cfg)]) == EXIT_CONFIG
    assert "no documents" in capsys.readouterr().err


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "config.yaml"
    cfg.write_text("bogus_key: 1\n", encoding="utf-8")
    assert main(["index", "--config", str(cfg)]) == EXIT_CONFIG
    assert "bogus_key" in capsys.readouterr().err


def test_synthesize_requires_index(workspace, capsys):
    assert main(["synthesize", "--config", cfg_path(workspace)]) == EXIT_CONFIG
    assert "run 'index' first" in capsys.readouterr().err


def test_synthesize_twenty_records(workspace, capsys):
    assert main(["index", "--config", cfg_path(workspace)]) == 0
    assert main(["synthesize", "--config", cfg_path(workspace)]) == 0
    export = workspace / "out" / "training.jsonl"
    lines = [l for l in export.read_text().splitlines() if l.strip()]
    assert len(lines) == 20
    triples = read_training(export)
    assert all(t.note.is_complete() for t in triples)
    report = json.loads((workspace / "out" / "synthesis_report.json").read_text())
    assert report["triples"] == 20
    assert report["failures"] == []
    assert all(entry["chunk_ids"] for entry in report["notes"])


def test_synthesize_abort_exit_code(workspace, capsys):
    assert main(["index", "--config", cfg_path(workspace)]) == 0
    config = yaml.safe_load((workspace / "config.yaml").read_text())
    config["backend"] = {"kind": "remote", "url": "http://127.0.0.1:9", "timeout": 0.2}
    config["synthesis"] = {"failure_threshold": 0.10}
    bad = workspace / "abort.yaml"
    bad.write_text(yaml.safe_dump(config), encoding="utf-8")
    assert main(["synthesize", "--config", str(bad)]) == EXIT_ABORTED
    assert "threshold" in capsys.readouterr().err


def test_evaluate_identity_scores_one(workspace, capsys):
    refs = workspace / "eval_cases" / "references.jsonl"
    assert main([
        "evaluate", "--config", cfg_path(workspace),
        "--candidates", str(refs), "--references", str(refs),
    ]) == 0
    report = json.loads((workspace / "out" / "evaluation_report.json").read_text())
    assert len(report["cases"]) == 3
    assert len(report["metrics"]) == 7
    for cid in report["cases"]:
        assert report["metrics"]["rouge1_f1"][cid] == pytest.approx(1.0)
        assert report["metrics"]["chrf_pp"][cid] == pytest.approx(100.0)
        assert report["metrics"]["embed_f1_general"][cid] == pytest.approx(1.0, abs=1e-6)


def test_evaluate_shape_on_fixture(workspace):
    assert main([
        "evaluate", "--config", cfg_path(workspace),
        "--candidates", str(workspace / "eval_cases" / "candidates.jsonl"),
        "--references", str(workspace / "eval_cases" / "references.jsonl"),
    ]) == 0
    report = json.loads((workspace / "out" / "evaluation_report.json").read_text())
    assert report["cases"] == ["case1", "case2", "case3"]
    expected_rows = {
        "rouge1_f1", "rouge2_f1", "rougeL_f1", "meteor", "chrf_pp",
        "embed_f1_general", "embed_f1_clinical",
    }
    assert set(report["metrics"]) == expected_rows
    for row in report["metrics"].values():
        assert set(row) == {"case1", "case2", "case3"}


def test_evaluate_unmatched_ids_error(workspace, capsys):
    cands = workspace / "cands.jsonl"
    cands.write_text(json.dumps({"id": "caseX", "text": "hello"}) + "\n")
    code = main([
        "evaluate", "--config", cfg_path(workspace),
        "--candidates", str(cands),
        "--references", str(workspace / "eval_cases" / "references.jsonl"),
    ])
    assert code == EXIT_DATA
    assert "caseX" in capsys.readouterr().err


def test_ccs_perfect_fixture(workspace, capsys):
    caption = "itching lesion on the forearm confirmed by biopsy"
    note = SoapNote(
        chief_complaint=caption, medical_history="",
        examination=caption, observations="",
        investigations=caption, diagnosis="", summary="",
        treatment=caption, patient_education="",
    )
    pairs = workspace / "perfect_pairs.jsonl"
    pairs.write_text(
        json.dumps({"id": "p1", "caption": caption, "note": render_soap(note)}) + "\n"
    )
    assert main(["ccs", "--config", cfg_path(workspace), "--pairs", str(pairs)]) == 0
    report = json.loads((workspace / "out" / "ccs_report.json").read_text())
    assert report["cases"]["p1"]["average"] == pytest.approx(1.0, abs=1e-6)


def test_ccs_fixture_shape(workspace):
    assert main([
        "ccs", "--config", cfg_path(workspace),
        "--pairs", str(workspace / "ccs_pairs.jsonl"),
    ]) == 0
    report = json.loads((workspace / "out" / "ccs_report.json").read_text())
    for case in report["cases"].values():
        assert set(case["sections"]) == {"Subjective", "Objective", "Assessment", "Plan"}
        assert "average" in case


def test_anova_bundled_fixture_by_section(capsys):
    assert main(["anova", "--group-by", "section"]) == 0
    out = capsys.readouterr().out
    assert "F(3, 20)" in out
    payload = json.loads(out.splitlines()[-1])
    assert payload["f_stat"] == pytest.approx(3.88, abs=0.02)
    assert payload["p_value"] == pytest.approx(0.024, abs=0.003)


def test_anova_bundled_fixture_by_condition(capsys):
    assert main(["anova", "--group-by", "condition"]) == 0
    payload = json.loads(capsys.readouterr().out.splitlines()[-1])
    assert payload["df_between"] == 5
    assert payload["df_within"] == 18
    assert payload["f_stat"] == pytest.approx(0.93, abs=0.02)
    assert payload["p_value"] == pytest.approx(0.487, abs=0.01)


def test_anova_writes_reports(workspace, tmp_path):
    out_dir = tmp_path / "anova_out"
    assert main(["anova", "--group-by", "section", "--output", str(out_dir)]) == 0
    assert (out_dir / "anova_section.json").exists()
    assert (out_dir / "anova_section.txt").exists()


def test_anova_on_generated_medconcept_report(workspace, capsys):
    # build a notes-by-condition dir from synthesized notes, then chain
    # medconcept -> anova on the produced report
    assert main(["index", "--config", cfg_path(workspace)]) == 0
    assert main(["synthesize", "--config", cfg_path(workspace)]) == 0
    triples = read_training(workspace / "out" / "training.jsonl")
    notes_dir = workspace / "notes_by_condition"
    for cls in ("BCC", "MEL", "SCC", "ACK", "SEK", "NEV"):
        (notes_dir / cls).mkdir(parents=True)
    for i, triple in enumerate(triples):
        cls = ("BCC", "MEL", "SCC", "ACK", "SEK", "NEV")[i % 6]
        path = notes_dir / cls / f"case{i}.txt"
        path.write_text(render_soap(triple.note), encoding="utf-8")
    assert main([
        "medconcept", "--config", cfg_path(workspace), "--notes-dir", str(notes_dir),
    ]) == 0
    report_path = workspace / "out" / "medconcept_report.json"
    report = json.loads(report_path.read_text())
    assert len(report["rows"]) == 24
    capsys.readouterr()
    assert main(["anova", "--report", str(report_path), "--group-by", "section"]) == 0
    assert "F(3, 20)" in capsys.readouterr().out


def test_judge_mock_scores(workspace):
    assert main([
        "judge", "--config", cfg_path(workspace),
        "--notes", str(workspace / "ccs_pairs.jsonl"),
    ]) == 0
    report = json.loads((workspace / "out" / "judge_report.json").read_text())
    assert len(report["scored"]) == 3
    for entry in report["scored"]:
        assert entry["total"] == 16
    assert report["summary"]["mean_total"] == 16.0


def test_missing_config_file_is_data_error(capsys):
    assert main(["index", "--config", "/nonexistent/config.yaml"]) == EXIT_DATA


def test_seed_override_changes_stub_vectors(workspace):
    cfg = cfg_path(workspace)
    snapshot = workspace / "out" / "index.json"
    assert main(["index", "--config", cfg]) == 0
    base = snapshot.read_bytes()
    assert main(["index", "--config", cfg, "--seed", "1"]) == 0
    assert snapshot.read_bytes() != base
    assert main(["index", "--config", cfg, "--seed", "0"]) == 0
    assert snapshot.read_bytes() == base


def test_provider_url_from_environment(workspace, monkeypatch):
    config = yaml.safe_load((workspace / "config.yaml").read_text())
    config["provider"] = {"kind": "remote"}  # no url in the file
    cfg = workspace / "env.yaml"
    cfg.write_text(yaml.safe_dump(config), encoding="utf-8")
    # without the env var the config is rejected outright
    assert main(["index", "--config", str(cfg)]) == EXIT_CONFIG
    monkeypatch.setenv("DERMSOAP_PROVIDER_URL", "http://127.0.0.1:9")
    # now the config loads and the failure is the (unreachable) backend
    code = main(["index", "--config", str(cfg)])
    assert code == EXIT_BACKEND


def test_rerun_reports_byte_identical(workspace):
    refs = workspace / "eval_cases" / "references.jsonl"
    args = [
        "evaluate", "--config", cfg_path(workspace),
        "--candidates", str(workspace / "eval_cases" / "candidates.jsonl"),
        "--references", str(refs),
    ]
    assert main(args) == 0
    first = (workspace / "out" / "evaluation_report.json").read_bytes()
    assert main(args) == 0
    assert (workspace / "out" / "evaluation_report.json").read_bytes() == first
