from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest

from derivemine.cli import EXIT_CONFIG, EXIT_OK, EXIT_STAGE, EXIT_USAGE, dispatch

from .conftest import FIXTURES


@pytest.fixture
def workdir(tmp_path, golden_script) -> Path:
    """A working directory with bundles, metadata sidecar and config."""
    bundles = tmp_path / "papers"
    bundles.mkdir()
    shutil.copytree(FIXTURES / "papers" / "dpo-2024", bundles / "dpo-2024")
    meta = tmp_path / "meta.jsonl"
    meta.write_text(
        json.dumps(json.loads((FIXTURES / "papers" / "dpo-2024.meta.json").read_text()))
        + "\n"
    )
    config = tmp_path / "derivemine.yaml"
    config.write_text(
        "provider:\n"
        "  kind: deterministic_mock\n"
        f"  script_path: {golden_script}\n"
    )
    return tmp_path


def run(workdir: Path, *argv: str) -> int:
    return dispatch(["--config", str(workdir / "derivemine.yaml"), *argv])


def test_unknown_flag_is_usage_error(workdir):
    assert run(workdir, "--bogus", "filter") == EXIT_USAGE


def test_missing_subcommand_is_usage_error(workdir):
    assert run(workdir) == EXIT_USAGE


def test_bad_config_exit_code(tmp_path):
    config = tmp_path / "bad.yaml"
    config.write_text("filter:\n  min_marker_total: 0\n")
    assert dispatch(["--config", str(config), "filter"]) == EXIT_CONFIG


def test_ingest_filter_extract_generate_export_flow(workdir, capsys):
    assert run(workdir, "ingest", "--corpus", str(workdir / "papers"),
               "--meta", str(workdir / "meta.jsonl")) == EXIT_OK
    assert run(workdir, "filter") == EXIT_OK
    assert "dpo-2024: accept" in capsys.readouterr().out

    assert run(workdir, "extract") == EXIT_OK
    expressions = workdir / "store" / "expressions" / "dpo-2024.jsonl"
    assert expressions.exists()
    assert len(expressions.read_text().strip().split("\n")) == 3

    assert run(workdir, "generate", "--paper", "dpo-2024") == EXIT_OK
    out = capsys.readouterr().out
    assert "review_pending: 3" in out

    # exports need accepted samples: accept them straight through the store
    from derivemine.curation import Curation, ReviewDecision
    from derivemine.store import SampleStore

    store = SampleStore(workdir / "store")
    curation = Curation(store)
    for sample in store.samples():
        curation.submit_decision(ReviewDecision(
            sample_id=sample.sample_id, reviewer_id="cli-test",
            q1_reasoning_type=True, q2_clarity=True, q3_correctness=True,
            q4_density=True, action="accept", base_version=1,
        ))
    assert run(workdir, "export", "--name", "full") == EXIT_OK
    export_file = workdir / "exports" / "full.jsonl"
    assert export_file.exists()
    assert len(export_file.read_text().strip().split("\n")) == 3


def test_generate_unfiltered_paper_fails_with_stage_exit(workdir, capsys):
    run(workdir, "ingest", "--corpus", str(workdir / "papers"),
        "--meta", str(workdir / "meta.jsonl"))
    # no filter step: generate must refuse
    assert run(workdir, "generate", "--paper", "dpo-2024") == EXIT_STAGE
    assert "PaperNotAccepted" in capsys.readouterr().err


def test_dry_run_makes_no_calls_and_no_writes(workdir, capsys):
    run(workdir, "ingest", "--corpus", str(workdir / "papers"),
        "--meta", str(workdir / "meta.jsonl"))
    run(workdir, "filter")
    capsys.readouterr()  # drop setup output
    store_dir = workdir / "store"
    before = sorted(p.as_posix() for p in store_dir.rglob("*")) if store_dir.exists() else []
    assert run(workdir, "--dry-run", "generate", "--paper", "dpo-2024") == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("plan:")
    after = sorted(p.as_posix() for p in store_dir.rglob("*")) if store_dir.exists() else []
    assert before == after
    assert not (store_dir / "events.jsonl").exists()
    assert not (store_dir / "transcripts.jsonl").exists()


def test_dry_run_eval_and_export(workdir, capsys):
    assert run(workdir, "--dry-run", "export", "--name", "x") == EXIT_OK
    items = workdir / "items.jsonl"
    items.write_text(json.dumps({"item_id": "i", "question": "q", "answer": "a"}) + "\n")
    assert run(workdir, "--dry-run", "eval", "--items", str(items),
               "--out", str(workdir / "eval")) == EXIT_OK
    assert not (workdir / "eval").exists()


def test_eval_end_to_end_with_mock(workdir, tmp_path):
    items = workdir / "items.jsonl"
    items.write_text(json.dumps(
        {"item_id": "i1", "question": "Derive $y=x$.", "answer": "Trivially $y=x$."}
    ) + "\n")
    script = workdir / "eval-script.jsonl"
    entries = [
        {"role": "solver", "subject": f"i1#{i}", "text": f"attempt {i}: $y=x$"}
        for i in range(2)
    ] + [
        {"role": "grader", "subject": f"i1#{i}",
         "text": '{"correctness": 2, "completeness": 1, "similarity": 1}'}
        for i in range(2)
    ]
    script.write_text("\n".join(json.dumps(e) for e in entries) + "\n")
    config = workdir / "eval.yaml"
    config.write_text(
        "provider:\n"
        "  kind: deterministic_mock\n"
        f"  script_path: {script}\n"
        "  model_name: mock-model\n"
    )
    out_dir = workdir / "evalout"
    code = dispatch(["--config", str(config), "eval", "--items", str(items),
                     "--out", str(out_dir), "--k", "2"])
    assert code == EXIT_OK
    assert (out_dir / "report.csv").exists()
    assert (out_dir / "report.txt").exists()
    scores = (out_dir / "scores.jsonl").read_text().strip().split("\n")
    assert len(scores) == 2
    assert "mock-model" in (out_dir / "report.txt").read_text()
