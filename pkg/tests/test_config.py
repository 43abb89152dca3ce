from __future__ import annotations

import pytest

from derivemine.agentflow.providers import ProviderKind
from derivemine.config import validate_config
from derivemine.errors import ConfigError


def test_minimal_config_gets_full_defaults(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("")
    config = validate_config(path)
    assert config.provider.max_attempts == 3
    assert config.filter_policy.min_marker_total == 6
    assert config.filter_policy.date_start.isoformat() == "2023-05-01"
    assert config.filter_policy.date_end.isoformat() == "2024-10-31"
    assert config.concurrency == 1
    assert config.lease_minutes == 30
    assert config.provider.kind is ProviderKind.DETERMINISTIC_MOCK
    assert config.corpus_dir == tmp_path / "corpus"


def test_invalid_min_marker_total(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("filter:\n  min_marker_total: 0\n")
    with pytest.raises(ConfigError) as err:
        validate_config(path)
    assert any("min_marker_total" in e for e in err.value.errors)


def test_all_errors_reported_at_once(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(
        "filter:\n  min_marker_total: 0\n"
        "provider:\n  kind: live_http\n"
        "concurrency: -2\n"
    )
    with pytest.raises(ConfigError) as err:
        validate_config(path)
    messages = err.value.errors
    assert len(messages) >= 4  # threshold, endpoint, model_name, concurrency
    assert any("endpoint" in e for e in messages)
    assert any("model_name" in e for e in messages)
    assert any("concurrency" in e for e in messages)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        validate_config(tmp_path / "absent.yaml")


def test_canonical_prompt_override_refused(tmp_path):
    override = tmp_path / "alt.txt"
    override.write_text("custom")
    path = tmp_path / "c.yaml"
    path.write_text(f"prompts:\n  query_draft: {override}\n")
    with pytest.raises(ConfigError) as err:
        validate_config(path)
    assert any("non-canonical" in e for e in err.value.errors)


def test_authored_prompt_override_accepted(tmp_path):
    override = tmp_path / "alt.txt"
    override.write_text("custom instructions\n")
    path = tmp_path / "c.yaml"
    path.write_text(f"prompts:\n  answer_filter: {override}\n")
    config = validate_config(path)
    assert config.prompt_overrides["answer_filter"] == override


def test_paths_resolve_relative_to_config(tmp_path):
    nested = tmp_path / "proj"
    nested.mkdir()
    path = nested / "c.yaml"
    path.write_text("store_dir: data/store\n")
    config = validate_config(path)
    assert config.store_dir == nested / "data" / "store"


def test_mock_script_must_exist(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("provider:\n  kind: deterministic_mock\n  script_path: nope.jsonl\n")
    with pytest.raises(ConfigError) as err:
        validate_config(path)
    assert any("script_path" in e for e in err.value.errors)
