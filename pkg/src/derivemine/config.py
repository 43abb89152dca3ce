"""Declarative run configuration.

One YAML (or JSON) file holds the filter policy, the provider binding, prompt
template overrides and the concurrency budget. Validation reports every
problem at once rather than stopping at the first.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .agentflow.providers import ProviderBinding, ProviderKind
from .agentflow.prompts import AUTHORED_ROLES
from .corpus import (
    DEFAULT_DATE_END,
    DEFAULT_DATE_START,
    DEFAULT_MARKER_LEXICON,
    DEFAULT_MIN_MARKER_TOTAL,
    FilterPolicy,
)
from .curation import DEFAULT_LEASE_MINUTES
from .errors import ConfigError


@dataclass
class AppConfig:
    corpus_dir: Path
    store_dir: Path
    exports_dir: Path
    filter_policy: FilterPolicy
    provider: ProviderBinding
    prompt_overrides: dict[str, Path] = field(default_factory=dict)
    concurrency: int = 1
    lease_minutes: float = DEFAULT_LEASE_MINUTES
    required_accepts: int = 1


def _parse_date(raw, name: str, default: dt.date, errors: list[str]) -> dt.date:
    if raw is None:
        return default
    try:
        return dt.date.fromisoformat(str(raw))
    except ValueError:
        errors.append(f"{name}: not an ISO date: {raw!r}")
        return default


def validate_config(path: Path | str) -> AppConfig:
    """Load and fully default a config file; raises ConfigError listing every problem."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"])
    except yaml.YAMLError as exc:
        raise ConfigError([f"config is not valid YAML: {exc}"])
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(["config root must be a mapping"])

    errors: list[str] = []
    base = path.parent

    def resolve(p: str | None, default: str) -> Path:
        value = Path(p) if p else Path(default)
        return value if value.is_absolute() else base / value

    corpus_dir = resolve(raw.get("corpus_dir"), "corpus")
    store_dir = resolve(raw.get("store_dir"), "store")
    exports_dir = resolve(raw.get("exports_dir"), "exports")

    fraw = raw.get("filter") or {}
    lexicon = fraw.get("marker_lexicon")
    if lexicon is None:
        lexicon = sorted(DEFAULT_MARKER_LEXICON)
    elif not isinstance(lexicon, list) or not lexicon:
        errors.append("filter.marker_lexicon: must be a non-empty list of terms")
        lexicon = sorted(DEFAULT_MARKER_LEXICON)
    min_total = fraw.get("min_marker_total", DEFAULT_MIN_MARKER_TOTAL)
    if not isinstance(min_total, int) or min_total < 1:
        errors.append(f"filter.min_marker_total: must be an integer >= 1, got {min_total!r}")
        min_total = DEFAULT_MIN_MARKER_TOTAL
    date_start = _parse_date(fraw.get("date_start"), "filter.date_start", DEFAULT_DATE_START, errors)
    date_end = _parse_date(fraw.get("date_end"), "filter.date_end", DEFAULT_DATE_END, errors)
    if date_start > date_end:
        errors.append("filter.date_start must be <= filter.date_end")
        date_start, date_end = DEFAULT_DATE_START, DEFAULT_DATE_END
    require_score = fraw.get("require_score", True)
    if not isinstance(require_score, bool):
        errors.append("filter.require_score: must be a boolean")
        require_score = True

    praw = raw.get("provider") or {}
    kind_raw = praw.get("kind", ProviderKind.DETERMINISTIC_MOCK.value)
    try:
        kind = ProviderKind(kind_raw)
    except ValueError:
        errors.append(
            f"provider.kind: {kind_raw!r} is not one of "
            f"{[k.value for k in ProviderKind]}"
        )
        kind = ProviderKind.DETERMINISTIC_MOCK
    max_attempts = praw.get("max_attempts", 3)
    if not isinstance(max_attempts, int) or max_attempts < 1:
        errors.append(f"provider.max_attempts: must be an integer >= 1, got {max_attempts!r}")
        max_attempts = 3
    endpoint = praw.get("endpoint")
    model_name = praw.get("model_name")
    if kind is ProviderKind.LIVE_HTTP:
        if not endpoint:
            errors.append("provider.endpoint: required for live_http")
        if not model_name:
            errors.append("provider.model_name: required for live_http")
    script_path = praw.get("script_path")
    if kind is ProviderKind.DETERMINISTIC_MOCK and script_path:
        script = resolve(script_path, script_path)
        if not script.exists():
            errors.append(f"provider.script_path: file not found: {script}")
        script_path = str(script)
    transcripts_path = praw.get("transcripts_path")
    if kind is ProviderKind.REPLAY:
        if not transcripts_path:
            errors.append("provider.transcripts_path: required for replay")
        else:
            transcripts = resolve(transcripts_path, transcripts_path)
            if not transcripts.exists():
                errors.append(f"provider.transcripts_path: file not found: {transcripts}")
            transcripts_path = str(transcripts)

    overrides: dict[str, Path] = {}
    for role, override in (raw.get("prompts") or {}).items():
        if role not in AUTHORED_ROLES:
            errors.append(f"prompts.{role}: only non-canonical templates may be overridden")
            continue
        override_path = resolve(override, override)
        if not override_path.exists():
            errors.append(f"prompts.{role}: file not found: {override_path}")
        overrides[role] = override_path

    concurrency = raw.get("concurrency", 1)
    if not isinstance(concurrency, int) or concurrency < 1:
        errors.append(f"concurrency: must be an integer >= 1, got {concurrency!r}")
        concurrency = 1
    curation_raw = raw.get("curation") or {}
    lease_minutes = curation_raw.get("lease_minutes", DEFAULT_LEASE_MINUTES)
    if not isinstance(lease_minutes, (int, float)) or lease_minutes <= 0:
        errors.append(f"curation.lease_minutes: must be a positive number, got {lease_minutes!r}")
        lease_minutes = DEFAULT_LEASE_MINUTES
    required_accepts = curation_raw.get("required_accepts", 1)
    if not isinstance(required_accepts, int) or required_accepts < 1:
        errors.append(
            f"curation.required_accepts: must be an integer >= 1, got {required_accepts!r}"
        )
        required_accepts = 1

    if errors:
        raise ConfigError(errors)

    policy = FilterPolicy(
        marker_lexicon=frozenset(str(t).lower() for t in lexicon),
        min_marker_total=min_total,
        date_start=date_start,
        date_end=date_end,
        require_score=require_score,
    )
    binding = ProviderBinding(
        name=praw.get("name", kind.value),
        kind=kind,
        endpoint=endpoint,
        model_name=model_name,
        timeout_s=float(praw.get("timeout_s", 120.0)),
        max_attempts=max_attempts,
        backoff_base_s=praw.get("backoff_base_s"),
        max_payload_bytes=praw.get("max_payload_bytes"),
        script_path=script_path,
        transcripts_path=transcripts_path,
        api_key_env=praw.get("api_key_env"),
    )
    return AppConfig(
        corpus_dir=corpus_dir,
        store_dir=store_dir,
        exports_dir=exports_dir,
        filter_policy=policy,
        provider=binding,
        prompt_overrides=overrides,
        concurrency=concurrency,
        lease_minutes=lease_minutes,
        required_accepts=required_accepts,
    )
