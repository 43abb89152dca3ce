"""Append-only event log with snapshot materialization for samples.

All pipeline stage transitions and review decisions are events, one JSON
object per line. The in-memory state (and the snapshot file) is a pure fold
over the log: replaying events.jsonl reproduces it exactly. Transcripts are
stored in their own append-only file and referenced from events by id.
"""

from __future__ import annotations

import json
import threading
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable

from .errors import UnknownSample
from .texmath import MathExpression


class Stage(str, Enum):
    EXTRACTED = "extracted"
    DRAFTED = "drafted"
    RETRIEVED = "retrieved"
    CONTEXTUALIZED = "contextualized"
    REFINED = "refined"
    FILTERED = "filtered"
    REVIEW_PENDING = "review_pending"
    ACCEPTED = "accepted"
    REJECTED = "rejected"


STAGE_ORDER = {stage: i for i, stage in enumerate(Stage)}


class AgentRole(str, Enum):
    QUERY_DRAFT = "query_draft"
    ANSWER_RETRIEVER = "answer_retriever"
    CONTEXT_COLLECTOR = "context_collector"
    QUESTION_REFINER = "question_refiner"
    ANSWER_FILTER = "answer_filter"


class Outcome(str, Enum):
    OK = "ok"
    PARSE_FAILED = "parse_failed"
    PROVIDER_ERROR = "provider_error"


@dataclass
class ContextSnippet:
    text: str
    locator: str = ""

    def __post_init__(self):
        if not self.text:
            raise ValueError("snippet text must be non-empty")


@dataclass
class AgentTranscript:
    transcript_id: str
    subject: str  # expr_id while drafting, sample_id afterwards
    agent_role: str
    prompt_text: str
    raw_response: str
    attempt: int
    outcome: Outcome
    provider_name: str
    token_counts: tuple[int, int] | None = None

    def to_dict(self) -> dict:
        data = asdict(self)
        data["outcome"] = self.outcome.value
        data["token_counts"] = list(self.token_counts) if self.token_counts else None
        return data


@dataclass
class Sample:
    sample_id: str
    paper_id: str
    expression: MathExpression
    query: str | None = None
    whole_label: str | None = None
    evidence: list[ContextSnippet] | None = None
    question: str | None = None
    answer: str | None = None
    stage: Stage = Stage.EXTRACTED
    transcripts: list[str] = field(default_factory=list)
    version: int = 1
    flags: list[str] = field(default_factory=list)
    reject_reason: str | None = None
    failure_report: dict | None = None

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "paper_id": self.paper_id,
            "expression": self.expression.to_dict(),
            "query": self.query,
            "whole_label": self.whole_label,
            "evidence": (
                None if self.evidence is None
                else [{"text": s.text, "locator": s.locator} for s in self.evidence]
            ),
            "question": self.question,
            "answer": self.answer,
            "stage": self.stage.value,
            "transcripts": list(self.transcripts),
            "version": self.version,
            "flags": list(self.flags),
            "reject_reason": self.reject_reason,
            "failure_report": self.failure_report,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Sample":
        return cls(
            sample_id=data["sample_id"],
            paper_id=data["paper_id"],
            expression=MathExpression.from_dict(data["expression"]),
            query=data.get("query"),
            whole_label=data.get("whole_label"),
            evidence=(
                None if data.get("evidence") is None
                else [ContextSnippet(**s) for s in data["evidence"]]
            ),
            question=data.get("question"),
            answer=data.get("answer"),
            stage=Stage(data["stage"]),
            transcripts=list(data.get("transcripts", [])),
            version=data.get("version", 1),
            flags=list(data.get("flags", [])),
            reject_reason=data.get("reject_reason"),
            failure_report=data.get("failure_report"),
        )


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


class SampleStore:
    """Event-sourced store: state is a fold over events.jsonl.

    Mutations append one event and apply it in memory under a lock, so
    concurrent per-sample pipelines interleave safely. ``rebuild()`` replays
    the log from disk; the snapshot file is a convenience materialization.
    """

    def __init__(self, root: Path | str, clock: Callable[[], str] | None = None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.events_path = self.root / "events.jsonl"
        self.transcripts_path = self.root / "transcripts.jsonl"
        self.snapshot_path = self.root / "snapshot.json"
        self._clock = clock or _utc_now
        self._lock = threading.RLock()
        self._samples: dict[str, Sample] = {}
        self._queue_seq: dict[str, int] = {}
        self._decisions: list[dict] = []
        self._next_seq = 1
        self._next_decision = 1
        if self.events_path.exists():
            with self.events_path.open(encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self._apply(json.loads(line))

    # -- event plumbing ----------------------------------------------------

    def _append(self, event: dict) -> None:
        event = {"ts": self._clock(), **event}
        with self._lock:
            with self.events_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, sort_keys=True) + "\n")
            self._apply(event)

    def _apply(self, event: dict) -> None:
        kind = event["event"]
        if kind == "created":
            sample = Sample.from_dict(event["sample"])
            self._samples[sample.sample_id] = sample
        elif kind == "stage":
            sample = self._samples[event["sample_id"]]
            sample.stage = Stage(event["stage"])
            for key, value in (event.get("fields") or {}).items():
                if key == "evidence":
                    value = None if value is None else [ContextSnippet(**s) for s in value]
                setattr(sample, key, value)
            sample.transcripts.extend(event.get("transcripts") or [])
            for flag in event.get("flags") or []:
                if flag not in sample.flags:
                    sample.flags.append(flag)
            if event.get("reason"):
                sample.reject_reason = event["reason"]
        elif kind == "flagged":
            sample = self._samples[event["sample_id"]]
            if event["flag"] not in sample.flags:
                sample.flags.append(event["flag"])
            for key, value in (event.get("fields") or {}).items():
                setattr(sample, key, value)
        elif kind == "enqueued":
            self._queue_seq[event["sample_id"]] = event["seq"]
            self._next_seq = max(self._next_seq, event["seq"] + 1)
            sample = self._samples[event["sample_id"]]
            sample.stage = Stage.REVIEW_PENDING
        elif kind == "decision":
            self._decisions.append(event["decision"])
            self._next_decision += 1
            sample = self._samples[event["decision"]["sample_id"]]
            sample.stage = Stage(event["resulting_stage"])
            sample.version = event["new_version"]
            for key, value in (event.get("fields") or {}).items():
                setattr(sample, key, value)
            if event.get("requeue_seq") is not None:
                self._queue_seq[sample.sample_id] = event["requeue_seq"]
                self._next_seq = max(self._next_seq, event["requeue_seq"] + 1)
        else:
            raise ValueError(f"unknown event kind {kind!r}")

    # -- pipeline-facing API ------------------------------------------------

    def create_sample(self, sample: Sample) -> None:
        with self._lock:
            if sample.sample_id in self._samples:
                raise ValueError(f"sample {sample.sample_id!r} already exists")
            self._append({"event": "created", "sample": sample.to_dict()})

    def advance_stage(
        self,
        sample_id: str,
        stage: Stage,
        fields: dict | None = None,
        transcripts: list[str] | None = None,
        flags: list[str] | None = None,
        reason: str | None = None,
    ) -> Sample:
        with self._lock:
            sample = self._require(sample_id)
            if STAGE_ORDER[stage] < STAGE_ORDER[sample.stage]:
                raise ValueError(
                    f"stage may not move backwards: {sample.stage.value} -> {stage.value}"
                )
            serial_fields = dict(fields or {})
            if "evidence" in serial_fields and serial_fields["evidence"] is not None:
                serial_fields["evidence"] = [
                    {"text": s.text, "locator": s.locator} for s in serial_fields["evidence"]
                ]
            self._append({
                "event": "stage",
                "sample_id": sample_id,
                "stage": stage.value,
                "fields": serial_fields,
                "transcripts": list(transcripts or []),
                "flags": list(flags or []),
                "reason": reason,
            })
            return self.get_sample(sample_id)

    def flag_sample(self, sample_id: str, flag: str, fields: dict | None = None) -> Sample:
        """Attach a flag (and optionally restore content) without moving the stage."""
        with self._lock:
            self._require(sample_id)
            self._append({
                "event": "flagged",
                "sample_id": sample_id,
                "flag": flag,
                "fields": dict(fields or {}),
            })
            return self.get_sample(sample_id)

    def add_transcript(self, transcript: AgentTranscript) -> str:
        with self._lock:
            with self.transcripts_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(transcript.to_dict(), sort_keys=True) + "\n")
        return transcript.transcript_id

    def transcripts(self, ids: list[str] | None = None) -> list[dict]:
        if not self.transcripts_path.exists():
            return []
        with self.transcripts_path.open(encoding="utf-8") as fh:
            records = [json.loads(line) for line in fh if line.strip()]
        if ids is None:
            return records
        wanted = set(ids)
        return [r for r in records if r["transcript_id"] in wanted]

    # -- curation-facing API --------------------------------------------------

    def enqueue(self, sample_id: str) -> int:
        with self._lock:
            self._require(sample_id)
            if sample_id in self._queue_seq:
                return self._queue_seq[sample_id]
            seq = self._next_seq
            self._append({"event": "enqueued", "sample_id": sample_id, "seq": seq})
            return seq

    def queue_seq(self, sample_id: str) -> int | None:
        return self._queue_seq.get(sample_id)

    def append_decision(
        self,
        decision: dict,
        resulting_stage: Stage,
        new_version: int,
        fields: dict | None = None,
        requeue: bool = False,
    ) -> str:
        with self._lock:
            decision = dict(decision)
            decision["decision_id"] = f"d{self._next_decision:04d}"
            decision.setdefault("decided_at", self._clock())
            event = {
                "event": "decision",
                "decision": decision,
                "resulting_stage": resulting_stage.value,
                "new_version": new_version,
                "fields": dict(fields or {}),
                "requeue_seq": self._next_seq if requeue else None,
            }
            self._append(event)
            return decision["decision_id"]

    def decisions(self, sample_id: str | None = None) -> list[dict]:
        with self._lock:
            if sample_id is None:
                return [dict(d) for d in self._decisions]
            return [dict(d) for d in self._decisions if d["sample_id"] == sample_id]

    # -- reads ----------------------------------------------------------------

    def _require(self, sample_id: str) -> Sample:
        sample = self._samples.get(sample_id)
        if sample is None:
            raise UnknownSample(f"unknown sample {sample_id!r}")
        return sample

    def get_sample(self, sample_id: str) -> Sample:
        with self._lock:
            return Sample.from_dict(self._require(sample_id).to_dict())

    def has_sample(self, sample_id: str) -> bool:
        with self._lock:
            return sample_id in self._samples

    def samples(self) -> list[Sample]:
        with self._lock:
            return [Sample.from_dict(s.to_dict()) for s in self._samples.values()]

    def events_for(self, sample_id: str) -> list[dict]:
        """Every event touching one sample, in log order."""
        self._require(sample_id)
        out = []
        if self.events_path.exists():
            with self.events_path.open(encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    event = json.loads(line)
                    sid = (
                        event.get("sample_id")
                        or event.get("decision", {}).get("sample_id")
                        or event.get("sample", {}).get("sample_id")
                    )
                    if sid == sample_id:
                        out.append(event)
        return out

    # -- snapshot -------------------------------------------------------------

    def state(self) -> dict:
        with self._lock:
            return {
                "samples": {sid: s.to_dict() for sid, s in sorted(self._samples.items())},
                "queue_seq": dict(sorted(self._queue_seq.items())),
                "decisions": [dict(d) for d in self._decisions],
                "next_seq": self._next_seq,
                "next_decision": self._next_decision,
            }

    def write_snapshot(self) -> Path:
        snapshot = json.dumps(self.state(), sort_keys=True, indent=1)
        tmp = self.snapshot_path.with_suffix(".json.tmp")
        tmp.write_text(snapshot, encoding="utf-8")
        tmp.replace(self.snapshot_path)
        return self.snapshot_path

    def rebuild(self) -> dict:
        """Replay the event log from disk into a fresh state dict."""
        return SampleStore(self.root, clock=self._clock).state()
