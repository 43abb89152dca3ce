"""Human-expert selection workflow.

Reviewers pull the oldest pending sample under a short exclusive lease,
answer the four-question rubric and accept, reject or edit. Accepting
requires all four rubric answers true; edits bump the version and re-enter
the queue. Every decision is an immutable event; exports are deterministic
files traceable to the accepting decisions.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Callable

from .errors import (
    InvalidDecision,
    NothingAccepted,
    QueueEmpty,
    RubricViolation,
    UnknownSample,
    VersionConflict,
)
from .store import Sample, SampleStore, Stage

DEFAULT_LEASE_MINUTES = 30


@dataclass
class ReviewDecision:
    sample_id: str
    reviewer_id: str
    q1_reasoning_type: bool
    q2_clarity: bool
    q3_correctness: bool
    q4_density: bool
    action: str  # accept | reject | edit
    base_version: int
    edited_question: str | None = None
    edited_answer: str | None = None
    note: str = ""
    difficulty_rank: int | None = None

    def rubric_all_true(self) -> bool:
        return (
            self.q1_reasoning_type
            and self.q2_clarity
            and self.q3_correctness
            and self.q4_density
        )

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "reviewer_id": self.reviewer_id,
            "q1_reasoning_type": self.q1_reasoning_type,
            "q2_clarity": self.q2_clarity,
            "q3_correctness": self.q3_correctness,
            "q4_density": self.q4_density,
            "action": self.action,
            "base_version": self.base_version,
            "edited_question": self.edited_question,
            "edited_answer": self.edited_answer,
            "note": self.note,
            "difficulty_rank": self.difficulty_rank,
        }


@dataclass
class DatasetExport:
    name: str
    created_at: str
    selection_policy: str
    items: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "created_at": self.created_at,
            "selection_policy": self.selection_policy,
            "count": len(self.items),
        }


POLICY_ALL = "all_accepted"
POLICY_TOP_K = "top_k_by_difficulty_rank"


class Curation:
    """Queue, decisions and exports on top of the sample store.

    Leases are in-memory runtime state (they expire anyway); everything
    durable goes through the event log.
    """

    def __init__(
        self,
        store: SampleStore,
        lease_minutes: float = DEFAULT_LEASE_MINUTES,
        required_accepts: int = 1,
        now: Callable[[], datetime] | None = None,
    ):
        self.store = store
        self.lease_minutes = lease_minutes
        self.required_accepts = required_accepts
        self._now = now or (lambda: datetime.now(timezone.utc))
        self._leases: dict[str, tuple[str, datetime]] = {}
        self._lock = threading.Lock()

    # -- queue ---------------------------------------------------------------

    def enqueue_samples(self, sample_ids: list[str]) -> int:
        """Move filtered (or flagged refined) samples into review_pending.

        Idempotent: already-queued ids add nothing. Intake order is paper,
        then expression, then sample id.
        """
        eligible: list[Sample] = []
        for sample_id in sample_ids:
            sample = self.store.get_sample(sample_id)  # raises UnknownSample
            if self.store.queue_seq(sample_id) is not None:
                continue
            if sample.stage in (Stage.FILTERED, Stage.REFINED, Stage.REVIEW_PENDING):
                eligible.append(sample)
        eligible.sort(key=lambda s: (s.paper_id, s.expression.expr_id, s.sample_id))
        added = 0
        for sample in eligible:
            self.store.enqueue(sample.sample_id)
            added += 1
        return added

    def _active_lease(self, sample_id: str) -> tuple[str, datetime] | None:
        lease = self._leases.get(sample_id)
        if lease is None:
            return None
        if lease[1] <= self._now():
            del self._leases[sample_id]  # expired: back in the queue
            return None
        return lease

    def next_for_review(self, reviewer_id: str, paper_id: str | None = None) -> Sample:
        """Oldest unleased review_pending sample, leased to this reviewer."""
        if not reviewer_id:
            raise InvalidDecision("reviewer_id required")
        with self._lock:
            candidates = [
                (self.store.queue_seq(s.sample_id), s)
                for s in self.store.samples()
                if s.stage is Stage.REVIEW_PENDING
                and self.store.queue_seq(s.sample_id) is not None
                and (paper_id is None or s.paper_id == paper_id)
            ]
            candidates.sort(key=lambda pair: pair[0])
            for _, sample in candidates:
                lease = self._active_lease(sample.sample_id)
                if lease is not None and lease[0] != reviewer_id:
                    continue
                expires = self._now() + timedelta(minutes=self.lease_minutes)
                self._leases[sample.sample_id] = (reviewer_id, expires)
                return sample
        raise QueueEmpty("no samples pending review" + (f" for paper {paper_id}" if paper_id else ""))

    def release_lease(self, sample_id: str) -> None:
        with self._lock:
            self._leases.pop(sample_id, None)

    def active_leases(self) -> dict[str, str]:
        with self._lock:
            return {
                sid: holder
                for sid, (holder, _) in self._leases.items()
                if self._active_lease(sid) is not None
            }

    # -- decisions -------------------------------------------------------------

    def submit_decision(self, decision: ReviewDecision) -> int:
        """Apply one verdict; returns the sample's resulting version."""
        sample = self.store.get_sample(decision.sample_id)  # raises UnknownSample
        if sample.stage is not Stage.REVIEW_PENDING:
            raise InvalidDecision(
                f"sample {decision.sample_id} is {sample.stage.value}, not review_pending"
            )
        if decision.base_version != sample.version:
            raise VersionConflict(
                f"base_version {decision.base_version} != current {sample.version}"
            )
        if decision.action == "accept":
            if not decision.rubric_all_true():
                raise RubricViolation("accept requires all four rubric answers true")
            accepts = 1 + sum(
                1 for d in self.store.decisions(decision.sample_id)
                if d["action"] == "accept" and d["base_version"] == sample.version
            )
            resulting = Stage.ACCEPTED if accepts >= self.required_accepts else Stage.REVIEW_PENDING
            self.store.append_decision(
                decision.to_dict(), resulting_stage=resulting, new_version=sample.version
            )
            self.release_lease(decision.sample_id)
            return sample.version
        if decision.action == "reject":
            self.store.append_decision(
                decision.to_dict(), resulting_stage=Stage.REJECTED, new_version=sample.version
            )
            self.release_lease(decision.sample_id)
            return sample.version
        if decision.action == "edit":
            if decision.edited_question is None and decision.edited_answer is None:
                raise InvalidDecision("edit requires edited_question or edited_answer")
            fields = {}
            if decision.edited_question is not None:
                fields["question"] = decision.edited_question
            if decision.edited_answer is not None:
                fields["answer"] = decision.edited_answer
            new_version = sample.version + 1
            self.store.append_decision(
                decision.to_dict(),
                resulting_stage=Stage.REVIEW_PENDING,
                new_version=new_version,
                fields=fields,
                requeue=True,
            )
            self.release_lease(decision.sample_id)
            return new_version
        raise InvalidDecision(f"unknown action {decision.action!r}")

    # -- audit -------------------------------------------------------------------

    def audit_trail(self, sample_id: str) -> list[dict]:
        """Every event touching the sample, oldest first."""
        return self.store.events_for(sample_id)

    # -- export ---------------------------------------------------------------------

    def export_dataset(
        self,
        name: str,
        policy: str = POLICY_ALL,
        k: int | None = None,
        out_dir: Path | str | None = None,
    ) -> tuple[DatasetExport, Path | None]:
        """Write accepted samples as JSONL: question, answer, provenance per line."""
        accepted = [s for s in self.store.samples() if s.stage is Stage.ACCEPTED]
        if not accepted:
            raise NothingAccepted("no accepted samples to export")
        decisions_by_sample: dict[str, list[dict]] = {}
        for d in self.store.decisions():
            if d["action"] == "accept":
                decisions_by_sample.setdefault(d["sample_id"], []).append(d)

        def rank_of(sample: Sample) -> float:
            ranks = [
                d["difficulty_rank"]
                for d in decisions_by_sample.get(sample.sample_id, [])
                if d.get("difficulty_rank") is not None
            ]
            return min(ranks) if ranks else float("inf")

        if policy == POLICY_TOP_K:
            if not k or k < 1:
                raise InvalidDecision("top_k policy requires k >= 1")
            accepted.sort(key=lambda s: (rank_of(s), s.paper_id, s.expression.expr_id, s.sample_id))
            accepted = accepted[:k]
        elif policy == POLICY_ALL:
            accepted.sort(key=lambda s: (s.paper_id, s.expression.expr_id, s.sample_id))
        else:
            raise InvalidDecision(f"unknown selection policy {policy!r}")

        items = []
        for sample in accepted:
            items.append({
                "question": sample.question,
                "answer": sample.answer,
                "provenance": {
                    "paper_id": sample.paper_id,
                    "expr_id": sample.expression.expr_id,
                    "decision_ids": [
                        d["decision_id"] for d in decisions_by_sample.get(sample.sample_id, [])
                    ],
                },
            })
        export = DatasetExport(
            name=name,
            created_at=self._now().isoformat(),
            selection_policy=policy,
            items=items,
        )
        path = None
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            path = out / f"{name}.jsonl"
            with path.open("w", encoding="utf-8") as fh:
                for item in items:
                    fh.write(json.dumps(item, sort_keys=True) + "\n")
            meta = out / f"{name}.meta.json"
            meta.write_text(json.dumps(export.to_dict(), sort_keys=True, indent=1), encoding="utf-8")
        return export, path
