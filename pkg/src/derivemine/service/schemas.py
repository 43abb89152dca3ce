"""Pydantic request/response models for the curation HTTP API."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field


class ExpressionView(BaseModel):
    expr_id: str
    kind: str
    latex: str
    number_label: str | None = None
    file: str = ""
    start: int = 0
    end: int = 0


class SnippetView(BaseModel):
    text: str
    locator: str = ""


class SampleView(BaseModel):
    sample_id: str
    paper_id: str
    expression: ExpressionView
    query: str | None = None
    whole_label: str | None = None
    evidence: list[SnippetView] | None = None
    question: str | None = None
    answer: str | None = None
    stage: str
    version: int
    flags: list[str] = Field(default_factory=list)
    transcripts: list[str] = Field(default_factory=list)
    failure_report: dict[str, Any] | None = None


class TranscriptMeta(BaseModel):
    transcript_id: str
    agent_role: str
    attempt: int
    outcome: str
    provider_name: str


class NextForReviewResponse(BaseModel):
    sample: SampleView
    transcript_meta: list[TranscriptMeta] = Field(default_factory=list)


class DecisionRequest(BaseModel):
    reviewer_id: str
    q1_reasoning_type: bool
    q2_clarity: bool
    q3_correctness: bool
    q4_density: bool
    action: Literal["accept", "reject", "edit"]
    base_version: int
    edited_question: str | None = None
    edited_answer: str | None = None
    note: str = ""
    difficulty_rank: int | None = None


class DecisionResponse(BaseModel):
    sample_id: str
    new_version: int
    stage: str


class AuditResponse(BaseModel):
    sample_id: str
    events: list[dict[str, Any]]


class ExportRequest(BaseModel):
    name: str
    policy: Literal["all_accepted", "top_k_by_difficulty_rank"] = "all_accepted"
    k: int | None = None


class ExportView(BaseModel):
    name: str
    created_at: str
    selection_policy: str
    count: int
    items: list[dict[str, Any]] | None = None


class ErrorBody(BaseModel):
    code: str
    message: str
