"""Agent chain orchestration.

Each expression flows draft -> retrieve -> collect -> refine -> filter; every
provider attempt is logged as a transcript; failures of one expression never
abort the paper. The whole paper body travels with the draft and retrieve
payloads (never a truncation): an oversized paper fails PayloadTooLarge
before any attempt instead of being chunked silently.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

from ..corpus import CorpusStore, PaperRecord
from ..errors import (
    ExhaustedRetries,
    GradeOutOfRange,
    PaperNotAccepted,
    ParseFailed,
    PayloadTooLarge,
    SchemaViolation,
    SelfContainmentFailed,
)
from ..store import (
    AgentRole,
    AgentTranscript,
    ContextSnippet,
    Outcome,
    Sample,
    SampleStore,
    Stage,
)
from ..texmath import MathExpression, canonicalize, extract_from_source
from .jsonl import parse_agent_jsonl
from .prompts import render_prompt
from .providers import BaseProvider, ProviderBinding, ProviderError, build_provider
from .selfcontain import check_self_containment, cited_formulas

logger = logging.getLogger(__name__)

FLAG_SELF_CONTAINMENT = "self_containment_failed"
FLAG_OVER_FILTERED = "over_filtered"

REASON_NO_ANSWER = "no_answer_in_paper"
REASON_EXHAUSTED = "exhausted_retries"

_UNANSWERABLE = object()


def call_agent(
    provider: BaseProvider,
    binding: ProviderBinding,
    role: str,
    subject: str,
    prompt_text: str,
    validate: Callable[[str], object],
    store: SampleStore | None = None,
    sleep: Callable[[float], None] = time.sleep,
):
    """Send one prompt with retries; every attempt becomes a transcript.

    ``validate`` parses the raw response; ParseFailed, SchemaViolation,
    SelfContainmentFailed and GradeOutOfRange all re-ask the provider
    (outcome parse_failed) up to binding.max_attempts with exponential
    backoff. Returns (validated payload, transcript ids).
    """
    if binding.max_payload_bytes is not None:
        if len(prompt_text.encode("utf-8")) > binding.max_payload_bytes:
            raise PayloadTooLarge(
                f"prompt is {len(prompt_text.encode('utf-8'))} bytes, "
                f"budget is {binding.max_payload_bytes}"
            )
    transcript_ids: list[str] = []
    last_error: Exception | None = None
    for attempt in range(1, binding.max_attempts + 1):
        raw = ""
        token_counts = None
        try:
            response = provider.send(role, prompt_text, subject, attempt)
            raw = response.text
            token_counts = response.token_counts
            payload = validate(raw)
            outcome = Outcome.OK
        except ProviderError as exc:
            outcome = Outcome.PROVIDER_ERROR
            last_error = exc
        except (ParseFailed, SchemaViolation, SelfContainmentFailed, GradeOutOfRange) as exc:
            outcome = Outcome.PARSE_FAILED
            last_error = exc
        transcript = AgentTranscript(
            transcript_id=f"{subject}:{role}:a{attempt}",
            subject=subject,
            agent_role=role,
            prompt_text=prompt_text,
            raw_response=raw,
            attempt=attempt,
            outcome=outcome,
            provider_name=provider.name,
            token_counts=token_counts,
        )
        if store is not None:
            store.add_transcript(transcript)
        transcript_ids.append(transcript.transcript_id)
        if outcome is Outcome.OK:
            return payload, transcript_ids
        logger.debug("attempt %d/%d for %s(%s) failed: %s",
                     attempt, binding.max_attempts, role, subject, last_error)
        if attempt < binding.max_attempts:
            delay = binding.backoff_base * (2 ** (attempt - 1))
            if delay > 0:
                sleep(delay)
    error = ExhaustedRetries(
        f"{role} for {subject} failed after {binding.max_attempts} attempts: {last_error}",
        attempts=binding.max_attempts,
        last_error=f"{type(last_error).__name__}: {last_error}",
    )
    error.transcript_ids = transcript_ids
    error.cause_report = getattr(last_error, "report", None)
    raise error


def _kind_line(expression: MathExpression) -> str:
    return json.dumps({expression.kind.value: expression.latex})


def _sample_line(payload: dict) -> str:
    return json.dumps(payload)


# ---------------------------------------------------------------------------
# stage operations

def draft_queries(
    record: PaperRecord,
    expressions: list[MathExpression],
    binding: ProviderBinding,
    store: SampleStore,
    provider: BaseProvider | None = None,
    sleep: Callable[[float], None] = time.sleep,
    prompt_overrides: dict | None = None,
) -> list[Sample]:
    """Draft >=1 query per expression; each query becomes its own sample.

    A query must embed the target expression's full LaTeX (checked by
    substring after canonicalization), so number-only citations violate the
    schema and are retried. An expression whose drafting exhausts retries
    yields one rejected sample.
    """
    provider = provider or build_provider(binding)
    samples: list[Sample] = []
    for expression in expressions:
        samples.extend(
            _draft_one_expression(
                record, expression, binding, store, provider, sleep, prompt_overrides
            )
        )
    return samples


def _draft_one_expression(
    record: PaperRecord,
    expression: MathExpression,
    binding: ProviderBinding,
    store: SampleStore,
    provider: BaseProvider,
    sleep: Callable[[float], None],
    prompt_overrides: dict | None,
) -> list[Sample]:
    subject = f"{record.paper_id}.{expression.expr_id}"
    base = Sample(
        sample_id=f"{subject}.q0",
        paper_id=record.paper_id,
        expression=expression,
        stage=Stage.EXTRACTED,
    )
    store.create_sample(base)
    prompt = render_prompt(
        AgentRole.QUERY_DRAFT.value,
        [_kind_line(expression)],
        paper_body=record.body_text,
        overrides=prompt_overrides,
    )

    def validate(raw: str) -> list[str]:
        records = parse_agent_jsonl(raw, [expression.kind.value, "query"])
        if not records:
            raise SchemaViolation("draft returned no queries; at least one is required")
        queries = []
        for rec in records:
            query = rec["query"]
            if not isinstance(query, str) or not query.strip():
                raise SchemaViolation("query must be a non-empty string")
            if expression.latex not in canonicalize(query, mode="prose"):
                raise SchemaViolation(
                    "query omits the target expression's LaTeX (number-only citation)"
                )
            queries.append(query)
        return queries

    try:
        queries, transcript_ids = call_agent(
            provider, binding, AgentRole.QUERY_DRAFT.value, subject, prompt,
            validate, store=store, sleep=sleep,
        )
    except ExhaustedRetries as exc:
        store.advance_stage(
            base.sample_id, Stage.REJECTED,
            transcripts=getattr(exc, "transcript_ids", []),
            reason=REASON_EXHAUSTED,
        )
        return [store.get_sample(base.sample_id)]

    out: list[Sample] = []
    for i, query in enumerate(queries):
        if i == 0:
            sample_id = base.sample_id
        else:
            sample_id = f"{subject}.q{i}"
            store.create_sample(Sample(
                sample_id=sample_id,
                paper_id=record.paper_id,
                expression=expression,
                stage=Stage.EXTRACTED,
            ))
        out.append(store.advance_stage(
            sample_id, Stage.DRAFTED,
            fields={"query": query},
            transcripts=transcript_ids if i == 0 else [],
        ))
    return out


def retrieve_answer(
    record: PaperRecord,
    sample: Sample,
    binding: ProviderBinding,
    store: SampleStore,
    provider: BaseProvider | None = None,
    sleep: Callable[[float], None] = time.sleep,
    prompt_overrides: dict | None = None,
) -> Sample:
    """Populate whole_label from the paper; never fabricate.

    The response must keep the two original keys untouched and add
    whole_label. An empty response or a null whole_label means the paper
    does not answer the query: the sample is rejected, not invented.
    """
    if sample.stage is not Stage.DRAFTED:
        raise ValueError(f"retrieve_answer requires stage drafted, got {sample.stage.value}")
    provider = provider or build_provider(binding)
    kind_key = sample.expression.kind.value
    sent_line = _sample_line({kind_key: sample.expression.latex, "query": sample.query})
    prompt = render_prompt(
        AgentRole.ANSWER_RETRIEVER.value,
        [sent_line],
        paper_body=record.body_text,
        overrides=prompt_overrides,
    )

    def validate(raw: str):
        records = parse_agent_jsonl(raw, [kind_key, "query"])
        if not records:
            return _UNANSWERABLE
        if len(records) != 1:
            raise SchemaViolation(f"expected one record, got {len(records)}")
        rec = records[0]
        if rec[kind_key] != sample.expression.latex or rec["query"] != sample.query:
            raise SchemaViolation("original keys were mutated")
        if "whole_label" not in rec:
            raise SchemaViolation("missing whole_label key")
        label = rec["whole_label"]
        if label is None or (isinstance(label, str) and not label.strip()):
            return _UNANSWERABLE
        if not isinstance(label, str):
            raise SchemaViolation("whole_label must be a string")
        return label

    payload, transcript_ids = call_agent(
        provider, binding, AgentRole.ANSWER_RETRIEVER.value, sample.sample_id, prompt,
        validate, store=store, sleep=sleep,
    )
    if payload is _UNANSWERABLE:
        return store.advance_stage(
            sample.sample_id, Stage.REJECTED,
            transcripts=transcript_ids, reason=REASON_NO_ANSWER,
        )
    return store.advance_stage(
        sample.sample_id, Stage.RETRIEVED,
        fields={"whole_label": payload}, transcripts=transcript_ids,
    )


def collect_context(
    record: PaperRecord,
    sample: Sample,
    binding: ProviderBinding,
    store: SampleStore,
    provider: BaseProvider | None = None,
    sleep: Callable[[float], None] = time.sleep,
    prompt_overrides: dict | None = None,
) -> Sample:
    """Gather evidence snippets; an empty list is legal when nothing is missing."""
    if sample.stage is not Stage.RETRIEVED:
        raise ValueError(f"collect_context requires stage retrieved, got {sample.stage.value}")
    provider = provider or build_provider(binding)
    sent_line = _sample_line({
        sample.expression.kind.value: sample.expression.latex,
        "query": sample.query,
        "whole_label": sample.whole_label,
    })
    prompt = render_prompt(
        AgentRole.CONTEXT_COLLECTOR.value,
        [sent_line],
        paper_body=record.body_text,
        overrides=prompt_overrides,
    )

    def validate(raw: str) -> list[ContextSnippet]:
        records = parse_agent_jsonl(raw, ["evidence"])
        if len(records) != 1:
            raise SchemaViolation(f"expected one record, got {len(records)}")
        evidence = records[0]["evidence"]
        if not isinstance(evidence, list):
            raise SchemaViolation("evidence must be a list")
        snippets = []
        for item in evidence:
            if not isinstance(item, dict) or not isinstance(item.get("text"), str):
                raise SchemaViolation("evidence items need a text field")
            if not item["text"].strip():
                raise SchemaViolation("evidence text must be non-empty")
            snippets.append(ContextSnippet(
                text=item["text"], locator=str(item.get("locator", ""))
            ))
        return snippets

    snippets, transcript_ids = call_agent(
        provider, binding, AgentRole.CONTEXT_COLLECTOR.value, sample.sample_id, prompt,
        validate, store=store, sleep=sleep,
    )
    return store.advance_stage(
        sample.sample_id, Stage.CONTEXTUALIZED,
        fields={"evidence": snippets}, transcripts=transcript_ids,
    )


def refine_question(
    sample: Sample,
    binding: ProviderBinding,
    store: SampleStore,
    provider: BaseProvider | None = None,
    sleep: Callable[[float], None] = time.sleep,
    prompt_overrides: dict | None = None,
) -> Sample:
    """Weave evidence into a self-contained question/answer pair.

    A response that parses but fails the self-containment checker is
    retried; if the last attempt still fails, the sample is parked for human
    review carrying the failure report instead of being dropped.
    """
    if sample.stage is not Stage.CONTEXTUALIZED:
        raise ValueError(f"refine_question requires stage contextualized, got {sample.stage.value}")
    provider = provider or build_provider(binding)
    sent_line = _sample_line({
        "query": sample.query,
        "whole_label": sample.whole_label,
        "evidence": [{"text": s.text, "locator": s.locator} for s in sample.evidence or []],
    })
    prompt = render_prompt(
        AgentRole.QUESTION_REFINER.value, [sent_line], overrides=prompt_overrides
    )
    last_parsed: dict = {}

    def validate(raw: str) -> tuple[str, str]:
        records = parse_agent_jsonl(raw, ["question", "answer"])
        if len(records) != 1:
            raise SchemaViolation(f"expected one record, got {len(records)}")
        question, answer = records[0]["question"], records[0]["answer"]
        if not isinstance(question, str) or not question.strip():
            raise SchemaViolation("question must be a non-empty string")
        if not isinstance(answer, str) or not answer.strip():
            raise SchemaViolation("answer must be a non-empty string")
        last_parsed["question"], last_parsed["answer"] = question, answer
        report = check_self_containment(question, answer)
        if not report.passed:
            raise SelfContainmentFailed(
                f"missing symbols {report.missing_symbols}, "
                f"bare references {report.bare_references}",
                report=report.to_dict(),
            )
        return question, answer

    try:
        (question, answer), transcript_ids = call_agent(
            provider, binding, AgentRole.QUESTION_REFINER.value, sample.sample_id, prompt,
            validate, store=store, sleep=sleep,
        )
    except ExhaustedRetries as exc:
        report = getattr(exc, "cause_report", None)
        if last_parsed and report is not None:
            # parked: best attempt's content goes to a human with the report
            return store.advance_stage(
                sample.sample_id, Stage.REFINED,
                fields={
                    "question": last_parsed["question"],
                    "answer": last_parsed["answer"],
                    "failure_report": report,
                },
                transcripts=getattr(exc, "transcript_ids", []),
                flags=[FLAG_SELF_CONTAINMENT],
            )
        raise
    return store.advance_stage(
        sample.sample_id, Stage.REFINED,
        fields={"question": question, "answer": answer},
        transcripts=transcript_ids,
    )


def filter_answer(
    sample: Sample,
    binding: ProviderBinding,
    store: SampleStore,
    provider: BaseProvider | None = None,
    sleep: Callable[[float], None] = time.sleep,
    prompt_overrides: dict | None = None,
) -> Sample:
    """Trim the answer to derivation content only.

    If the trimmed answer no longer stands alone (a needed equation or
    definition was dropped), the pre-filter answer is restored and the
    sample flagged over_filtered at stage refined.
    """
    if sample.stage is not Stage.REFINED:
        raise ValueError(f"filter_answer requires stage refined, got {sample.stage.value}")
    provider = provider or build_provider(binding)
    sent_line = _sample_line({"question": sample.question, "answer": sample.answer})
    prompt = render_prompt(
        AgentRole.ANSWER_FILTER.value, [sent_line], overrides=prompt_overrides
    )

    def validate(raw: str) -> str:
        records = parse_agent_jsonl(raw, ["answer"])
        if len(records) != 1:
            raise SchemaViolation(f"expected one record, got {len(records)}")
        answer = records[0]["answer"]
        if not isinstance(answer, str) or not answer.strip():
            raise SchemaViolation("filtered answer must be a non-empty string")
        return answer

    filtered, transcript_ids = call_agent(
        provider, binding, AgentRole.ANSWER_FILTER.value, sample.sample_id, prompt,
        validate, store=store, sleep=sleep,
    )
    question = sample.question or ""
    report = check_self_containment(question, filtered)
    filtered_canonical = canonicalize(filtered, mode="prose")
    dropped = [
        latex for latex in cited_formulas(question) if latex not in filtered_canonical
    ]
    if not report.passed or dropped:
        failure = report.to_dict()
        failure["dropped_formulas"] = dropped
        logger.info("over-filtered %s: %s", sample.sample_id, failure)
        return store.flag_sample(
            sample.sample_id, FLAG_OVER_FILTERED,
            fields={"failure_report": failure},
        )
    return store.advance_stage(
        sample.sample_id, Stage.FILTERED,
        fields={"answer": filtered}, transcripts=transcript_ids,
    )


# ---------------------------------------------------------------------------
# whole-paper run

@dataclass
class PipelineReport:
    paper_id: str
    n_expressions: int
    skipped_inline: int
    sample_ids: list[str] = field(default_factory=list)
    stage_counts: dict[str, int] = field(default_factory=dict)
    reject_reasons: dict[str, int] = field(default_factory=dict)
    duration_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "paper_id": self.paper_id,
            "n_expressions": self.n_expressions,
            "skipped_inline": self.skipped_inline,
            "sample_ids": list(self.sample_ids),
            "stage_counts": dict(self.stage_counts),
            "reject_reasons": dict(self.reject_reasons),
            "duration_s": self.duration_s,
        }


def run_pipeline(
    paper_id: str,
    binding: ProviderBinding,
    store: SampleStore,
    corpus_store: CorpusStore,
    concurrency: int = 1,
    provider: BaseProvider | None = None,
    sleep: Callable[[float], None] = time.sleep,
    prompt_overrides: dict | None = None,
) -> PipelineReport:
    """Extract, then run the agent chain per expression; enqueue survivors for review.

    Per-expression failures reject that expression's samples and continue.
    Samples finishing at stage filtered, plus flagged refined samples that
    need a human (parked or over-filtered), all land in review_pending.
    """
    started = time.monotonic()
    record = corpus_store.get(paper_id)
    if record.verdict is None or not record.verdict.accepted:
        raise PaperNotAccepted(f"paper {paper_id!r} has not passed the filter")
    provider = provider or build_provider(binding)
    extraction = extract_from_source(record.body_text, file_path="body")

    def process(expression: MathExpression) -> list[str]:
        ids: list[str] = []
        drafted = _draft_one_expression(
            record, expression, binding, store, provider, sleep, prompt_overrides
        )
        for sample in drafted:
            ids.append(sample.sample_id)
            if sample.stage is Stage.REJECTED:
                continue
            try:
                current = retrieve_answer(
                    record, sample, binding, store, provider, sleep, prompt_overrides
                )
                if current.stage is Stage.REJECTED:
                    continue
                current = collect_context(
                    record, current, binding, store, provider, sleep, prompt_overrides
                )
                current = refine_question(
                    current, binding, store, provider, sleep, prompt_overrides
                )
                if FLAG_SELF_CONTAINMENT in current.flags:
                    continue  # parked; enqueued below for human review
                filter_answer(current, binding, store, provider, sleep, prompt_overrides)
            except ExhaustedRetries as exc:
                store.advance_stage(
                    sample.sample_id, Stage.REJECTED,
                    transcripts=getattr(exc, "transcript_ids", []),
                    reason=REASON_EXHAUSTED,
                )
        return ids

    all_ids: list[str] = []
    if concurrency <= 1:
        for expression in extraction.expressions:
            all_ids.extend(process(expression))
    else:
        pool = ThreadPoolExecutor(max_workers=concurrency)
        try:
            for ids in pool.map(process, extraction.expressions):
                all_ids.extend(ids)
        except BaseException:
            # transcripts are flushed per attempt, so cancel is lossless
            pool.shutdown(wait=False, cancel_futures=True)
            raise
        pool.shutdown(wait=True)

    # review intake happens in one deterministic pass: paper order, then
    # expression order, then sample order
    from ..curation import Curation

    ready = [
        s for s in store.samples()
        if s.sample_id in set(all_ids)
        and (s.stage is Stage.FILTERED or (s.stage is Stage.REFINED and s.flags))
    ]
    Curation(store).enqueue_samples([s.sample_id for s in ready])

    report = PipelineReport(
        paper_id=paper_id,
        n_expressions=len(extraction.expressions),
        skipped_inline=extraction.skipped_inline,
        sample_ids=sorted(all_ids),
    )
    for sid in report.sample_ids:
        sample = store.get_sample(sid)
        report.stage_counts[sample.stage.value] = report.stage_counts.get(sample.stage.value, 0) + 1
        if sample.reject_reason:
            report.reject_reasons[sample.reject_reason] = (
                report.reject_reasons.get(sample.reject_reason, 0) + 1
            )
    report.duration_s = time.monotonic() - started
    store.write_snapshot()
    return report
