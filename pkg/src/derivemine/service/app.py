"""FastAPI service exposing the curation workflow over HTTP+JSON.

The service is a thin wrapper: all rules live in the core package. Domain
errors map to {code, message} bodies; the review UI bundle, when built, is
served from a static mount.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from ..curation import Curation, ReviewDecision
from ..errors import (
    InvalidDecision,
    NothingAccepted,
    PipelineError,
    QueueEmpty,
    RubricViolation,
    UnknownSample,
    VersionConflict,
)
from ..store import Sample, SampleStore
from .schemas import (
    AuditResponse,
    DecisionRequest,
    DecisionResponse,
    ExportRequest,
    ExportView,
    NextForReviewResponse,
    SampleView,
    TranscriptMeta,
)

logger = logging.getLogger(__name__)

_STATUS_BY_ERROR = {
    QueueEmpty: 404,
    UnknownSample: 404,
    VersionConflict: 409,
    RubricViolation: 422,
    InvalidDecision: 422,
    NothingAccepted: 409,
}


def _sample_view(sample: Sample) -> SampleView:
    data = sample.to_dict()
    expression = data.pop("expression")
    data["expression"] = {
        "expr_id": expression["expr_id"],
        "kind": expression["kind"],
        "latex": expression["latex"],
        "number_label": expression["number_label"],
        "file": expression["file"],
        "start": expression["start"],
        "end": expression["end"],
    }
    data.pop("reject_reason", None)
    return SampleView(**data)


def create_app(
    store_dir: Path | str,
    exports_dir: Path | str | None = None,
    ui_dir: Path | str | None = None,
    lease_minutes: float = 30,
    required_accepts: int = 1,
    now: Callable | None = None,
) -> FastAPI:
    store = SampleStore(store_dir)
    curation = Curation(
        store, lease_minutes=lease_minutes, required_accepts=required_accepts, now=now
    )
    exports_dir = Path(exports_dir) if exports_dir else Path(store_dir) / "exports"

    app = FastAPI(title="derivemine curation service")
    app.state.store = store
    app.state.curation = curation

    @app.exception_handler(PipelineError)
    async def pipeline_error_handler(request: Request, exc: PipelineError):
        status = _STATUS_BY_ERROR.get(type(exc), 400)
        return JSONResponse(
            status_code=status,
            content={"code": exc.code, "message": str(exc)},
        )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "samples": len(store.samples())}

    @app.get("/queue/next", response_model=NextForReviewResponse)
    def queue_next(
        reviewer: str = Query(...),
        paper_id: str | None = Query(default=None),
    ) -> NextForReviewResponse:
        sample = curation.next_for_review(reviewer, paper_id=paper_id)
        meta = [
            TranscriptMeta(
                transcript_id=t["transcript_id"],
                agent_role=t["agent_role"],
                attempt=t["attempt"],
                outcome=t["outcome"],
                provider_name=t["provider_name"],
            )
            for t in store.transcripts(sample.transcripts)
        ]
        return NextForReviewResponse(sample=_sample_view(sample), transcript_meta=meta)

    @app.get("/samples/{sample_id}", response_model=SampleView)
    def get_sample(sample_id: str) -> SampleView:
        return _sample_view(store.get_sample(sample_id))

    @app.post("/samples/{sample_id}/decision", response_model=DecisionResponse)
    def post_decision(sample_id: str, body: DecisionRequest) -> DecisionResponse:
        decision = ReviewDecision(
            sample_id=sample_id,
            reviewer_id=body.reviewer_id,
            q1_reasoning_type=body.q1_reasoning_type,
            q2_clarity=body.q2_clarity,
            q3_correctness=body.q3_correctness,
            q4_density=body.q4_density,
            action=body.action,
            base_version=body.base_version,
            edited_question=body.edited_question,
            edited_answer=body.edited_answer,
            note=body.note,
            difficulty_rank=body.difficulty_rank,
        )
        new_version = curation.submit_decision(decision)
        sample = store.get_sample(sample_id)
        return DecisionResponse(
            sample_id=sample_id, new_version=new_version, stage=sample.stage.value
        )

    @app.get("/samples/{sample_id}/audit", response_model=AuditResponse)
    def get_audit(sample_id: str) -> AuditResponse:
        return AuditResponse(sample_id=sample_id, events=curation.audit_trail(sample_id))

    @app.post("/exports", response_model=ExportView)
    def post_export(body: ExportRequest) -> ExportView:
        export, _ = curation.export_dataset(
            body.name, policy=body.policy, k=body.k, out_dir=exports_dir
        )
        return ExportView(
            name=export.name,
            created_at=export.created_at,
            selection_policy=export.selection_policy,
            count=len(export.items),
        )

    @app.get("/exports/{name}", response_model=ExportView)
    def get_export(name: str) -> ExportView:
        items_path = exports_dir / f"{name}.jsonl"
        meta_path = exports_dir / f"{name}.meta.json"
        if not items_path.exists() or not meta_path.exists():
            raise UnknownSample(f"no export named {name!r}")
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        with items_path.open(encoding="utf-8") as fh:
            items = [json.loads(line) for line in fh if line.strip()]
        return ExportView(
            name=meta["name"],
            created_at=meta["created_at"],
            selection_policy=meta["selection_policy"],
            count=meta["count"],
            items=items,
        )

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
