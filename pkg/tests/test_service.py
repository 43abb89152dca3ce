from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from derivemine.service import create_app
from derivemine.store import SampleStore

from .test_curation import filtered_sample


@pytest.fixture
def client(tmp_path):
    store = SampleStore(tmp_path / "store")
    for i in range(3):
        store.create_sample(filtered_sample(f"p.e{i:03d}.q0", "p", f"e{i:03d}"))
    app = create_app(tmp_path / "store", exports_dir=tmp_path / "exports")
    app.state.curation.enqueue_samples([f"p.e{i:03d}.q0" for i in range(3)])
    return TestClient(app)


def decision_body(version: int = 1, action: str = "accept", rubric: bool = True,
                  **extra) -> dict:
    return {
        "reviewer_id": "alice",
        "q1_reasoning_type": rubric,
        "q2_clarity": rubric,
        "q3_correctness": rubric,
        "q4_density": rubric,
        "action": action,
        "base_version": version,
        **extra,
    }


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"
    assert body["samples"] == 3


def test_queue_next_serves_sample_with_provenance(client):
    response = client.get("/queue/next", params={"reviewer": "alice"})
    assert response.status_code == 200
    body = response.json()
    assert body["sample"]["sample_id"] == "p.e000.q0"
    assert body["sample"]["stage"] == "review_pending"
    assert body["sample"]["expression"]["latex"] == "x=e000"
    assert "transcript_meta" in body


def test_queue_requires_reviewer_param(client):
    assert client.get("/queue/next").status_code == 422


def test_queue_empty_is_404_with_code(tmp_path):
    app = create_app(tmp_path / "empty-store")
    client = TestClient(app)
    response = client.get("/queue/next", params={"reviewer": "r"})
    assert response.status_code == 404
    assert response.json() == {
        "code": "QueueEmpty", "message": "no samples pending review",
    }


def test_get_sample_and_unknown(client):
    assert client.get("/samples/p.e000.q0").json()["paper_id"] == "p"
    missing = client.get("/samples/ghost")
    assert missing.status_code == 404
    assert missing.json()["code"] == "UnknownSample"


def test_accept_decision_via_api(client):
    response = client.post("/samples/p.e000.q0/decision", json=decision_body())
    assert response.status_code == 200
    assert response.json() == {
        "sample_id": "p.e000.q0", "new_version": 1, "stage": "accepted",
    }


def test_rubric_violation_is_422(client):
    body = decision_body()
    body["q3_correctness"] = False
    response = client.post("/samples/p.e000.q0/decision", json=body)
    assert response.status_code == 422
    assert response.json()["code"] == "RubricViolation"


def test_version_conflict_is_409(client):
    edit = decision_body(action="edit", edited_answer="v2 answer")
    assert client.post("/samples/p.e000.q0/decision", json=edit).status_code == 200
    stale = client.post("/samples/p.e000.q0/decision", json=decision_body(version=1))
    assert stale.status_code == 409
    assert stale.json()["code"] == "VersionConflict"
    fresh = client.post("/samples/p.e000.q0/decision", json=decision_body(version=2))
    assert fresh.status_code == 200


def test_edit_round_trip_versions(client):
    edit = decision_body(action="edit", edited_question="Better question?")
    response = client.post("/samples/p.e001.q0/decision", json=edit)
    assert response.json()["new_version"] == 2
    sample = client.get("/samples/p.e001.q0").json()
    assert sample["question"] == "Better question?"
    assert sample["version"] == 2
    assert sample["stage"] == "review_pending"


def test_audit_endpoint(client):
    client.post("/samples/p.e000.q0/decision", json=decision_body())
    events = client.get("/samples/p.e000.q0/audit").json()["events"]
    assert [e["event"] for e in events] == ["created", "enqueued", "decision"]


def test_exports_post_then_get(client):
    for i in range(3):
        client.post(f"/samples/p.e{i:03d}.q0/decision",
                    json=decision_body(difficulty_rank=3 - i))
    created = client.post("/exports", json={
        "name": "hard2", "policy": "top_k_by_difficulty_rank", "k": 2,
    })
    assert created.status_code == 200
    assert created.json()["count"] == 2
    fetched = client.get("/exports/hard2").json()
    assert fetched["count"] == 2
    assert len(fetched["items"]) == 2
    # rank 1 was given to the last sample
    assert fetched["items"][0]["provenance"]["expr_id"] == "e002"


def test_export_with_nothing_accepted_is_409(client):
    response = client.post("/exports", json={"name": "none", "policy": "all_accepted"})
    assert response.status_code == 409
    assert response.json()["code"] == "NothingAccepted"


def test_unknown_export_is_404(client):
    assert client.get("/exports/missing").status_code == 404


def test_two_reviewers_get_disjoint_work(client):
    a = client.get("/queue/next", params={"reviewer": "alice"}).json()
    b = client.get("/queue/next", params={"reviewer": "bob"}).json()
    assert a["sample"]["sample_id"] != b["sample"]["sample_id"]


def test_service_state_survives_restart(tmp_path):
    store = SampleStore(tmp_path / "store")
    store.create_sample(filtered_sample("p.e000.q0"))
    app = create_app(tmp_path / "store")
    app.state.curation.enqueue_samples(["p.e000.q0"])
    TestClient(app).post("/samples/p.e000.q0/decision", json=decision_body())
    # a fresh app over the same event log sees the accepted sample
    reloaded = TestClient(create_app(tmp_path / "store"))
    assert reloaded.get("/samples/p.e000.q0").json()["stage"] == "accepted"
