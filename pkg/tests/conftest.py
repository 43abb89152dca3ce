from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from derivemine import corpus as corpus_mod
from derivemine.agentflow.providers import ProviderBinding, ProviderKind

FIXTURES = Path(__file__).parent / "fixtures"

# ---------------------------------------------------------------------------
# marker corpus: 50 documents assembled from hand-counted sentence blocks.
# The per-block counts below were counted by hand once; document counts are
# sums over the blocks each document is built from, independent of the
# implementation under test.

MARKER_BLOCKS: list[tuple[str, dict[str, int]]] = [
    ("We assume the bound holds.", {"assume": 1}),
    ("We derive the main equation.", {"derive": 1}),
    ("Proof: trivial. The proof follows.", {"proof": 2}),
    ("This lemma extends the theorem.", {"lemma": 1, "theorem": 1}),
    ("We prove a sharper derivation bound.", {"prove": 1, "derivation": 1}),
    ("Proofreading the manuscript took weeks.", {}),
    ("The assumed rate is unproven.", {}),
    ("ASSUME the worst; PROOF-READING aside, we PROVE it.",
     {"assume": 1, "proof": 1, "prove": 1}),
    ("Derivation-free methods assume nothing; derivations differ.",
     {"derivation": 1, "assume": 1}),
    ("Théorème? No: theorem. naïvely we assume. assumé stays out.",
     {"theorem": 1, "assume": 1}),
    ("lemma lemma lemma", {"lemma": 3}),
    ("The theorem_proof identifier stays.", {}),
    ("No markers in this filler sentence at all.", {}),
    ("A theorem, a lemma, and a proof walk into a paper.",
     {"theorem": 1, "lemma": 1, "proof": 1}),
]


def build_marker_corpus(n_docs: int = 50) -> list[tuple[str, dict[str, int]]]:
    """Deterministic 50-document corpus with construction-derived counts."""
    rng = random.Random(20240517)
    docs: list[tuple[str, dict[str, int]]] = []
    for _ in range(n_docs):
        blocks = rng.choices(range(len(MARKER_BLOCKS)), k=rng.randint(3, 12))
        text = " ".join(MARKER_BLOCKS[i][0] for i in blocks)
        counts: dict[str, int] = {t: 0 for t in corpus_mod.DEFAULT_MARKER_LEXICON}
        for i in blocks:
            for term, count in MARKER_BLOCKS[i][1].items():
                counts[term] += count
        docs.append((text, counts))
    return docs


@pytest.fixture(scope="session")
def marker_corpus() -> list[tuple[str, dict[str, int]]]:
    return build_marker_corpus()


# ---------------------------------------------------------------------------
# shared paths and stores

@pytest.fixture(scope="session")
def latex_fixture_dir() -> Path:
    return FIXTURES / "latex"


@pytest.fixture(scope="session")
def dpo_bundle() -> Path:
    return FIXTURES / "papers" / "dpo-2024"


@pytest.fixture(scope="session")
def dpo_metadata() -> dict:
    return json.loads((FIXTURES / "papers" / "dpo-2024.meta.json").read_text())


@pytest.fixture(scope="session")
def golden_script() -> Path:
    return FIXTURES / "mock" / "golden.responses.jsonl"


@pytest.fixture
def corpus_store(tmp_path) -> corpus_mod.CorpusStore:
    return corpus_mod.CorpusStore(tmp_path / "corpus")


@pytest.fixture
def dpo_record(corpus_store, dpo_bundle, dpo_metadata):
    record = corpus_mod.ingest_paper(dpo_bundle, dpo_metadata, corpus_store)
    corpus_mod.apply_filter(record, corpus_mod.FilterPolicy())
    corpus_store.update(record)
    return record


def mock_binding(script_path: Path | str | None = None, max_attempts: int = 3,
                 **kwargs) -> ProviderBinding:
    return ProviderBinding(
        name="mock",
        kind=ProviderKind.DETERMINISTIC_MOCK,
        script_path=str(script_path) if script_path else None,
        max_attempts=max_attempts,
        **kwargs,
    )


def write_script(path: Path, entries: list[dict]) -> Path:
    with path.open("w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry) + "\n")
    return path
