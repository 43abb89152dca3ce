"""Paper ingestion and the reasoning-density filter.

A paper enters the pipeline as a bundle of text/LaTeX sources plus a JSON
metadata sidecar. Ingestion computes a marker profile (how often derivation
vocabulary occurs) and the filter decides, from that profile plus publication
metadata, whether the paper is worth mining.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import re
import tarfile
import threading
import urllib.parse
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import DuplicateId, EmptyBundle, MalformedMetadata

DEFAULT_MARKER_LEXICON = frozenset(
    {"assume", "derive", "derivation", "proof", "prove", "lemma", "theorem"}
)
DEFAULT_DATE_START = dt.date(2023, 5, 1)
DEFAULT_DATE_END = dt.date(2024, 10, 31)
# strictly more than five occurrences
DEFAULT_MIN_MARKER_TOTAL = 6

TEXT_SUFFIXES = {".tex", ".txt", ".bbl", ".sty", ".cls", ".md"}


class ReviewScoreClass(str, Enum):
    ABOVE_WEAK_ACCEPT = "above_weak_accept"
    WEAK_ACCEPT_OR_BELOW = "weak_accept_or_below"
    UNKNOWN = "unknown"


class FilterRule(str, Enum):
    MARKERS = "markers"
    DATE = "date"
    SCORE = "score"


@dataclass(frozen=True)
class MarkerProfile:
    """Counts of lexicon terms in a text. Every lexicon term is a key, zeros included."""

    counts: dict[str, int]
    total: int

    def __post_init__(self):
        if self.total != sum(self.counts.values()):
            raise ValueError("total must equal the sum of counts")

    def to_dict(self) -> dict:
        return {"counts": dict(sorted(self.counts.items())), "total": self.total}

    @classmethod
    def from_dict(cls, data: dict) -> "MarkerProfile":
        return cls(counts=dict(data["counts"]), total=int(data["total"]))


@dataclass(frozen=True)
class FilterPolicy:
    marker_lexicon: frozenset[str] = DEFAULT_MARKER_LEXICON
    min_marker_total: int = DEFAULT_MIN_MARKER_TOTAL
    date_start: dt.date = DEFAULT_DATE_START
    date_end: dt.date = DEFAULT_DATE_END
    require_score: bool = True

    def __post_init__(self):
        if not self.marker_lexicon:
            raise ValueError("marker_lexicon must be non-empty")
        if self.min_marker_total < 1:
            raise ValueError("min_marker_total must be >= 1")
        if self.date_start > self.date_end:
            raise ValueError("date_start must be <= date_end")

    def fingerprint(self) -> str:
        payload = json.dumps(
            {
                "marker_lexicon": sorted(self.marker_lexicon),
                "min_marker_total": self.min_marker_total,
                "date_start": self.date_start.isoformat(),
                "date_end": self.date_end.isoformat(),
                "require_score": self.require_score,
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class FilterVerdict:
    accepted: bool
    failed_rules: tuple[FilterRule, ...]
    policy_fingerprint: str

    def __post_init__(self):
        if self.accepted != (len(self.failed_rules) == 0):
            raise ValueError("accepted must hold exactly when failed_rules is empty")

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "failed_rules": [r.value for r in self.failed_rules],
            "policy_fingerprint": self.policy_fingerprint,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FilterVerdict":
        return cls(
            accepted=bool(data["accepted"]),
            failed_rules=tuple(FilterRule(r) for r in data["failed_rules"]),
            policy_fingerprint=data["policy_fingerprint"],
        )


@dataclass
class SourceFile:
    path: str
    text: str | None = None  # None once round-tripped through the store


@dataclass
class PaperRecord:
    paper_id: str
    title: str
    body_text: str
    source_files: list[SourceFile]
    published_on: dt.date
    venue: str = ""
    review_score_class: ReviewScoreClass = ReviewScoreClass.UNKNOWN
    marker_profile: MarkerProfile | None = None
    verdict: FilterVerdict | None = None


def count_markers(text: str, lexicon: frozenset[str] | set[str]) -> MarkerProfile:
    """Count case-insensitive, word-boundary-delimited occurrences of each term.

    Substrings never count ("proofreading" does not contain the marker
    "proof"); morphological variants only count when listed as their own
    terms. Boundaries are Unicode-aware: any letter, digit or underscore
    adjacent to a candidate match blocks it.
    """
    if not lexicon:
        raise ValueError("lexicon must be non-empty")
    counts: dict[str, int] = {}
    for term in sorted(t.lower() for t in lexicon):
        pattern = re.compile(r"(?<!\w)" + re.escape(term) + r"(?!\w)", re.IGNORECASE | re.UNICODE)
        counts[term] = len(pattern.findall(text))
    return MarkerProfile(counts=counts, total=sum(counts.values()))


def apply_filter(record: PaperRecord, policy: FilterPolicy) -> FilterVerdict:
    """Decide whether a record enters the pipeline; the verdict is stored on it."""
    if record.marker_profile is None:
        raise ValueError("record has no marker_profile; ingest it first")
    failed: list[FilterRule] = []
    if record.marker_profile.total < policy.min_marker_total:
        failed.append(FilterRule.MARKERS)
    if not (policy.date_start <= record.published_on <= policy.date_end):
        failed.append(FilterRule.DATE)
    if policy.require_score and record.review_score_class is not ReviewScoreClass.ABOVE_WEAK_ACCEPT:
        failed.append(FilterRule.SCORE)
    verdict = FilterVerdict(
        accepted=not failed,
        failed_rules=tuple(failed),
        policy_fingerprint=policy.fingerprint(),
    )
    record.verdict = verdict
    return verdict


def _parse_metadata(metadata: dict) -> dict:
    problems = []
    paper_id = metadata.get("paper_id")
    if not paper_id or not isinstance(paper_id, str):
        problems.append("paper_id missing or not a string")
    raw_date = metadata.get("published_on")
    published_on = None
    if not raw_date:
        problems.append("published_on missing")
    else:
        try:
            published_on = dt.date.fromisoformat(str(raw_date))
        except ValueError:
            problems.append(f"published_on not an ISO date: {raw_date!r}")
    score_raw = metadata.get("review_score_class", ReviewScoreClass.UNKNOWN.value)
    try:
        score = ReviewScoreClass(score_raw)
    except ValueError:
        problems.append(f"review_score_class not recognized: {score_raw!r}")
        score = ReviewScoreClass.UNKNOWN
    if problems:
        raise MalformedMetadata("; ".join(problems))
    return {
        "paper_id": paper_id,
        "title": metadata.get("title", "") or "",
        "published_on": published_on,
        "venue": metadata.get("venue", "") or "",
        "review_score_class": score,
    }


def _read_bundle(bundle: Path) -> list[SourceFile]:
    """Collect UTF-8 text sources from a directory or a .tar.gz archive, sorted by path."""
    sources: list[SourceFile] = []
    if bundle.is_dir():
        for path in sorted(p for p in bundle.rglob("*") if p.is_file()):
            if path.suffix.lower() not in TEXT_SUFFIXES:
                continue
            try:
                text = path.read_text(encoding="utf-8")
            except UnicodeDecodeError:
                continue
            sources.append(SourceFile(path=path.relative_to(bundle).as_posix(), text=text))
    elif bundle.is_file() and (bundle.name.endswith(".tar.gz") or bundle.name.endswith(".tgz")):
        with tarfile.open(bundle, "r:gz") as tar:
            members = [
                m for m in tar.getmembers()
                if m.isfile() and not m.name.startswith("/") and ".." not in Path(m.name).parts
            ]
            for member in sorted(members, key=lambda m: m.name):
                if Path(member.name).suffix.lower() not in TEXT_SUFFIXES:
                    continue
                handle = tar.extractfile(member)
                if handle is None:
                    continue
                try:
                    text = handle.read().decode("utf-8")
                except UnicodeDecodeError:
                    continue
                sources.append(SourceFile(path=member.name, text=text))
    else:
        raise EmptyBundle(f"bundle {bundle} is neither a directory nor a .tar.gz archive")
    return sources


def ingest_paper(
    bundle: Path | str,
    metadata: dict,
    store: "CorpusStore",
    lexicon: frozenset[str] | set[str] = DEFAULT_MARKER_LEXICON,
) -> PaperRecord:
    """Read a source bundle, compute its marker profile and persist the record.

    The body is the concatenation of the bundle's text files in path order,
    joined by single newlines. No filter verdict is attached yet.
    """
    meta = _parse_metadata(metadata)
    sources = _read_bundle(Path(bundle))
    if not sources:
        raise EmptyBundle(f"no readable text files in {bundle}")
    body_text = "\n".join(s.text for s in sources if s.text is not None)
    record = PaperRecord(
        paper_id=meta["paper_id"],
        title=meta["title"],
        body_text=body_text,
        source_files=sources,
        published_on=meta["published_on"],
        venue=meta["venue"],
        review_score_class=meta["review_score_class"],
        marker_profile=count_markers(body_text, lexicon),
    )
    store.add(record)
    return record


class CorpusStore:
    """One JSONL file of records (bodies excluded) plus one body file per paper.

    Writes are serialized per store; reads take a snapshot under the same
    lock, so concurrent ingestion of distinct papers is safe.
    """

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.records_path = self.root / "papers.jsonl"
        self.bodies_dir = self.root / "bodies"
        self.bodies_dir.mkdir(exist_ok=True)
        self._lock = threading.Lock()

    def _body_path(self, paper_id: str) -> Path:
        return self.bodies_dir / (urllib.parse.quote(paper_id, safe="") + ".txt")

    def _record_line(self, record: PaperRecord) -> dict:
        return {
            "paper_id": record.paper_id,
            "title": record.title,
            "published_on": record.published_on.isoformat(),
            "venue": record.venue,
            "review_score_class": record.review_score_class.value,
            "source_paths": [s.path for s in record.source_files],
            "marker_profile": record.marker_profile.to_dict() if record.marker_profile else None,
            "verdict": record.verdict.to_dict() if record.verdict else None,
        }

    def _load_lines(self) -> list[dict]:
        if not self.records_path.exists():
            return []
        with self.records_path.open(encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]

    def _write_lines(self, lines: list[dict]) -> None:
        tmp = self.records_path.with_suffix(".jsonl.tmp")
        with tmp.open("w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(json.dumps(line, sort_keys=True) + "\n")
        tmp.replace(self.records_path)

    def add(self, record: PaperRecord) -> None:
        with self._lock:
            lines = self._load_lines()
            if any(l["paper_id"] == record.paper_id for l in lines):
                raise DuplicateId(f"paper_id {record.paper_id!r} already stored")
            self._body_path(record.paper_id).write_text(record.body_text, encoding="utf-8")
            lines.append(self._record_line(record))
            self._write_lines(lines)

    def update(self, record: PaperRecord) -> None:
        with self._lock:
            lines = self._load_lines()
            for i, line in enumerate(lines):
                if line["paper_id"] == record.paper_id:
                    lines[i] = self._record_line(record)
                    self._write_lines(lines)
                    return
            raise KeyError(record.paper_id)

    def _from_line(self, line: dict) -> PaperRecord:
        body = self._body_path(line["paper_id"]).read_text(encoding="utf-8")
        profile = line.get("marker_profile")
        verdict = line.get("verdict")
        return PaperRecord(
            paper_id=line["paper_id"],
            title=line["title"],
            body_text=body,
            source_files=[SourceFile(path=p) for p in line["source_paths"]],
            published_on=dt.date.fromisoformat(line["published_on"]),
            venue=line["venue"],
            review_score_class=ReviewScoreClass(line["review_score_class"]),
            marker_profile=MarkerProfile.from_dict(profile) if profile else None,
            verdict=FilterVerdict.from_dict(verdict) if verdict else None,
        )

    def get(self, paper_id: str) -> PaperRecord:
        with self._lock:
            for line in self._load_lines():
                if line["paper_id"] == paper_id:
                    return self._from_line(line)
        raise KeyError(paper_id)

    def paper_ids(self) -> list[str]:
        with self._lock:
            return [l["paper_id"] for l in self._load_lines()]

    def all_records(self) -> list[PaperRecord]:
        with self._lock:
            return [self._from_line(l) for l in self._load_lines()]
