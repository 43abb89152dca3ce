"""Evaluation protocols: best-of-k with key-step partial credit, and
three-axis rubric grading by a grader model.

Human scores are exact rationals (completed key steps over total), so the
"fully correct" test is equality with 1, never a float comparison. Rubric
grades are integers on 0..2 per axis; the grader prompt is a fixed asset
rendered with three slot insertions and nothing else.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable

from .agentflow.pipeline import call_agent
from .agentflow.providers import BaseProvider, ProviderBinding, build_provider
from .errors import ExhaustedRetries, GradeOutOfRange, NoScores, ParseFailed, RangeError

AXES = ("correctness", "completeness", "similarity")

ROLE_SOLVER = "solver"
ROLE_GRADER = "grader"


def grader_prompt_text() -> str:
    ref = resources.files("derivemine.evalassets") / "grader_rubric.txt"
    return ref.read_text(encoding="utf-8")


def render_grader_prompt(problem: str, groundtruth: str, prediction: str) -> str:
    """The fixed rubric text plus exactly three labeled insertions."""
    return (
        grader_prompt_text()
        + "\nProblem:\n" + problem
        + "\n\nGround truth proof:\n" + groundtruth
        + "\n\nProposed solution:\n" + prediction
        + "\n"
    )


@dataclass(frozen=True)
class GradeCard:
    item_id: str
    response_index: int
    correctness: int
    completeness: int
    similarity: int
    grader: str = "model"  # model | human
    grader_id: str = ""

    def __post_init__(self):
        for axis in AXES:
            value = getattr(self, axis)
            if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value <= 2:
                raise GradeOutOfRange(f"{axis} must be an integer in 0..2, got {value!r}")

    def average(self) -> Fraction:
        return Fraction(self.correctness + self.completeness + self.similarity, 3)

    def to_dict(self) -> dict:
        return {
            "kind": "grade",
            "item_id": self.item_id,
            "response_index": self.response_index,
            "correctness": self.correctness,
            "completeness": self.completeness,
            "similarity": self.similarity,
            "grader": self.grader,
            "grader_id": self.grader_id,
        }


@dataclass(frozen=True)
class HumanScore:
    item_id: str
    response_index: int
    key_steps_total: int
    key_steps_completed: int

    def __post_init__(self):
        if self.key_steps_total < 1:
            raise RangeError("key_steps_total must be >= 1")
        if not 0 <= self.key_steps_completed <= self.key_steps_total:
            raise RangeError(
                f"key_steps_completed must be in [0, {self.key_steps_total}], "
                f"got {self.key_steps_completed}"
            )

    @property
    def score(self) -> Fraction:
        return Fraction(self.key_steps_completed, self.key_steps_total)

    def to_dict(self) -> dict:
        return {
            "kind": "human",
            "item_id": self.item_id,
            "response_index": self.response_index,
            "key_steps_total": self.key_steps_total,
            "key_steps_completed": self.key_steps_completed,
        }


def record_human_score(
    item_id: str, response_index: int, completed: int, total: int
) -> HumanScore:
    """Key-step partial credit: completed/total, exactly 1 only when fully correct."""
    return HumanScore(
        item_id=item_id,
        response_index=response_index,
        key_steps_total=total,
        key_steps_completed=completed,
    )


# ---------------------------------------------------------------------------
# response generation and grading

def generate_responses(
    item: dict,
    binding: ProviderBinding,
    k: int = 3,
    provider: BaseProvider | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> list[str]:
    """k independent responses to the same question; a dead call stores as empty.

    Empty responses score zero later instead of being dropped, so failure
    never inflates a model's solve rate.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    provider = provider or build_provider(binding)
    question = item["question"]
    responses: list[str] = []
    for index in range(k):
        subject = f"{item['item_id']}#{index}"
        try:
            text, _ = call_agent(
                provider, binding, ROLE_SOLVER, subject,
                question, validate=lambda raw: raw, sleep=sleep,
            )
        except ExhaustedRetries:
            text = ""
        responses.append(text)
    return responses


def _last_json_object(text: str) -> dict | None:
    """Last well-formed JSON object in the text (graders wrap JSON in prose)."""
    found: dict | None = None
    i = 0
    n = len(text)
    while i < n:
        if text[i] == "{":
            depth = 0
            j = i
            in_string = False
            while j < n:
                c = text[j]
                if in_string:
                    if c == "\\":
                        j += 1
                    elif c == '"':
                        in_string = False
                elif c == '"':
                    in_string = True
                elif c == "{":
                    depth += 1
                elif c == "}":
                    depth -= 1
                    if depth == 0:
                        break
                j += 1
            if j < n and depth == 0:
                try:
                    candidate = json.loads(text[i : j + 1])
                    if isinstance(candidate, dict):
                        found = candidate
                except json.JSONDecodeError:
                    pass
                i = j + 1
                continue
        i += 1
    return found


def grade_rubric(
    problem: str,
    groundtruth: str,
    prediction: str,
    binding: ProviderBinding,
    provider: BaseProvider | None = None,
    item_id: str = "",
    response_index: int = 0,
    sleep: Callable[[float], None] = time.sleep,
) -> GradeCard:
    """Three-axis 0..2 grading against the ground truth.

    An empty prediction short-circuits to 0/0/0 without a provider call.
    Out-of-range or missing axis values re-ask the grader.
    """
    if not groundtruth.strip():
        raise ValueError("groundtruth must be non-empty")
    if not prediction.strip():
        return GradeCard(
            item_id=item_id, response_index=response_index,
            correctness=0, completeness=0, similarity=0,
            grader="model", grader_id=binding.model_name or binding.name,
        )
    provider = provider or build_provider(binding)
    prompt = render_grader_prompt(problem, groundtruth, prediction)
    subject = f"{item_id}#{response_index}"

    def validate(raw: str) -> dict:
        obj = _last_json_object(raw)
        if obj is None:
            raise ParseFailed("no JSON object in grader response", line=1)
        missing = [axis for axis in AXES if axis not in obj]
        if missing:
            raise ParseFailed(f"grader response missing {missing}", line=1)
        for axis in AXES:
            value = obj[axis]
            if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value <= 2:
                raise GradeOutOfRange(f"{axis} out of range: {value!r}")
        return obj

    try:
        grades, _ = call_agent(
            provider, binding, ROLE_GRADER, subject, prompt, validate, sleep=sleep
        )
    except ExhaustedRetries as exc:
        if exc.last_error and exc.last_error.startswith("GradeOutOfRange"):
            raise GradeOutOfRange(exc.last_error) from exc
        raise
    return GradeCard(
        item_id=item_id,
        response_index=response_index,
        correctness=grades["correctness"],
        completeness=grades["completeness"],
        similarity=grades["similarity"],
        grader="model",
        grader_id=binding.model_name or binding.name,
    )


# ---------------------------------------------------------------------------
# aggregation

@dataclass
class BenchReport:
    model_name: str
    n_items: int
    best_by_item: dict[str, Fraction]
    solved_count: int
    solved_rate: Fraction
    axis_means: dict[str, Fraction] | None = None
    overall_axis_mean: Fraction | None = None
    graded_responses: int = 0

    def to_jsonl(self) -> str:
        lines = [json.dumps({
            "model": self.model_name,
            "n_items": self.n_items,
            "solved_count": self.solved_count,
            "solved_rate": str(self.solved_rate),
            "solved_rate_float": float(self.solved_rate),
            "axis_means": (
                {axis: str(mean) for axis, mean in self.axis_means.items()}
                if self.axis_means else None
            ),
            "overall_axis_mean": str(self.overall_axis_mean) if self.overall_axis_mean is not None else None,
        }, sort_keys=True)]
        for item_id, best in sorted(self.best_by_item.items()):
            lines.append(json.dumps(
                {"item_id": item_id, "best": str(best), "solved": best == 1},
                sort_keys=True,
            ))
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        rows = [
            f"model           {self.model_name}",
            f"items           {self.n_items}",
            f"solved          {self.solved_count}",
            f"solved rate     {self.solved_rate} ({float(self.solved_rate):.4f})",
        ]
        if self.axis_means:
            for axis in AXES:
                mean = self.axis_means[axis]
                rows.append(f"{axis:<15} {mean} ({float(mean):.4f})")
            rows.append(
                f"{'axis average':<15} {self.overall_axis_mean} "
                f"({float(self.overall_axis_mean):.4f})"
            )
        width = max(len(r) for r in rows)
        bar = "-" * width
        return "\n".join([bar, *rows, bar]) + "\n"

    def to_csv(self, scores: Iterable["HumanScore | GradeCard"]) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow([
            "model", "item", "response", "kind",
            "correctness", "completeness", "similarity", "human_score",
        ])
        for score in scores:
            if isinstance(score, GradeCard):
                writer.writerow([
                    self.model_name, score.item_id, score.response_index, "grade",
                    score.correctness, score.completeness, score.similarity, "",
                ])
            else:
                writer.writerow([
                    self.model_name, score.item_id, score.response_index, "human",
                    "", "", "", f"{score.score.numerator}/{score.score.denominator}",
                ])
        return buffer.getvalue()


def aggregate(scores: Iterable["HumanScore | GradeCard"], model_name: str) -> BenchReport:
    """Fold all scores for one model into a report; exact arithmetic throughout.

    Per-item best is the max human score over the item's responses; an item
    is solved only when its best equals 1 exactly. Rubric axes are averaged
    over every graded response.
    """
    scores = list(scores)
    if not scores:
        raise NoScores("no scores to aggregate")
    item_ids = {s.item_id for s in scores}
    best_by_item: dict[str, Fraction] = {}
    cards: list[GradeCard] = []
    for score in scores:
        if isinstance(score, GradeCard):
            cards.append(score)
        else:
            current = best_by_item.get(score.item_id)
            if current is None or score.score > current:
                best_by_item[score.item_id] = score.score
    solved = sum(1 for best in best_by_item.values() if best == 1)
    axis_means = None
    overall = None
    if cards:
        axis_means = {
            axis: Fraction(sum(getattr(c, axis) for c in cards), len(cards))
            for axis in AXES
        }
        overall = sum(axis_means.values(), Fraction(0)) / 3
    return BenchReport(
        model_name=model_name,
        n_items=len(item_ids),
        best_by_item=best_by_item,
        solved_count=solved,
        solved_rate=Fraction(solved, len(item_ids)),
        axis_means=axis_means,
        overall_axis_mean=overall,
        graded_responses=len(cards),
    )


# ---------------------------------------------------------------------------
# files

def load_items(path: Path | str) -> list[dict]:
    """Items JSONL: {item_id, question, answer}; accepts curation export lines too."""
    items = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            record = json.loads(line)
            if "item_id" not in record:
                prov = record.get("provenance") or {}
                record["item_id"] = (
                    f"{prov.get('paper_id', 'item')}.{prov.get('expr_id', lineno)}"
                )
            items.append({
                "item_id": record["item_id"],
                "question": record["question"],
                "answer": record["answer"],
            })
    return items


def append_scores(path: Path | str, scores: Iterable["HumanScore | GradeCard"]) -> None:
    with Path(path).open("a", encoding="utf-8") as fh:
        for score in scores:
            fh.write(json.dumps(score.to_dict(), sort_keys=True) + "\n")


def load_scores(path: Path | str) -> list["HumanScore | GradeCard"]:
    out: list[HumanScore | GradeCard] = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            kind = record.pop("kind")
            if kind == "grade":
                out.append(GradeCard(**record))
            elif kind == "human":
                out.append(HumanScore(**record))
            else:
                raise ValueError(f"unknown score kind {kind!r}")
    return out
