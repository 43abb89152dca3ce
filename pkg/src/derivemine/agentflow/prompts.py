"""Prompt templates for the agent roles.

Templates for query_draft and answer_retriever (and the expression extractor
they replaced with a parser) are fixed assets shipped with the package; the
other three roles use templates authored here, marked non-canonical, and may
be swapped out per-role via config. Rendering never substitutes into the
template body (LaTeX is full of braces and dollar signs): the paper text and
the JSONL payload are appended around it.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

# Templates whose wording is fixed upstream; the rest are replaceable.
CANONICAL_ROLES = frozenset({"query_draft", "answer_retriever", "expression_extractor"})
AUTHORED_ROLES = frozenset({"context_collector", "question_refiner", "answer_filter"})

_PAPER_OPEN = "Paper source:\n<<<PAPER\n"
_PAPER_CLOSE = "\nPAPER>>>\n\n"


def load_template(role: str, overrides: dict[str, Path] | None = None) -> str:
    """Load a role's template; only non-canonical roles may be overridden."""
    if overrides and role in overrides:
        if role in CANONICAL_ROLES:
            raise ValueError(f"template for {role!r} is canonical and cannot be overridden")
        return Path(overrides[role]).read_text(encoding="utf-8")
    ref = resources.files("derivemine.agentflow") / "prompt_assets" / f"{role}.txt"
    return ref.read_text(encoding="utf-8")


def render_prompt(
    role: str,
    dataset_lines: list[str],
    paper_body: str | None = None,
    overrides: dict[str, Path] | None = None,
) -> str:
    """Template plus payload: optional whole-paper block, instructions, JSONL lines."""
    parts: list[str] = []
    if paper_body is not None:
        parts.append(_PAPER_OPEN + paper_body + _PAPER_CLOSE)
    parts.append(load_template(role, overrides))
    if dataset_lines:
        parts.append("\n".join(dataset_lines) + "\n")
    return "".join(parts)
