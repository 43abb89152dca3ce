"""Deterministic extraction of display math and theorem-like statements from LaTeX source."""

from .tokenizer import Token, TokenKind, TokenizeResult, tokenize_latex
from .extract import (
    ExprKind,
    ExtractionReport,
    MathExpression,
    SourceSpan,
    canonicalize,
    dedup,
    extract_expressions,
    extract_from_source,
    report_to_jsonl,
    scan_theorem_aliases,
    span_text,
)

__all__ = [
    "Token",
    "TokenKind",
    "TokenizeResult",
    "tokenize_latex",
    "ExprKind",
    "ExtractionReport",
    "MathExpression",
    "SourceSpan",
    "canonicalize",
    "dedup",
    "extract_expressions",
    "extract_from_source",
    "report_to_jsonl",
    "scan_theorem_aliases",
    "span_text",
]
