"""Expression extraction and canonicalization.

The recognition rules: display-math environments and theorem-like
environments are extracted whole (one environment = one expression); inline
math is counted and skipped; math inside comments is never extracted;
duplicates (same canonical LaTeX) are merged keeping the earliest number.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum

from ..errors import UnbalancedEnvironment
from .tokenizer import Token, TokenKind, TokenizeResult, tokenize_latex


class ExprKind(str, Enum):
    FORMULA = "formula"
    LEMMA = "lemma"
    THEOREM = "theorem"
    COROLLARY = "corollary"
    DEFINITION = "definition"
    PROPOSITION = "proposition"


# Displayed-math environments treated as one formula each, starred or not.
DISPLAY_ENVS = {
    "equation", "equation*",
    "align", "align*",
    "gather", "gather*",
    "multline", "multline*",
    "eqnarray", "eqnarray*",
    "displaymath",
}
# Unstarred members advance the shared formula counter.
_NUMBERED_DISPLAY_ENVS = {"equation", "align", "gather", "multline", "eqnarray"}

THEOREM_TITLES = {
    "lemma": ExprKind.LEMMA,
    "theorem": ExprKind.THEOREM,
    "corollary": ExprKind.COROLLARY,
    "definition": ExprKind.DEFINITION,
    "proposition": ExprKind.PROPOSITION,
}


def default_env_kinds() -> dict[str, ExprKind]:
    kinds: dict[str, ExprKind] = {}
    for name, kind in THEOREM_TITLES.items():
        kinds[name] = kind
        kinds[name + "*"] = kind
    return kinds


@dataclass(frozen=True)
class SourceSpan:
    file: str
    start: int  # byte offsets into the UTF-8 encoded source
    end: int


@dataclass
class MathExpression:
    expr_id: str
    kind: ExprKind
    latex: str
    number_label: str | None
    source_span: SourceSpan
    display: bool = True

    def to_dict(self) -> dict:
        return {
            "expr_id": self.expr_id,
            "kind": self.kind.value,
            "latex": self.latex,
            "number_label": self.number_label,
            "file": self.source_span.file,
            "start": self.source_span.start,
            "end": self.source_span.end,
            "display": self.display,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MathExpression":
        return cls(
            expr_id=data["expr_id"],
            kind=ExprKind(data["kind"]),
            latex=data["latex"],
            number_label=data.get("number_label"),
            source_span=SourceSpan(data.get("file", ""), data["start"], data["end"]),
            display=data.get("display", True),
        )


@dataclass
class ExtractionReport:
    expressions: list[MathExpression]
    skipped_inline: int = 0
    duplicates_merged: int = 0
    diagnostics: list[UnbalancedEnvironment] = field(default_factory=list)


def span_text(source: str, span: SourceSpan) -> str:
    """Re-slice the original source by byte offsets."""
    return source.encode("utf-8")[span.start : span.end].decode("utf-8")


# ---------------------------------------------------------------------------
# canonicalization

_WRAPPER_ENVS = DISPLAY_ENVS


def canonicalize(latex: str, mode: str = "math") -> str:
    """Normalize a LaTeX fragment to its comparison form. Idempotent.

    Comments, \\label, \\tag and numbering suppressors are stripped and any
    outer display wrapper is removed. Whitespace inside math is discarded
    (TeX ignores it), except the one space a control word needs before a
    following letter; whitespace in surrounding prose collapses to single
    spaces. ``mode="math"`` treats a fragment with no ``$`` delimiters as
    pure math; ``mode="prose"`` (theorem statements, questions) treats it
    as prose with embedded ``$...$`` segments.
    """
    out = _strip_comments(latex)
    while True:
        out = out.strip()
        unwrapped = _unwrap_once(out)
        if unwrapped is None:
            break
        out = unwrapped
    out = _remove_command_with_arg(out, "label")
    out = _remove_command_with_arg(out, "tag")
    out = re.sub(r"\\(?:nonumber|notag)\b", "", out)
    return _normalize_whitespace(out, treat_bare_as_math=(mode == "math"))


def _strip_comments(s: str) -> str:
    out: list[str] = []
    i = 0
    n = len(s)
    while i < n:
        c = s[i]
        if c == "\\" and i + 1 < n:
            out.append(s[i : i + 2])
            i += 2
        elif c == "%":
            nl = s.find("\n", i)
            i = n if nl == -1 else nl  # keep the newline; whitespace pass handles it
        else:
            out.append(c)
            i += 1
    return "".join(out)


def _unwrap_once(s: str) -> str | None:
    if s.startswith("$$") and s.endswith("$$") and len(s) >= 4:
        inner = s[2:-2]
        if "$$" not in inner:
            return inner
    if s.startswith("\\[") and s.endswith("\\]"):
        inner = s[2:-2]
        if "\\[" not in inner and "\\]" not in inner:
            return inner
    m = re.match(r"\\begin\{([a-zA-Z]+\*?)\}", s)
    if m:
        env = m.group(1)
        closing = f"\\end{{{env}}}"
        if env in _WRAPPER_ENVS and s.endswith(closing):
            inner = s[m.end() : len(s) - len(closing)]
            if f"\\begin{{{env}}}" not in inner:
                return inner
    return None


def _remove_command_with_arg(s: str, name: str) -> str:
    """Drop every \\name{...} (and \\name*{...}) with balanced braces."""
    out: list[str] = []
    i = 0
    n = len(s)
    needle = "\\" + name
    while i < n:
        if s.startswith(needle, i):
            j = i + len(needle)
            if j < n and s[j] == "*":
                j += 1
            while j < n and s[j] in " \t":
                j += 1
            if j < n and s[j] == "{":
                depth = 0
                k = j
                while k < n:
                    if s[k] == "\\" and k + 1 < n:
                        k += 2
                        continue
                    if s[k] == "{":
                        depth += 1
                    elif s[k] == "}":
                        depth -= 1
                        if depth == 0:
                            break
                    k += 1
                if depth == 0:
                    i = k + 1
                    continue
        out.append(s[i])
        i += 1
    return "".join(out)


def _has_unescaped_dollar(s: str) -> bool:
    i = 0
    while i < len(s):
        if s[i] == "\\":
            i += 2
            continue
        if s[i] == "$":
            return True
        i += 1
    return False


_CONTROL_WORD_TAIL = re.compile(r"\\[a-zA-Z]+\*?$")


def _normalize_whitespace(s: str, treat_bare_as_math: bool) -> str:
    in_math = treat_bare_as_math and not _has_unescaped_dollar(s)
    out: list[str] = []
    prev_space = False
    i = 0
    n = len(s)
    while i < n:
        c = s[i]
        if c == "\\" and i + 1 < n:
            out.append(s[i : i + 2])
            prev_space = False
            i += 2
            continue
        if c == "$":
            j = i
            while j < n and s[j] == "$":
                j += 1
            out.append(s[i:j])
            in_math = not in_math
            prev_space = False
            i = j
            continue
        if c.isspace():
            if in_math:
                # TeX ignores math whitespace except the space that keeps a
                # control word from swallowing a following letter
                j = i
                while j < n and s[j].isspace():
                    j += 1
                if j < n and s[j].isalpha() and _CONTROL_WORD_TAIL.search("".join(out[-24:])):
                    out.append(" ")
                i = j
            else:
                if not prev_space:
                    out.append(" ")
                    prev_space = True
                i += 1
            continue
        out.append(c)
        prev_space = False
        i += 1
    return "".join(out).strip()


# ---------------------------------------------------------------------------
# extraction

_NEWTHEOREM_RE = re.compile(
    r"\\newtheorem\*?\s*\{([A-Za-z]+)\}\s*(?:\[[^\]]*\])?\s*\{([^}]*)\}"
)


def scan_theorem_aliases(source: str) -> dict[str, ExprKind]:
    """Map \\newtheorem aliases (e.g. thm -> theorem) found in the preamble."""
    aliases: dict[str, ExprKind] = {}
    for match in _NEWTHEOREM_RE.finditer(_strip_comments(source)):
        alias, title = match.group(1), match.group(2).strip().lower()
        kind = THEOREM_TITLES.get(title)
        if kind is not None:
            aliases[alias] = kind
            aliases[alias + "*"] = kind
    return aliases


_TAG_RE = re.compile(r"\\tag\*?\s*\{([^{}]*)\}")
_LABEL_RE = re.compile(r"\\label\s*\{([^{}]*)\}")
_LEADING_BRACKET_RE = re.compile(r"^\s*\[[^\]]*\]")


class _Counters:
    def __init__(self):
        self.formula = 0
        self.by_kind: dict[ExprKind, int] = {}

    def next_formula(self) -> str:
        self.formula += 1
        return f"({self.formula})"

    def next_theorem(self, kind: ExprKind) -> str:
        n = self.by_kind.get(kind, 0) + 1
        self.by_kind[kind] = n
        return f"{kind.value.capitalize()} {n}"


def extract_from_source(
    source: str,
    file_path: str = "",
    extra_env_kinds: dict[str, ExprKind] | None = None,
) -> ExtractionReport:
    """Tokenize, honor preamble theorem aliases, then extract."""
    result = tokenize_latex(source)
    env_kinds = default_env_kinds()
    env_kinds.update(scan_theorem_aliases(source))
    if extra_env_kinds:
        env_kinds.update(extra_env_kinds)
    return extract_expressions(result, source, file_path=file_path, env_kinds=env_kinds)


def extract_expressions(
    tokens: TokenizeResult | list[Token],
    source: str,
    file_path: str = "",
    env_kinds: dict[str, ExprKind] | None = None,
) -> ExtractionReport:
    if isinstance(tokens, TokenizeResult):
        token_list = tokens.tokens
        diagnostics = list(tokens.diagnostics)
    else:
        token_list = tokens
        diagnostics = []
    env_kinds = env_kinds if env_kinds is not None else default_env_kinds()

    raw: list[MathExpression] = []
    skipped_inline = 0
    counters = _Counters()
    byte_of = _ByteOffsets(source)

    i = 0
    n = len(token_list)
    while i < n:
        tok = token_list[i]
        if tok.kind is TokenKind.COMMENT:
            i += 1
            continue
        if tok.kind is TokenKind.BEGIN_ENV:
            name = tok.name or ""
            if name in DISPLAY_ENVS:
                j = _matching_end(token_list, i)
                if j is None:
                    diagnostics.append(UnbalancedEnvironment(name, tok.start, tok.end))
                    i += 1
                    continue
                raw.append(_build_formula(
                    source, tok.end, token_list[j].start, file_path, byte_of, counters,
                    numbered=name in _NUMBERED_DISPLAY_ENVS,
                ))
                i = j + 1
                continue
            if name in env_kinds:
                j = _matching_end(token_list, i)
                if j is None:
                    diagnostics.append(UnbalancedEnvironment(name, tok.start, tok.end))
                    i += 1
                    continue
                raw.append(_build_theorem(
                    source, tok.end, token_list[j].start, file_path, byte_of, counters,
                    kind=env_kinds[name], numbered=not name.endswith("*"),
                ))
                i = j + 1
                continue
            i += 1  # structural env (document, abstract, ...): descend
            continue
        if tok.kind is TokenKind.MATH_SHIFT_DISPLAY:
            j = _next_of_kind(token_list, i + 1, TokenKind.MATH_SHIFT_DISPLAY)
            if j is None:
                i += 1
                continue
            raw.append(_build_formula(
                source, tok.end, token_list[j].start, file_path, byte_of, counters,
                numbered=False,
            ))
            i = j + 1
            continue
        if tok.kind is TokenKind.MATH_SHIFT_INLINE:
            j = _next_of_kind(token_list, i + 1, TokenKind.MATH_SHIFT_INLINE)
            if j is None:
                skipped_inline += 1
                i += 1
                continue
            skipped_inline += 1
            i = j + 1
            continue
        if tok.kind is TokenKind.COMMAND and tok.name == "[":
            j = _next_command(token_list, i + 1, "]")
            if j is None:
                i += 1
                continue
            raw.append(_build_formula(
                source, tok.end, token_list[j].start, file_path, byte_of, counters,
                numbered=False,
            ))
            i = j + 1
            continue
        if tok.kind is TokenKind.COMMAND and tok.name == "(":
            j = _next_command(token_list, i + 1, ")")
            skipped_inline += 1
            i = (j + 1) if j is not None else i + 1
            continue
        i += 1

    raw = [e for e in raw if e.latex]  # empty environments are noise, never stored
    deduped = dedup(raw)
    for idx, expr in enumerate(deduped):
        expr.expr_id = f"e{idx:03d}"
    return ExtractionReport(
        expressions=deduped,
        skipped_inline=skipped_inline,
        duplicates_merged=len(raw) - len(deduped),
        diagnostics=diagnostics,
    )


def dedup(expressions: list[MathExpression]) -> list[MathExpression]:
    """Merge expressions with identical canonical LaTeX, keeping first occurrence.

    The survivor keeps the earliest number label seen across the merged
    group; order is otherwise preserved.
    """
    seen: dict[str, MathExpression] = {}
    out: list[MathExpression] = []
    for expr in expressions:
        kept = seen.get(expr.latex)
        if kept is None:
            seen[expr.latex] = expr
            out.append(expr)
        elif kept.number_label is None and expr.number_label is not None:
            kept.number_label = expr.number_label
    return out


def report_to_jsonl(report: ExtractionReport) -> str:
    lines = []
    for expr in report.expressions:
        lines.append(json.dumps(
            {
                "kind": expr.kind.value,
                "latex": expr.latex,
                "number_label": expr.number_label,
                "file": expr.source_span.file,
                "start": expr.source_span.start,
                "end": expr.source_span.end,
            },
            sort_keys=True,
        ))
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# extraction helpers

class _ByteOffsets:
    """Char offset -> byte offset for UTF-8 spans, computed lazily."""

    def __init__(self, source: str):
        self._source = source
        self._cache: dict[int, int] = {0: 0}

    def __call__(self, char_offset: int) -> int:
        if char_offset not in self._cache:
            self._cache[char_offset] = len(self._source[:char_offset].encode("utf-8"))
        return self._cache[char_offset]


def _matching_end(tokens: list[Token], begin_index: int) -> int | None:
    name = tokens[begin_index].name
    depth = 1
    for j in range(begin_index + 1, len(tokens)):
        tok = tokens[j]
        if tok.kind is TokenKind.BEGIN_ENV and tok.name == name:
            depth += 1
        elif tok.kind is TokenKind.END_ENV and tok.name == name:
            depth -= 1
            if depth == 0:
                return j
    return None


def _next_of_kind(tokens: list[Token], start: int, kind: TokenKind) -> int | None:
    for j in range(start, len(tokens)):
        if tokens[j].kind is kind:
            return j
    return None


def _next_command(tokens: list[Token], start: int, name: str) -> int | None:
    for j in range(start, len(tokens)):
        if tokens[j].kind is TokenKind.COMMAND and tokens[j].name == name:
            return j
    return None


def _build_formula(
    source: str,
    content_start: int,
    content_end: int,
    file_path: str,
    byte_of: _ByteOffsets,
    counters: _Counters,
    numbered: bool,
) -> MathExpression:
    content = source[content_start:content_end]
    clean = _strip_comments(content)
    tag = _TAG_RE.search(clean)
    if tag:
        label = f"({tag.group(1).strip()})"
    elif numbered:
        label = counters.next_formula()
    else:
        ref = _LABEL_RE.search(clean)
        label = ref.group(1).strip() if ref else None
    return MathExpression(
        expr_id="",
        kind=ExprKind.FORMULA,
        latex=canonicalize(content, mode="math"),
        number_label=label,
        source_span=SourceSpan(file_path, byte_of(content_start), byte_of(content_end)),
    )


def _build_theorem(
    source: str,
    content_start: int,
    content_end: int,
    file_path: str,
    byte_of: _ByteOffsets,
    counters: _Counters,
    kind: ExprKind,
    numbered: bool,
) -> MathExpression:
    content = source[content_start:content_end]
    # drop an optional [title] argument by moving the span start past it,
    # keeping span fidelity intact
    bracket = _LEADING_BRACKET_RE.match(content)
    if bracket:
        content_start += bracket.end()
        content = source[content_start:content_end]
    clean = _strip_comments(content)
    if numbered:
        label = counters.next_theorem(kind)
    else:
        ref = _LABEL_RE.search(clean)
        label = ref.group(1).strip() if ref else None
    return MathExpression(
        expr_id="",
        kind=kind,
        latex=canonicalize(content, mode="prose"),
        number_label=label,
        source_span=SourceSpan(file_path, byte_of(content_start), byte_of(content_end)),
    )
