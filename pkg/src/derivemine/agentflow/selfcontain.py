"""Self-containment checking for question/answer pairs.

A sample is self-contained when the question embeds the full LaTeX of every
formula it cites by number, and every symbol the answer uses either appears
in the question or is introduced by a definition pattern in the answer
itself. The check is a conservative, pure heuristic over math tokens; when
it cannot be satisfied the sample is parked for a human rather than forced
through.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

GREEK = frozenset(
    """alpha beta gamma delta epsilon varepsilon zeta eta theta vartheta iota kappa
    lambda mu nu xi pi varpi rho varrho sigma varsigma tau upsilon phi varphi chi
    psi omega Gamma Delta Theta Lambda Xi Pi Sigma Upsilon Phi Psi Omega""".split()
)

# Commands that shape or operate rather than name a quantity.
STRUCTURAL = frozenset(
    """frac sqrt exp log ln sin cos tan cot sec csc arcsin arccos arctan sinh cosh
    tanh max min argmax argmin sup inf lim liminf limsup sum prod int oint det dim
    ker deg gcd Pr left right big Big bigg Bigg bigl bigr Bigl Bigr biggl biggr
    cdot cdots dots ldots vdots ddots times div pm mp ast star circ bullet oplus
    otimes cup cap setminus subset supset subseteq supseteq in notin ni leq geq neq
    ll gg sim simeq approx equiv propto infty partial nabla to rightarrow leftarrow
    Rightarrow Leftarrow Leftrightarrow mapsto longrightarrow implies iff forall
    exists neg land lor langle rangle lfloor rfloor lceil rceil mid vert Vert quad
    qquad hspace vspace label tag nonumber notag begin end displaystyle textstyle
    scriptstyle limits nolimits binom choose over atop prime dagger top perp hat
    bar tilde vec dot ddot widehat widetilde overline underline underbrace
    overbrace stackrel substack align aligned equation gather split array matrix
    pmatrix bmatrix cases ensuremath emph""".split()
)

# Commands whose braced argument names an identifier (e.g. \mathbb{E}).
IDENT_WRAPPERS = frozenset(
    "mathrm mathbb mathcal mathbf mathit mathsf mathtt boldsymbol operatorname".split()
)

# Commands whose braced argument is prose, not math.
TEXT_WRAPPERS = frozenset("text textrm textit textbf textsf texttt mbox".split())

# Symbols never requiring definition (the differential d).
DEFAULT_ALLOWED = frozenset({"d"})

_DISPLAY_ENVS = (
    "equation", "equation*", "align", "align*", "gather", "gather*",
    "multline", "multline*", "eqnarray", "eqnarray*", "displaymath", "aligned",
)

_DEFINITION_KEYWORD_RE = re.compile(
    r"\b(where|let|denote[sd]?|defin(?:e[sd]?|ing)|setting)\b", re.IGNORECASE
)

_REFERENCE_RE = re.compile(
    r"\b(Formulas?|Equations?|Eqs?\.?|Lemmas?|Theorems?|Corollar(?:y|ies)|"
    r"Propositions?|Definitions?)\s*\(?\s*(\d+)\s*\)?",
    re.IGNORECASE,
)
_THEOREM_WORDS = ("lemma", "theorem", "corollar", "proposition", "definition")


@dataclass
class SelfContainmentReport:
    passed: bool
    missing_symbols: list[str] = field(default_factory=list)
    bare_references: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "missing_symbols": list(self.missing_symbols),
            "bare_references": list(self.bare_references),
        }


def math_segments(text: str) -> list[tuple[int, str, bool]]:
    """All math fragments as (start offset, content, is_display)."""
    segments: list[tuple[int, str, bool]] = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\\":
            if text.startswith("\\(", i) or text.startswith("\\[", i):
                closer = "\\)" if text[i + 1] == "(" else "\\]"
                j = text.find(closer, i + 2)
                j = n if j == -1 else j
                segments.append((i + 2, text[i + 2 : j], closer == "\\]"))
                i = j + 2
                continue
            m = re.match(r"\\begin\{([a-zA-Z]+\*?)\}", text[i:])
            if m and m.group(1) in _DISPLAY_ENVS:
                closing = f"\\end{{{m.group(1)}}}"
                j = text.find(closing, i + m.end())
                j = n if j == -1 else j
                segments.append((i + m.end(), text[i + m.end() : j], True))
                i = j + len(closing)
                continue
            i += 2
            continue
        if c == "$":
            display = text.startswith("$$", i)
            delim = "$$" if display else "$"
            j = text.find(delim, i + len(delim))
            if j == -1:
                break
            segments.append((i + len(delim), text[i + len(delim) : j], display))
            i = j + len(delim)
            continue
        i += 1
    return segments


def _segment_symbols(segment: str) -> set[str]:
    symbols: set[str] = set()
    i = 0
    n = len(segment)
    while i < n:
        c = segment[i]
        if c == "\\":
            m = re.match(r"\\([a-zA-Z]+)\*?", segment[i:])
            if not m:
                i += 2
                continue
            name = m.group(1)
            i += m.end()
            if name in GREEK:
                symbols.add("\\" + name)
            elif name in TEXT_WRAPPERS:
                arg = _braced_arg(segment, i)
                if arg is not None:
                    i = arg[1]
            elif name in IDENT_WRAPPERS:
                arg = _braced_arg(segment, i)
                if arg is not None:
                    symbols.update(_identifier_tokens(arg[0]))
                    i = arg[1]
            elif name in STRUCTURAL:
                pass
            else:
                symbols.add("\\" + name)  # unknown macro: treat as a named quantity
            continue
        if c in "_^":
            arg = _braced_arg(segment, i + 1)
            if arg is not None:
                content = arg[0]
                if re.fullmatch(r"[a-zA-Z]{2,}", content):
                    symbols.add(content)  # word-like subscript: one label token
                    i = arg[1]
                    continue
            i += 1
            continue
        if c.isalpha():
            symbols.add(c)
            i += 1
            continue
        i += 1
    return symbols


def _identifier_tokens(content: str) -> set[str]:
    # \mathbb{E} gives "E"; \mathrm{ref} gives the one token "ref"
    return set(re.findall(r"[a-zA-Z]+", content))


def _braced_arg(s: str, i: int) -> tuple[str, int] | None:
    """Balanced {...} starting at s[i]; returns (content, index after close)."""
    if i >= len(s) or s[i] != "{":
        return None
    depth = 0
    j = i
    while j < len(s):
        if s[j] == "\\" and j + 1 < len(s):
            j += 2
            continue
        if s[j] == "{":
            depth += 1
        elif s[j] == "}":
            depth -= 1
            if depth == 0:
                return s[i + 1 : j], j + 1
        j += 1
    return None


def math_symbols(text: str) -> set[str]:
    """Every math token (single letters, Greek commands, named operators) in the text."""
    symbols: set[str] = set()
    for _, segment, _ in math_segments(text):
        symbols.update(_segment_symbols(segment))
    return symbols


def defined_symbols(text: str) -> set[str]:
    """Symbols introduced by a definition pattern: 'where X is', 'let X', 'denote'.

    The first math segment within a short window after the keyword is taken
    as the thing being defined.
    """
    segments = math_segments(text)
    defined: set[str] = set()
    for m in _DEFINITION_KEYWORD_RE.finditer(text):
        for start, segment, _ in segments:
            if m.end() <= start <= m.end() + 80:
                defined.update(_segment_symbols(segment))
                break
    return defined


def bare_number_references(text: str) -> list[str]:
    """Citations of a numbered formula whose content is not spelled out in place.

    A formula reference must be followed by a colon and math content nearby;
    a theorem-like reference must be followed by a colon and its statement.
    """
    bare: list[str] = []
    for m in _REFERENCE_RE.finditer(text):
        tail = text[m.end() : m.end() + 60]
        after = re.match(r"\s*\)?\s*:", tail)
        if not after:
            bare.append(m.group(0))
            continue
        word = m.group(1).lower()
        if any(word.startswith(t) for t in _THEOREM_WORDS):
            continue  # statement text follows the colon
        window = tail[after.end() : after.end() + 40]
        if not re.search(r"\$|\\\[|\\\(|\\begin\{", window):
            bare.append(m.group(0))
    return bare


def cited_formulas(text: str) -> list[str]:
    """Canonical LaTeX of every formula the text cites by number with content.

    Used by the answer filter: a formula the question spells out must survive
    filtering in the answer.
    """
    from ..texmath import canonicalize

    segments = math_segments(text)
    out: list[str] = []
    for m in _REFERENCE_RE.finditer(text):
        word = m.group(1).lower()
        if any(word.startswith(t) for t in _THEOREM_WORDS):
            continue
        tail = text[m.end() : m.end() + 8]
        colon = re.match(r"\s*\)?\s*:", tail)
        if not colon:
            continue
        anchor = m.end() + colon.end()
        for start, segment, _ in segments:
            if anchor <= start <= anchor + 40:
                canonical = canonicalize(segment, mode="math")
                if canonical:
                    out.append(canonical)
                break
    return out


def check_self_containment(question: str, answer: str) -> SelfContainmentReport:
    """Pure, deterministic check used at and after the refinement stage."""
    bare = bare_number_references(question) + bare_number_references(answer)
    known = math_symbols(question) | defined_symbols(answer) | DEFAULT_ALLOWED
    missing = sorted(math_symbols(answer) - known)
    return SelfContainmentReport(
        passed=not bare and not missing,
        missing_symbols=missing,
        bare_references=bare,
    )


def undefined_symbols(question: str, answer: str) -> set[str]:
    """Symbols the answer uses that neither the question nor its own definitions cover."""
    return set(check_self_containment(question, answer).missing_symbols)
