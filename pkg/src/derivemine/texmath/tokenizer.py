"""LaTeX tokenizer.

Produces a flat token stream with exact character spans. Comments are kept
as tokens (never dropped) so downstream consumers can re-slice the source
byte-for-byte. Environment balance problems are reported as diagnostics,
not raised: tokenization always completes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from ..errors import UnbalancedEnvironment


class TokenKind(str, Enum):
    COMMAND = "command"
    BEGIN_ENV = "begin_env"
    END_ENV = "end_env"
    MATH_SHIFT_INLINE = "math_shift_inline"
    MATH_SHIFT_DISPLAY = "math_shift_display"
    TEXT = "text"
    COMMENT = "comment"
    BRACE_OPEN = "brace_open"
    BRACE_CLOSE = "brace_close"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    start: int  # character offsets into the source string
    end: int
    name: str | None = None  # command name or environment name


@dataclass
class TokenizeResult:
    tokens: list[Token]
    diagnostics: list[UnbalancedEnvironment] = field(default_factory=list)


_SPECIALS = "\\%${}"


def tokenize_latex(source: str) -> TokenizeResult:
    """Tokenize LaTeX source; never raises on malformed input."""
    tokens: list[Token] = []
    n = len(source)
    i = 0
    while i < n:
        c = source[i]
        if c == "\\":
            i = _scan_command(source, i, tokens)
        elif c == "%":
            end = source.find("\n", i)
            end = n if end == -1 else end
            tokens.append(Token(TokenKind.COMMENT, i, end))
            i = end
        elif c == "$":
            if i + 1 < n and source[i + 1] == "$":
                tokens.append(Token(TokenKind.MATH_SHIFT_DISPLAY, i, i + 2))
                i += 2
            else:
                tokens.append(Token(TokenKind.MATH_SHIFT_INLINE, i, i + 1))
                i += 1
        elif c == "{":
            tokens.append(Token(TokenKind.BRACE_OPEN, i, i + 1))
            i += 1
        elif c == "}":
            tokens.append(Token(TokenKind.BRACE_CLOSE, i, i + 1))
            i += 1
        else:
            j = i
            while j < n and source[j] not in _SPECIALS:
                j += 1
            tokens.append(Token(TokenKind.TEXT, i, j))
            i = j
    return TokenizeResult(tokens=tokens, diagnostics=_check_balance(tokens))


def _scan_command(source: str, i: int, tokens: list[Token]) -> int:
    n = len(source)
    j = i + 1
    if j >= n:
        tokens.append(Token(TokenKind.TEXT, i, n))
        return n
    if source[j].isalpha():
        while j < n and source[j].isalpha():
            j += 1
        if j < n and source[j] == "*":
            j += 1
        name = source[i + 1 : j]
        if name in ("begin", "end"):
            env_token = _scan_env_name(source, i, j, name)
            if env_token is not None:
                tokens.append(env_token)
                return env_token.end
        tokens.append(Token(TokenKind.COMMAND, i, j, name=name))
        return j
    # control symbol: \[ \] \( \) \\ \% \$ \{ \} ...
    tokens.append(Token(TokenKind.COMMAND, i, j + 1, name=source[j]))
    return j + 1


def _scan_env_name(source: str, start: int, after_word: int, word: str) -> Token | None:
    n = len(source)
    k = after_word
    while k < n and source[k] in " \t":
        k += 1
    if k >= n or source[k] != "{":
        return None  # malformed \begin; caller emits a plain command token
    close = source.find("}", k)
    if close == -1:
        return None
    env = source[k + 1 : close].strip()
    kind = TokenKind.BEGIN_ENV if word == "begin" else TokenKind.END_ENV
    return Token(kind, start, close + 1, name=env)


def _check_balance(tokens: list[Token]) -> list[UnbalancedEnvironment]:
    """Match begin/end pairs; unmatched begins and stray ends become diagnostics."""
    diags: list[UnbalancedEnvironment] = []
    stack: list[Token] = []
    for tok in tokens:
        if tok.kind is TokenKind.BEGIN_ENV:
            stack.append(tok)
        elif tok.kind is TokenKind.END_ENV:
            if stack and stack[-1].name == tok.name:
                stack.pop()
            elif any(t.name == tok.name for t in stack):
                while stack and stack[-1].name != tok.name:
                    bad = stack.pop()
                    diags.append(UnbalancedEnvironment(bad.name or "", bad.start, bad.end))
                stack.pop()
            else:
                diags.append(
                    UnbalancedEnvironment(
                        tok.name or "", tok.start, tok.end,
                        f"stray \\end{{{tok.name}}} at {tok.start}",
                    )
                )
    for bad in stack:
        diags.append(UnbalancedEnvironment(bad.name or "", bad.start, bad.end))
    return diags
