"""Regex-free character-scan marker counter: the independent oracle.

Walks the lowercased text with str.find and checks neighbour characters by
hand; a candidate is blocked when either adjacent character is alphanumeric
or an underscore. Kept free of any code from the module it checks.
"""

from __future__ import annotations


def _is_word_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def scan_count(text: str, term: str) -> int:
    lowered = text.lower()
    needle = term.lower()
    count = 0
    start = 0
    while True:
        idx = lowered.find(needle, start)
        if idx < 0:
            return count
        before_ok = idx == 0 or not _is_word_char(lowered[idx - 1])
        after = idx + len(needle)
        after_ok = after >= len(lowered) or not _is_word_char(lowered[after])
        if before_ok and after_ok:
            count += 1
            start = idx + len(needle)
        else:
            start = idx + 1


def scan_profile(text: str, lexicon) -> dict[str, int]:
    return {term.lower(): scan_count(text, term) for term in lexicon}
