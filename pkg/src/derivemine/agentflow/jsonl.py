"""Strict JSONL parsing for agent responses.

One repair pass is allowed (stripping a surrounding code fence and any
leading/trailing prose lines); after that every line must be a JSON object
carrying the expected keys, or the whole response is rejected so the retry
loop re-asks the provider. No bracket surgery: aggressive repair would hide
provider drift.
"""

from __future__ import annotations

import json
from typing import Sequence

from ..errors import ParseFailed


def _repair(raw: str) -> str:
    lines = raw.splitlines()
    # strip one surrounding code fence if present
    fence_indexes = [i for i, line in enumerate(lines) if line.lstrip().startswith("```")]
    if len(fence_indexes) >= 2:
        lines = lines[fence_indexes[0] + 1 : fence_indexes[-1]]
    elif len(fence_indexes) == 1:
        lines = lines[: fence_indexes[0]] + lines[fence_indexes[0] + 1 :]
    # strip leading/trailing prose around the JSONL block
    first = next((i for i, l in enumerate(lines) if l.lstrip().startswith("{")), None)
    if first is None:
        return "\n".join(lines)
    last = max(i for i, l in enumerate(lines) if l.lstrip().startswith("{"))
    return "\n".join(lines[first : last + 1])


def parse_agent_jsonl(raw: str, expected_keys: Sequence[str]) -> list[dict]:
    """Parse a JSONL agent response; any bad line fails the whole response.

    Raises ParseFailed with the first offending line number (counted within
    the repaired block).
    """
    repaired = _repair(raw)
    records: list[dict] = []
    for lineno, line in enumerate(repaired.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseFailed(f"line {lineno}: not valid JSON ({exc.msg})", line=lineno)
        if not isinstance(record, dict):
            raise ParseFailed(f"line {lineno}: expected a JSON object", line=lineno)
        missing = [key for key in expected_keys if key not in record]
        if missing:
            raise ParseFailed(
                f"line {lineno}: missing required keys {missing}", line=lineno
            )
        records.append(record)
    return records
