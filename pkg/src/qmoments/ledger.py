"""Append-only run ledger (newline-delimited JSON) and the value
serialization conventions shared with the CSV writers: exact rationals as
"num/den" strings, big integers as decimal strings, floats at full
round-trip precision with a dot separator.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path


def format_value(v) -> str:
    """Locale-independent string form for ledger/CSV fields."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def utc_now_rfc3339() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds").replace("+00:00", "Z")


@dataclass(frozen=True)
class RunRecord:
    timestamp: str  # RFC 3339, UTC
    argv: list[str]
    parameters: dict
    outputs: dict  # name -> exact string or decimal string
    runtime_ms: float
    version: str

    def to_json_line(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json_line(cls, line: str) -> "RunRecord":
        d = json.loads(line)
        return cls(
            timestamp=d["timestamp"],
            argv=list(d["argv"]),
            parameters=dict(d["parameters"]),
            outputs=dict(d["outputs"]),
            runtime_ms=float(d["runtime_ms"]),
            version=str(d["version"]),
        )


def append_record(path: str | Path, record: RunRecord) -> None:
    """Serialized single-writer append; records are never rewritten."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(record.to_json_line() + "\n")


def read_records(path: str | Path) -> list[RunRecord]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(RunRecord.from_json_line(line))
    return out
