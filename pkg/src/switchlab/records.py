"""Experiment records and their JSON-lines / CSV encodings.

Fractions are written as ``"p/q"`` strings and any string of that shape is
read back as a Fraction, so a record survives a round trip unchanged.
Keys are sorted and separators fixed, which makes the byte output a pure
function of the record contents.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from collections.abc import Iterable
from dataclasses import dataclass, field
from fractions import Fraction

FIELDS = ("experiment", "params", "seed", "trials", "estimate", "stderr", "paper_bound", "pass", "wall_time")
CSV_COLUMNS = FIELDS

_FRACTION_RE = re.compile(r"^-?\d+/\d+$")


def _encode(value):
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return repr(value)
        return value
    if isinstance(value, dict):
        return {str(k): _encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    if hasattr(value, "__float__"):
        return float(value)
    if hasattr(value, "__int__"):
        return int(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _decode(value):
    if isinstance(value, str) and _FRACTION_RE.match(value):
        return Fraction(value)
    if isinstance(value, dict):
        return {k: _decode(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_decode(v) for v in value]
    return value


@dataclass
class ExperimentRecord:
    experiment: str
    params: dict = field(default_factory=dict)
    seed: int | None = None
    trials: int | None = None
    estimate: object = None
    stderr: object = None
    paper_bound: object = None
    passed: bool = True
    wall_time: float | None = None

    def as_dict(self, timing: bool = False) -> dict:
        out = {
            "experiment": self.experiment,
            "params": _encode(self.params),
            "seed": self.seed,
            "trials": self.trials,
            "estimate": _encode(self.estimate),
            "stderr": _encode(self.stderr),
            "paper_bound": _encode(self.paper_bound),
            "pass": bool(self.passed),
        }
        if timing:
            out["wall_time"] = self.wall_time
        return out

    def to_json(self, timing: bool = False) -> str:
        return json.dumps(self.as_dict(timing), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentRecord":
        unknown = set(data) - set(FIELDS)
        if unknown:
            raise ValueError(f"unknown record fields {sorted(unknown)}")
        return cls(
            experiment=data["experiment"],
            params=_decode(data.get("params") or {}),
            seed=data.get("seed"),
            trials=data.get("trials"),
            estimate=_decode(data.get("estimate")),
            stderr=_decode(data.get("stderr")),
            paper_bound=_decode(data.get("paper_bound")),
            passed=bool(data.get("pass", True)),
            wall_time=data.get("wall_time"),
        )

    @classmethod
    def from_json(cls, line: str) -> "ExperimentRecord":
        return cls.from_dict(json.loads(line))

    def sort_key(self) -> tuple[str, str]:
        return self.experiment, json.dumps(_encode(self.params), sort_keys=True)


def sort_records(records: Iterable[ExperimentRecord]) -> list[ExperimentRecord]:
    return sorted(records, key=ExperimentRecord.sort_key)


def to_jsonl(records: Iterable[ExperimentRecord], timing: bool = False) -> str:
    return "".join(r.to_json(timing) + "\n" for r in records)


def from_jsonl(text: str) -> list[ExperimentRecord]:
    return [ExperimentRecord.from_json(line) for line in text.splitlines() if line.strip()]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True, separators=(",", ":"))
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def to_csv(records: Iterable[ExperimentRecord], timing: bool = False) -> str:
    cols = CSV_COLUMNS if timing else CSV_COLUMNS[:-1]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in records:
        d = r.as_dict(timing)
        writer.writerow([_cell(d.get(c)) for c in cols])
    return buf.getvalue()


def _uncell(text: str):
    if text == "":
        return None
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def from_csv(text: str) -> list[ExperimentRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return []
    header = rows[0]
    out = []
    for row in rows[1:]:
        data = {h: _uncell(v) for h, v in zip(header, row)}
        data["experiment"] = row[header.index("experiment")]
        out.append(ExperimentRecord.from_dict(data))
    return out
