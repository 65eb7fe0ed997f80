"""Read-once alternating formulas with uniform fan-in per layer.

Layer ``k`` (root is layer 0) has ``prod(fanins[:k])`` gates; the input
addressed by ``(i_0, ..., i_{d-1})`` sits at the mixed-radix index with
``i_{d-1}`` varying fastest, so the inputs of one bottom gate are contiguous
and a block restriction over the inputs lines up with the bottom gates.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..boolfn import STAR, Gate, PartialFn, UsageError, input_matrix

MAX_SIP_INPUTS = 1 << 20
MAX_TABLE_INPUTS = 20


@dataclass(frozen=True)
class SipFormula:
    fanins: tuple[int, ...]
    bottom: Gate = Gate.AND

    def __post_init__(self) -> None:
        if not self.fanins:
            raise UsageError("a formula needs at least one layer")
        if any(int(f) != f or f < 1 for f in self.fanins):
            raise UsageError(f"fan-ins must be positive integers, got {self.fanins!r}")
        if self.n > MAX_SIP_INPUTS:
            raise UsageError(f"formula has {self.n} inputs; the cap is {MAX_SIP_INPUTS}")

    @property
    def d(self) -> int:
        return len(self.fanins)

    @property
    def n(self) -> int:
        out = 1
        for f in self.fanins:
            out *= int(f)
        return out

    def gate(self, depth: int) -> Gate:
        """Gate type at ``depth``; the bottom layer is ``d - 1``."""
        if not 0 <= depth < self.d:
            raise UsageError(f"depth {depth} outside 0..{self.d - 1}")
        return self.bottom if (self.d - 1 - depth) % 2 == 0 else self.bottom.other()

    def layer_size(self, k: int) -> int:
        """|A_k|: gates at depth k, or inputs when k = d."""
        out = 1
        for f in self.fanins[:k]:
            out *= f
        return out

    @property
    def top(self) -> Gate:
        return self.gate(0)

    def layers(self, x: Sequence[int]) -> list[np.ndarray]:
        """Values of every layer, inputs first and root last; cells may be 0, 1 or *."""
        arr = np.asarray(x, dtype=np.uint8)
        if arr.shape != (self.n,):
            raise UsageError(f"input has {arr.size} cells, formula has {self.n} inputs")
        if np.any(arr > STAR):
            raise UsageError("input cells must be 0, 1 or * (2)")
        out = [arr]
        cur = arr
        for depth in range(self.d - 1, -1, -1):
            cur = reduce_layer(cur.reshape(-1, self.fanins[depth]), self.gate(depth))
            out.append(cur)
        return out

    def evaluate(self, x: Sequence[int]) -> int:
        """Root value; 2 means the partial input leaves it undetermined."""
        return int(self.layers(x)[-1][0])

    def to_partial_fn(self) -> PartialFn:
        if self.n > MAX_TABLE_INPUTS:
            raise UsageError(f"truth tables are limited to {MAX_TABLE_INPUTS} inputs")
        cur = input_matrix(self.n)
        for depth in range(self.d - 1, -1, -1):
            cols = cur.shape[1] // self.fanins[depth]
            grouped = cur.reshape(cur.shape[0], cols, self.fanins[depth])
            cur = grouped.all(axis=2) if self.gate(depth) is Gate.AND else grouped.any(axis=2)
        return PartialFn(self.n, cur[:, 0].astype(np.uint8))


def reduce_layer(blocks: np.ndarray, gate: Gate) -> np.ndarray:
    """Row-wise gate over 0/1/* cells: the absorbing value wins, else all-identity, else *."""
    absorb = gate.absorbing
    ident = 1 - absorb
    has_absorb = (blocks == absorb).any(axis=1)
    all_ident = (blocks == ident).all(axis=1)
    out = np.full(blocks.shape[0], STAR, dtype=np.uint8)
    out[all_ident] = ident
    out[has_absorb] = absorb
    return out


def build_sip(fanins: Sequence[int], bottom: Gate | str = Gate.AND) -> SipFormula:
    if isinstance(bottom, str):
        bottom = Gate(bottom.upper())
    return SipFormula(tuple(int(f) for f in fanins), bottom)


def eval_sip(F: SipFormula, x: Sequence[int]) -> int:
    return F.evaluate(x)


# --- text format: d=<depth>, fanins=<comma list>, bottom=AND|OR ----------------------


def format_spec(F: SipFormula) -> str:
    return f"d={F.d}\nfanins={','.join(str(f) for f in F.fanins)}\nbottom={F.bottom.value}\n"


def parse_spec(text: str) -> SipFormula:
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lower()
        if not sep or key not in ("d", "fanins", "bottom"):
            raise UsageError(f"line {lineno}: expected d=, fanins= or bottom=, got {raw!r}")
        if key in fields:
            raise UsageError(f"line {lineno}: {key} given twice")
        fields[key] = value.strip()
    if "fanins" not in fields:
        raise UsageError("formula spec needs a fanins= line")
    try:
        fanins = tuple(int(v) for v in fields["fanins"].split(","))
    except ValueError:
        raise UsageError(f"bad fan-in list {fields['fanins']!r}") from None
    if "d" in fields:
        try:
            d = int(fields["d"])
        except ValueError:
            raise UsageError(f"bad depth {fields['d']!r}") from None
        if d != len(fanins):
            raise UsageError(f"d={d} but {len(fanins)} fan-ins were listed")
    bottom = fields.get("bottom", "AND").upper()
    if bottom not in ("AND", "OR"):
        raise UsageError(f"bottom must be AND or OR, got {bottom!r}")
    return SipFormula(fanins, Gate(bottom))


def read_spec(path: str | Path) -> SipFormula:
    return parse_spec(Path(path).read_text())


def write_spec(F: SipFormula, path: str | Path) -> None:
    Path(path).write_text(format_spec(F))

