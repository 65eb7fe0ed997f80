"""Partial Boolean functions as truth tables, with restriction, projection and lift.

Input ``x = (x_0, ..., x_{n-1})`` lives at table index ``sum(x_i << i)``.
Undefined points evaluate to ``None``.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

ZERO, ONE, STAR = 0, 1, 2
MAX_ARITY = 24

_CELL_CHARS = {"0": ZERO, "1": ONE, "*": STAR}
_CELL_NAMES = {ZERO: "0", ONE: "1", STAR: "*"}


class UsageError(ValueError):
    """Bad arguments: arity mismatch, malformed layout, size cap, bad file."""


class Gate(str, Enum):
    AND = "AND"
    OR = "OR"

    @property
    def absorbing(self) -> int:
        """Input value that forces the gate output by itself."""
        return ZERO if self is Gate.AND else ONE

    def other(self) -> "Gate":
        return Gate.OR if self is Gate.AND else Gate.AND


def _check_arity(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise UsageError(f"arity must be a nonnegative integer, got {n!r}")
    if n > MAX_ARITY:
        raise UsageError(f"arity {n} exceeds the cap of {MAX_ARITY} variables")


def _as_bits(x: Sequence[int], n: int) -> tuple[int, ...]:
    bits = tuple(int(b) for b in x)
    if len(bits) != n:
        raise UsageError(f"assignment has {len(bits)} bits, function has arity {n}")
    if any(b not in (0, 1) for b in bits):
        raise UsageError(f"assignment must be 0/1, got {x!r}")
    return bits


def index_of(x: Sequence[int]) -> int:
    idx = 0
    for i, b in enumerate(x):
        if b:
            idx |= 1 << i
    return idx


def bits_of(index: int, n: int) -> tuple[int, ...]:
    return tuple((index >> i) & 1 for i in range(n))


def input_matrix(n: int) -> np.ndarray:
    """All 2^n inputs as rows of a (2^n, n) uint8 array, in table order."""
    idx = np.arange(1 << n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(np.uint8)


class PartialFn:
    """A (partial) Boolean function on ``n`` bits stored as two 0/1 tables.

    ``origin`` records, for restricted functions, which variable of the
    parent function each free variable came from.
    """

    __slots__ = ("n", "values", "domain", "origin")

    def __init__(
        self,
        n: int,
        values: Iterable[int] | np.ndarray,
        domain: Iterable[int] | np.ndarray | None = None,
        origin: tuple[int, ...] | None = None,
    ) -> None:
        _check_arity(n)
        size = 1 << n
        vals = np.asarray(values, dtype=np.uint8).reshape(-1)
        dom = np.ones(size, dtype=np.uint8) if domain is None else np.array(domain, dtype=np.uint8).reshape(-1)
        if vals.size != size or dom.size != size:
            raise UsageError(f"tables must have length 2^{n} = {size}")
        if vals.max(initial=0) > 1 or dom.max(initial=0) > 1:
            raise UsageError("table entries must be 0 or 1")
        vals = vals & dom  # canonical form: undefined points store 0
        vals.flags.writeable = False
        dom.flags.writeable = False
        self.n = int(n)
        self.values = vals
        self.domain = dom
        self.origin = tuple(origin) if origin is not None else None

    @classmethod
    def from_function(cls, n: int, fn: Callable[[tuple[int, ...]], int | None]) -> "PartialFn":
        _check_arity(n)
        vals = np.zeros(1 << n, dtype=np.uint8)
        dom = np.zeros(1 << n, dtype=np.uint8)
        for idx in range(1 << n):
            out = fn(bits_of(idx, n))
            if out is not None:
                dom[idx] = 1
                vals[idx] = 1 if out else 0
        return cls(n, vals, dom)

    @classmethod
    def constant(cls, n: int, value: int) -> "PartialFn":
        return cls(n, np.full(1 << n, 1 if value else 0, dtype=np.uint8))

    def evaluate(self, x: Sequence[int]) -> int | None:
        idx = index_of(_as_bits(x, self.n))
        return int(self.values[idx]) if self.domain[idx] else None

    __call__ = evaluate

    @property
    def is_total(self) -> bool:
        return bool(self.domain.all())

    def defined_indices(self) -> np.ndarray:
        return np.nonzero(self.domain)[0]

    def is_constant_on_domain(self) -> bool:
        vals = self.values[self.domain.astype(bool)]
        return vals.size == 0 or bool((vals == vals[0]).all())

    def negate(self) -> "PartialFn":
        return PartialFn(self.n, (1 - self.values) & self.domain, self.domain, self.origin)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PartialFn):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.domain, other.domain)
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self) -> int:
        return hash((self.n, self.values.tobytes(), self.domain.tobytes()))

    def __repr__(self) -> str:
        dom = "" if self.is_total else f", domain={_to_hex(self.domain)}"
        return f"PartialFn(n={self.n}, values={_to_hex(self.values)}{dom})"


@dataclass(frozen=True)
class Restriction:
    cells: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(c not in (ZERO, ONE, STAR) for c in self.cells):
            raise UsageError(f"restriction cells must be 0, 1 or * (2), got {self.cells!r}")

    @classmethod
    def parse(cls, text: str) -> "Restriction":
        try:
            return cls(tuple(_CELL_CHARS[ch] for ch in text.strip()))
        except KeyError as exc:
            raise UsageError(f"bad restriction character {exc.args[0]!r}") from None

    @classmethod
    def from_free_set(cls, x: Sequence[int], free: Iterable[int]) -> "Restriction":
        """Fix every variable to ``x`` except those in ``free``."""
        cells = [int(b) for b in x]
        for i in free:
            cells[i] = STAR
        return cls(tuple(cells))

    @property
    def n(self) -> int:
        return len(self.cells)

    @property
    def free(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.cells) if c == STAR)

    def compose(self, inner: "Restriction") -> "Restriction":
        """The restriction equal to applying ``self`` and then ``inner`` to the result."""
        free = self.free
        if inner.n != len(free):
            raise UsageError(f"inner restriction has {inner.n} cells, outer leaves {len(free)} free")
        cells = list(self.cells)
        for pos, c in zip(free, inner.cells):
            cells[pos] = c
        return Restriction(tuple(cells))

    def complete(self, y: Sequence[int]) -> tuple[int, ...]:
        """Fill the free cells with ``y`` (ascending order)."""
        free = self.free
        y = _as_bits(y, len(free))
        out = list(self.cells)
        for pos, b in zip(free, y):
            out[pos] = b
        return tuple(out)

    def __str__(self) -> str:
        return "".join(_CELL_NAMES[c] for c in self.cells)


@dataclass(frozen=True)
class BlockRestriction:
    """N blocks of equal length l; bit (i, j) sits at flat index i*l + j."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if not self.blocks:
            raise UsageError("a block restriction needs at least one block")
        l = len(self.blocks[0])
        if any(len(b) != l for b in self.blocks):
            raise UsageError("all blocks must have the same length")
        if any(c not in (ZERO, ONE, STAR) for b in self.blocks for c in b):
            raise UsageError("block cells must be 0, 1 or * (2)")

    @classmethod
    def from_flat(cls, cells: Sequence[int], block_len: int) -> "BlockRestriction":
        cells = tuple(int(c) for c in cells)
        if block_len <= 0 or len(cells) % block_len:
            raise UsageError(f"{len(cells)} cells do not split into blocks of length {block_len}")
        return cls(tuple(cells[i : i + block_len] for i in range(0, len(cells), block_len)))

    @classmethod
    def parse(cls, text: str) -> "BlockRestriction":
        """Blocks separated by ``|``, e.g. ``"*1|**"``."""
        return cls(tuple(Restriction.parse(part).cells for part in text.split("|")))

    @property
    def N(self) -> int:
        return len(self.blocks)

    @property
    def l(self) -> int:
        return len(self.blocks[0])

    def flat(self) -> Restriction:
        return Restriction(tuple(c for b in self.blocks for c in b))

    def star_counts(self) -> tuple[int, ...]:
        return tuple(sum(1 for c in b if c == STAR) for b in self.blocks)

    def expand(self, x: Sequence[int]) -> tuple[int, ...]:
        """The full input y with y_(i,j) = x_i on stars and the fixed value elsewhere."""
        x = _as_bits(x, self.N)
        return tuple(x[i] if c == STAR else c for i, b in enumerate(self.blocks) for c in b)

    def __str__(self) -> str:
        return "|".join("".join(_CELL_NAMES[c] for c in b) for b in self.blocks)


def _gather(f: PartialFn, base: int, steps: Iterable[int]) -> tuple[np.ndarray, np.ndarray]:
    idx = np.array([base], dtype=np.int64)
    for step in steps:
        idx = np.concatenate([idx, idx + step])
    return f.values[idx], f.domain[idx]


def restrict(f: PartialFn, rho: Restriction) -> PartialFn:
    if rho.n != f.n:
        raise UsageError(f"restriction has {rho.n} cells, function has arity {f.n}")
    base = sum(1 << i for i, c in enumerate(rho.cells) if c == ONE)
    free = rho.free
    vals, dom = _gather(f, base, (1 << i for i in free))
    origin = free if f.origin is None else tuple(f.origin[i] for i in free)
    return PartialFn(len(free), vals, dom, origin)


def project(f: PartialFn, rho: BlockRestriction) -> PartialFn:
    if rho.N * rho.l != f.n:
        raise UsageError(f"{rho.N} blocks of length {rho.l} do not match arity {f.n}")
    l = rho.l
    base = 0
    steps = []
    for i, block in enumerate(rho.blocks):
        mask = 0
        for j, c in enumerate(block):
            if c == ONE:
                base |= 1 << (i * l + j)
            elif c == STAR:
                mask |= 1 << (i * l + j)
        steps.append(mask)
    vals, dom = _gather(f, base, steps)
    return PartialFn(rho.N, vals, dom)


def gate_lift(block: Sequence[int], gate: Gate) -> int:
    """Value of one gate whose inputs carry ``block`` (0 dominates for AND, 1 for OR)."""
    absorb = gate.absorbing
    if any(c == absorb for c in block):
        return absorb
    if all(c == 1 - absorb for c in block):
        return 1 - absorb
    return STAR


def lift(tau: BlockRestriction, gate: Gate) -> tuple[int, ...]:
    return tuple(gate_lift(b, gate) for b in tau.blocks)


def flip_block(x: Sequence[int], block: Iterable[int]) -> tuple[int, ...]:
    out = [int(b) for b in x]
    for i in block:
        if not 0 <= i < len(out):
            raise UsageError(f"index {i} outside 0..{len(out) - 1}")
        out[i] ^= 1
    return tuple(out)


# --- builtin functions -----------------------------------------------------


def or_fn(n: int) -> PartialFn:
    vals = np.ones(1 << n, dtype=np.uint8)
    vals[0] = 0
    return PartialFn(n, vals)


def and_fn(n: int) -> PartialFn:
    vals = np.zeros(1 << n, dtype=np.uint8)
    vals[-1] = 1
    return PartialFn(n, vals)


def _popcounts(n: int) -> np.ndarray:
    return input_matrix(n).sum(axis=1)


def xor_fn(n: int) -> PartialFn:
    return PartialFn(n, (_popcounts(n) & 1).astype(np.uint8))


def maj_fn(n: int) -> PartialFn:
    if n % 2 == 0:
        raise UsageError("MAJ is defined here for odd arity only")
    return PartialFn(n, (2 * _popcounts(n) > n).astype(np.uint8))


_BUILTINS = {"OR": or_fn, "AND": and_fn, "XOR": xor_fn, "MAJ": maj_fn}


def builtin(name: str, n: int | None = None, fanins: Sequence[int] | None = None) -> PartialFn:
    """Named function: OR, AND, XOR, MAJ (arity ``n``) or SIP (``fanins``)."""
    key = name.upper()
    if key == "SIP":
        if not fanins:
            raise UsageError("SIP needs a fan-in list")
        from .projections.sip import build_sip

        return build_sip(fanins).to_partial_fn()
    if key not in _BUILTINS:
        raise UsageError(f"unknown builtin {name!r}; choose from {sorted(_BUILTINS) + ['SIP']}")
    if n is None:
        raise UsageError(f"{key} needs an arity")
    _check_arity(n)
    return _BUILTINS[key](n)


# --- text format -------------------------------------------------------------


def _to_hex(bits: np.ndarray) -> str:
    packed = np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little")
    value = int.from_bytes(packed.tobytes(), "little")
    width = max(1, (bits.size + 3) // 4)
    return format(value, f"0{width}x")


def _from_hex(text: str, size: int) -> np.ndarray:
    try:
        value = int(text, 16)
    except ValueError:
        raise UsageError(f"not a hex string: {text!r}") from None
    if value >> size:
        raise UsageError(f"hex value has bits beyond position {size - 1}")
    raw = np.frombuffer(value.to_bytes((size + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:size].copy()


def format_table(f: PartialFn) -> str:
    lines = [f"n={f.n}", f"values={_to_hex(f.values)}"]
    if not f.is_total:
        lines.append(f"domain={_to_hex(f.domain)}")
    return "\n".join(lines) + "\n"


def parse_table(text: str) -> PartialFn:
    fields: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise UsageError(f"expected key=value, got {line!r}")
        fields[key.strip()] = val.strip()
    if "n" not in fields or "values" not in fields:
        raise UsageError("truth-table file needs n= and values= lines")
    extra = set(fields) - {"n", "values", "domain"}
    if extra:
        raise UsageError(f"unknown truth-table fields {sorted(extra)}")
    try:
        n = int(fields["n"])
    except ValueError:
        raise UsageError(f"bad arity {fields['n']!r}") from None
    _check_arity(n)
    size = 1 << n
    vals = _from_hex(fields["values"], size)
    dom = _from_hex(fields["domain"], size) if "domain" in fields else None
    return PartialFn(n, vals, dom)


def read_table(path: str | Path) -> PartialFn:
    return parse_table(Path(path).read_text())


def write_table(f: PartialFn, path: str | Path) -> None:
    Path(path).write_text(format_table(f))
