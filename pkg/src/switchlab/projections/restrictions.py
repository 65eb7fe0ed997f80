"""Random projections for alternating formulas: samplers and exact enumerations.

A layer restriction acts on the inputs of the gates at one depth.  Its
input ``tau`` is a block string (one block per gate, 0/1/* cells); the gate
type decides which value is absorbing.  For an AND layer the absorbing value
is 0 and the identity is 1; OR layers swap the two, and every clause below is
written in terms of ``absorb``/``ident`` so both polarities share one code path.

Exact routines take Fractions and return Fractions.  Samplers convert to
floats and draw conditioned product blocks by rejection.
"""

from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from ..boolfn import STAR, BlockRestriction, Gate, PartialFn, UsageError, gate_lift, lift, project
from .params import QcmaParams


class ParameterError(UsageError):
    """Probabilities that fall outside [0, 1] or do not add up."""


def _num(v):
    """Fractions stay exact; mpmath and other reals become floats."""
    if isinstance(v, (Fraction, int)):
        return Fraction(v)
    return float(v)


@dataclass(frozen=True)
class InitParams:
    """Bottom-layer projection: all-identity with prob x, star branch with prob q'."""

    block_len: int
    x: object
    qprime: object
    gate: Gate = Gate.AND

    def __post_init__(self) -> None:
        if self.block_len < 1:
            raise UsageError("block length must be positive")
        x, qp = _num(self.x), _num(self.qprime)
        if x < 0 or qp < 0 or x + qp > 1:
            raise ParameterError(f"need x, q' >= 0 and x + q' <= 1; got x={self.x}, q'={self.qprime}")


@dataclass(frozen=True)
class LayerParams:
    """Projection of the inputs of ``gate``-type gates.

    ``t_k`` biases the fixed bits, ``t_prev`` is the bias of the next layer up,
    ``lam`` the all-identity probability.  A block takes the main clause only
    when its star count lies within ``center +- radius``; ``center=None``
    means every star count qualifies.
    """

    gate: Gate
    t_k: object
    t_prev: object
    lam: object
    center: float | None = None
    radius: float = 0.0

    def in_window(self, size: int) -> bool:
        if self.center is None:
            return True
        return abs(size - float(self.center)) <= float(self.radius) + 1e-9

    def q_a(self, size: int):
        t_k, t_prev, lam = _num(self.t_k), _num(self.t_prev), _num(self.lam)
        if t_prev == 0:
            raise ParameterError("t_prev must be nonzero")
        return ((1 - t_k) ** size - lam) / t_prev


def _main_q(params: LayerParams, size: int, a: int):
    qa = params.q_a(size)
    lam = _num(params.lam)
    if not 0 <= qa <= 1:
        raise ParameterError(f"block {a}: q_a = {float(qa):.6g} is outside [0, 1]")
    if lam + qa > 1:
        raise ParameterError(f"block {a}: lambda + q_a = {float(lam + qa):.6g} exceeds 1")
    return qa


def _clause(block: Sequence[int], params: LayerParams, a: int) -> tuple[str, object]:
    lifted = gate_lift(block, params.gate)
    size = sum(1 for c in block if c == STAR)
    if lifted == 1 - params.gate.absorbing:
        return "copy", None
    if lifted == params.gate.absorbing or not params.in_window(size):
        return "fallback", None
    return "main", _main_q(params, size, a)


# --- sampling --------------------------------------------------------------------


def _nonident_rows(rng: np.random.Generator, rows: int, width: int, p_other: float) -> np.ndarray:
    """Boolean rows with P[True] = p_other per cell, conditioned on some True."""
    out = rng.random((rows, width)) < p_other
    bad = ~out.any(axis=1)
    while bad.any():
        out[bad] = rng.random((int(bad.sum()), width)) < p_other
        bad = ~out.any(axis=1)
    return out


def sample_r_init_cells(params: InitParams, blocks: int, rng: np.random.Generator) -> np.ndarray:
    """Same draw as ``sample_r_init`` as a (blocks, block_len) uint8 array."""
    if blocks < 1:
        raise UsageError("need at least one block")
    absorb = params.gate.absorbing
    ident = 1 - absorb
    x, qp = float(params.x), float(params.qprime)
    u = rng.random(blocks)
    cells = np.full((blocks, params.block_len), ident, dtype=np.uint8)
    star_rows = (u >= x) & (u < x + qp)
    fixed_rows = u >= x + qp
    if star_rows.any():
        marks = _nonident_rows(rng, int(star_rows.sum()), params.block_len, 0.5)
        cells[star_rows] = np.where(marks, STAR, ident)
    if fixed_rows.any():
        marks = _nonident_rows(rng, int(fixed_rows.sum()), params.block_len, 0.5)
        cells[fixed_rows] = np.where(marks, absorb, ident)
    return cells


def sample_r_init(params: InitParams, blocks: int, rng: np.random.Generator) -> BlockRestriction:
    cells = sample_r_init_cells(params, blocks, rng)
    return BlockRestriction(tuple(tuple(int(c) for c in row) for row in cells))


def sample_r_tau(tau: BlockRestriction, params: LayerParams, rng: np.random.Generator) -> BlockRestriction:
    """One draw from the layer projection distribution given the block string ``tau``."""
    absorb = params.gate.absorbing
    ident = 1 - absorb
    t_k = float(params.t_k)
    lam = float(params.lam)
    out = []
    for a, block in enumerate(tau.blocks):
        kind, qa = _clause(block, params, a)
        if kind == "copy":
            out.append(tuple(block))
            continue
        stars = [j for j, c in enumerate(block) if c == STAR]
        cells = list(block)
        if kind == "fallback":
            for j in stars:
                cells[j] = absorb if rng.random() < t_k else ident
        else:
            u = rng.random()
            if u < lam:
                for j in stars:
                    cells[j] = ident
            else:
                marks = _nonident_rows(rng, 1, len(stars), t_k)[0]
                other = STAR if u < lam + float(qa) else absorb
                for j, mark in zip(stars, marks):
                    cells[j] = other if mark else ident
        out.append(tuple(cells))
    return BlockRestriction(tuple(out))


# --- exact enumeration -------------------------------------------------------------


def _product_dist(width: int, p_other, other: int, ident: int, exclude_ident: bool) -> dict[tuple, object]:
    """Cells equal ``other`` with prob p_other independently, optionally conditioned on some other."""
    out = {}
    for bits in itertools.product((0, 1), repeat=width):
        k = sum(bits)
        if exclude_ident and k == 0:
            continue
        out[tuple(other if b else ident for b in bits)] = p_other**k * (1 - p_other) ** (width - k)
    if exclude_ident:
        norm = 1 - (1 - p_other) ** width
        out = {key: v / norm for key, v in out.items()}
    return out


def init_block_distribution(params: InitParams) -> dict[tuple, Fraction]:
    absorb = params.gate.absorbing
    ident = 1 - absorb
    w = params.block_len
    x, qp = _num(params.x), _num(params.qprime)
    half = Fraction(1, 2)
    out: dict[tuple, object] = {(ident,) * w: x}
    for cells, pr in _product_dist(w, half, STAR, ident, True).items():
        out[cells] = out.get(cells, 0) + qp * pr
    for cells, pr in _product_dist(w, half, absorb, ident, True).items():
        out[cells] = out.get(cells, 0) + (1 - x - qp) * pr
    return out


def layer_block_distribution(block: Sequence[int], params: LayerParams, a: int = 0) -> dict[tuple, object]:
    """Exact law of the restricted block, keyed by the full cell tuple."""
    kind, qa = _clause(block, params, a)
    block = tuple(block)
    if kind == "copy":
        return {block: Fraction(1)}
    absorb = params.gate.absorbing
    ident = 1 - absorb
    stars = [j for j, c in enumerate(block) if c == STAR]
    t_k, lam = _num(params.t_k), _num(params.lam)

    def place(fill: tuple) -> tuple:
        cells = list(block)
        for j, c in zip(stars, fill):
            cells[j] = c
        return tuple(cells)

    out: dict[tuple, object] = {}
    if kind == "fallback":
        for fill, pr in _product_dist(len(stars), t_k, absorb, ident, False).items():
            out[place(fill)] = pr
        return out
    out[place((ident,) * len(stars))] = lam
    for fill, pr in _product_dist(len(stars), t_k, STAR, ident, True).items():
        out[place(fill)] = out.get(place(fill), 0) + qa * pr
    for fill, pr in _product_dist(len(stars), t_k, absorb, ident, True).items():
        out[place(fill)] = out.get(place(fill), 0) + (1 - lam - qa) * pr
    return out


def _tv(p: dict, q: dict):
    keys = set(p) | set(q)
    return sum((abs(p.get(k, 0) - q.get(k, 0)) for k in keys), Fraction(0)) / 2


@dataclass(frozen=True)
class CompletionReport:
    tv: object
    residual: object
    distribution: dict

    @property
    def exact(self) -> bool:
        return self.tv == 0


def completion_check_init(w: int, x, qprime, t) -> CompletionReport:
    """Law of a bottom block after filling its stars with one bit that is 1 w.p. t.

    Returns the total-variation distance to uniform on {0,1}^w together with
    the residual x + q't - 2^-w; the distance is zero exactly when the residual is.
    """
    if not 1 <= w <= 4:
        raise UsageError("exact completion is enumerated for block length 1..4")
    x, qprime, t = Fraction(x), Fraction(qprime), Fraction(t)
    if not 0 <= t <= 1:
        raise ParameterError("t must lie in [0, 1]")
    blocks = init_block_distribution(InitParams(w, x, qprime))
    dist: dict[tuple, Fraction] = {}
    for cells, pr in blocks.items():
        if STAR in cells:
            for y, py in ((1, t), (0, 1 - t)):
                out = tuple(y if c == STAR else c for c in cells)
                dist[out] = dist.get(out, Fraction(0)) + pr * py
        else:
            dist[cells] = dist.get(cells, Fraction(0)) + pr
    uniform = {bits: Fraction(1, 2**w) for bits in itertools.product((0, 1), repeat=w)}
    return CompletionReport(_tv(dist, uniform), x + qprime * t - Fraction(1, 2**w), dist)


def _joint(tau: BlockRestriction, params: LayerParams):
    """All outcomes of the layer restriction on ``tau`` with their probabilities."""
    per_block = [list(layer_block_distribution(b, params, a).items()) for a, b in enumerate(tau.blocks)]
    for combo in itertools.product(*per_block):
        pr = Fraction(1)
        for _, p in combo:
            pr *= p
        if pr:
            yield BlockRestriction(tuple(cells for cells, _ in combo)), pr


def _star_positions(tau: BlockRestriction) -> list[tuple[int, int]]:
    return [(a, j) for a, b in enumerate(tau.blocks) for j, c in enumerate(b) if c == STAR]


def chain_completion(tau: BlockRestriction, stages: Sequence[tuple[LayerParams, int]]) -> dict[tuple, Fraction]:
    """Exact law of the completion on the stars of ``tau`` through a chain of layer restrictions.

    ``stages[j] = (params, block_len)``: stage 0 restricts ``tau`` itself, and
    stage j+1 restricts the lift of stage j's output regrouped into blocks of
    ``block_len``.  Stars left after the last stage's lift get the identity
    of that stage's gate with probability ``t_prev``.  Star (a, i) of a stage
    input takes the fixed value if the restriction fixed it, else the
    completion of a's lift one level up.
    """
    if not stages:
        raise UsageError("a chain needs at least one stage")
    params = stages[0][0]
    t_prev = Fraction(params.t_prev)
    ident = 1 - params.gate.absorbing
    stars = _star_positions(tau)
    out: dict[tuple, Fraction] = {}
    for rho, pr in _joint(tau, params):
        up = lift(rho, params.gate)
        up_star = [a for a, c in enumerate(up) if c == STAR]
        if len(stages) > 1:
            nxt_len = stages[1][1]
            upper = chain_completion(BlockRestriction.from_flat(up, nxt_len), stages[1:])
        else:
            upper = {}
            for bits in itertools.product((0, 1), repeat=len(up_star)):
                p = Fraction(1)
                for b in bits:
                    p *= t_prev if b == ident else 1 - t_prev
                upper[bits] = p
        index_of_up = {a: i for i, a in enumerate(up_star)}
        for ybits, py in upper.items():
            y = tuple(
                ybits[index_of_up[a]] if rho.blocks[a][j] == STAR else rho.blocks[a][j] for a, j in stars
            )
            out[y] = out.get(y, Fraction(0)) + pr * py
    return out


def chain_target(tau: BlockRestriction, params: LayerParams) -> dict[tuple, Fraction]:
    """The product law where each star of ``tau`` is absorbing with prob t_k."""
    absorb = params.gate.absorbing
    t_k = Fraction(params.t_k)
    k = len(_star_positions(tau))
    out = {}
    for bits in itertools.product((0, 1), repeat=k):
        p = Fraction(1)
        for b in bits:
            p *= t_k if b == absorb else 1 - t_k
        out[bits] = p
    return out


def chain_tv(tau: BlockRestriction, stages: Sequence[tuple[LayerParams, int]]):
    return _tv(chain_completion(tau, stages), chain_target(tau, stages[0][0]))


# --- the alternating chain with per-level probabilities -----------------------------------


def qcma_layer(params: QcmaParams, i: int, kind: int) -> LayerParams | InitParams:
    """Layer parameters of the kind-1 or kind-2 restriction at level i.

    Kind 1 below the top level and kind 2 use the windowed layer rule with
    (lambda_i, q_(i,a)) and (lambda, q_a) respectively; kind 1 at level d is
    the bottom-layer rule with (lambda_d, q_d).  The bottom-layer block length
    is not an integer in general, so it is left to the caller.
    """
    d = params.d
    if kind not in (1, 2) or not 1 <= i <= d:
        raise UsageError(f"need 1 <= i <= {d} and kind in (1, 2)")
    with mpmath.workprec(200):
        if kind == 1 and i == d:
            return InitParams(1, float(params.lam_levels[d]), float(params.q_levels[d]))
        if kind == 1:
            keys = (2 * i + 2, 2 * i + 1)
            gate, lam = Gate.AND, params.lam_levels.get(i)
            center = params.q * params.f_levels[i] if i in params.f_levels else None
        else:
            keys = (2 * i + 1, 2 * i)
            gate, lam = Gate.OR, params.lam
            center = params.q * params.w
        t_k, t_prev = params.t.get(keys[0]), params.t.get(keys[1])
        if t_k is None or t_prev is None or lam is None or center is None:
            raise ParameterError(f"level {i} kind {kind} is undefined for these parameters")
        if not (0 < t_k < 1 and 0 < t_prev < 1):
            raise ParameterError(f"t_{keys[0]} or t_{keys[1]} is outside (0, 1)")
        radius = mpmath.mpf(params.w) ** params.beta(keys[0])
        return LayerParams(gate, float(t_k), float(t_prev), float(lam), float(center), float(radius))


def sample_rho_qcma(
    params: QcmaParams,
    i: int,
    kind: int,
    rng: np.random.Generator,
    tau: BlockRestriction | None = None,
    blocks: int | None = None,
    block_len: int | None = None,
) -> BlockRestriction:
    layer = qcma_layer(params, i, kind)
    if isinstance(layer, InitParams):
        if blocks is None or block_len is None:
            raise UsageError("the bottom level needs an explicit block count and length")
        return sample_r_init(InitParams(block_len, layer.x, layer.qprime), blocks, rng)
    if tau is None:
        raise UsageError("levels above the bottom restrict a given block string")
    return sample_r_tau(tau, layer, rng)


# --- composing projections ----------------------------------------------------------


def projection_chain(F: PartialFn, restrictions: Sequence[BlockRestriction]) -> PartialFn:
    """proj_{r[0]} proj_{r[1]} ... proj_{r[-1]} F, applying the last restriction first."""
    cur = F
    for j in range(len(restrictions) - 1, -1, -1):
        rho = restrictions[j]
        if rho.N * rho.l != cur.n:
            raise UsageError(f"stage {j}: {rho.N} blocks of length {rho.l} do not match arity {cur.n}")
        cur = project(cur, rho)
    return cur


def chain_expand(restrictions: Sequence[BlockRestriction], z: Sequence[int]) -> tuple[int, ...]:
    """The full input that the chained projection feeds to F on the point ``z``."""
    y = tuple(int(b) for b in z)
    for rho in restrictions:
        y = rho.expand(y)
    return y
