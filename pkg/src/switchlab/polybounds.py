"""Degree lower bounds on block-style measures, checked constructively.

Three pieces live here:

* Chebyshev polynomials and the OR gadget ``h(y) = alpha + (1 - alpha)/N * sum(y)``
  whose composition ``T_m(h(y))`` maps ``1^N`` to 1 and every single flip of
  ``1^N`` to -1 while staying bounded on the cube.
* ``blockify``: collapse a +-1 polynomial along a block partition around a
  base point, which turns block sensitivity into plain sensitivity without
  raising the degree.
* ``fbsdeg_witness``: per-input fractional certificate weights, checked
  against the covering inequality and the ``(pi^2/4) d^2`` budget.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .boolfn import PartialFn, UsageError, bits_of
from .measures import (
    Basis,
    MultilinearPoly,
    block_sensitivity,
    degree,
    frac_cert,
    minimal_sensitive_blocks,
    poly_of,
)
from . import kernels

# Rational lower bound on pi^2/4 = 2.4674...; a sum below bound*d^2 is below the true budget.
PI_SQ_OVER_4_LOWER = Fraction(2467, 1000)

GADGET_TOL = 1e-9
MAX_GADGET_ARITY = 20
MAX_WITNESS_ARITY = 8


def chebyshev(m: int) -> list[int]:
    """Integer coefficients of T_m, lowest power first."""
    if m < 0:
        raise UsageError("Chebyshev degree must be nonnegative")
    prev, cur = [1], [0, 1]
    if m == 0:
        return prev
    for _ in range(m - 1):
        nxt = [0] + [2 * c for c in cur]
        for i, c in enumerate(prev):
            nxt[i] -= c
        prev, cur = cur, nxt
    return cur


def chebyshev_eval(m: int, t):
    """T_m(t) by the three-term recurrence; works on scalars and numpy arrays."""
    if m < 0:
        raise UsageError("Chebyshev degree must be nonnegative")
    prev = t * 0 + 1
    if m == 0:
        return prev
    cur = t
    for _ in range(m - 1):
        prev, cur = cur, 2 * t * cur - prev
    return cur


def gadget_degree(N: int) -> int:
    """The integer m with pi*sqrt(N)/2 <= m < pi*sqrt(N)/2 + 1."""
    if N < 1:
        raise UsageError("gadget arity must be at least 1")
    with mpmath.workprec(200):
        return int(mpmath.floor(mpmath.pi * mpmath.sqrt(N) / 2)) + 1


@dataclass(frozen=True)
class OrGadget:
    N: int
    m: int
    alpha: mpmath.mpf

    @property
    def alpha_float(self) -> float:
        return float(self.alpha)

    @property
    def flip_value(self) -> float:
        """h at 1^N with one coordinate flipped, equal to cos(pi/m)."""
        return float(mpmath.cos(mpmath.pi / self.m))


def or_gadget(N: int) -> OrGadget:
    m = gadget_degree(N)
    with mpmath.workprec(200):
        alpha = 1 - mpmath.mpf(N) / 2 * (1 - mpmath.cos(mpmath.pi / m))
        if not 0 < alpha < 1:
            raise AssertionError(f"gadget constant alpha={alpha} left (0, 1)")
    return OrGadget(N, m, alpha)


def _as_pm(y: Sequence[int], N: int) -> np.ndarray:
    arr = np.asarray(y, dtype=np.float64)
    if arr.shape != (N,):
        raise UsageError(f"gadget input must have {N} coordinates")
    if not np.all(np.abs(arr) == 1):
        raise UsageError("gadget inputs are +-1 vectors")
    return arr


def eval_h(g: OrGadget, y: Sequence[int]) -> float:
    arr = _as_pm(y, g.N)
    a = g.alpha_float
    return a + (1 - a) / g.N * float(arr.sum())


def composed_gadget(g: OrGadget, y: Sequence[int]) -> float:
    return float(chebyshev_eval(g.m, eval_h(g, y)))


def gadget_table(g: OrGadget) -> np.ndarray:
    """T_m(h(y)) at all 2^N points, y in table order (bit 1 means -1)."""
    if g.N > MAX_GADGET_ARITY:
        raise UsageError(f"exhaustive gadget tables are limited to N <= {MAX_GADGET_ARITY}")
    idx = np.arange(1 << g.N, dtype=np.int64)
    minus = np.zeros(idx.shape, dtype=np.int64)
    for i in range(g.N):
        minus += (idx >> i) & 1
    sums = (g.N - 2 * minus).astype(np.float64)
    a = g.alpha_float
    h = a + (1 - a) / g.N * sums
    return chebyshev_eval(g.m, h)


@dataclass(frozen=True)
class GadgetCheck:
    N: int
    m: int
    alpha: float
    at_ones: float
    worst_flip: float
    max_abs: float
    ok: bool


def check_gadget(N: int, tol: float = GADGET_TOL) -> GadgetCheck:
    """Endpoint identities and exhaustive boundedness of T_m o h."""
    g = or_gadget(N)
    ones = np.ones(N, dtype=np.int64)
    at_ones = composed_gadget(g, ones)
    worst = 0.0
    for j in range(N):
        y = ones.copy()
        y[j] = -1
        worst = max(worst, abs(composed_gadget(g, y) + 1))
    max_abs = float(np.abs(gadget_table(g)).max())
    ok = abs(at_ones - 1) <= tol and worst <= tol and max_abs <= 1 + tol
    return GadgetCheck(N, g.m, g.alpha_float, at_ones, worst, max_abs, ok)


# --- blockification ------------------------------------------------------------


def _check_partition(partition: Sequence[Iterable[int]], n: int) -> list[list[int]]:
    blocks = [sorted(set(int(i) for i in b)) for b in partition]
    seen: set[int] = set()
    for b in blocks:
        if not b:
            raise UsageError("partition blocks must be nonempty")
        for i in b:
            if not 0 <= i < n:
                raise UsageError(f"partition index {i} out of range for arity {n}")
            if i in seen:
                raise UsageError(f"index {i} appears in two blocks")
            seen.add(i)
    if len(seen) != n:
        missing = sorted(set(range(n)) - seen)
        raise UsageError(f"partition misses indices {missing}")
    return blocks


def blockify(p: MultilinearPoly, x: Sequence[int], partition: Sequence[Iterable[int]]) -> MultilinearPoly:
    """Polynomial of y in {+-1}^k equal to p(x with the blocks at y_j = -1 flipped).

    Substitutes x_i * y_{j(i)} for each variable; y_j^2 = 1 collapses even powers.
    """
    pm = p.to_basis(Basis.PLUS_MINUS)
    n = pm.n
    x = tuple(int(v) for v in x)
    if len(x) != n or any(v not in (1, -1) for v in x):
        raise UsageError(f"base point must be a +-1 vector of length {n}")
    blocks = _check_partition(partition, n)
    owner = [0] * n
    for j, b in enumerate(blocks):
        for i in b:
            owner[i] = j
    out: dict[int, Fraction] = {}
    for mask, c in pm.coeffs.items():
        coef = Fraction(c)
        ymask = 0
        for i in range(n):
            if mask >> i & 1:
                coef *= x[i]
                ymask ^= 1 << owner[i]
        out[ymask] = out.get(ymask, Fraction(0)) + coef
    return MultilinearPoly(len(blocks), Basis.PLUS_MINUS, out)


def pm_table_poly(f: PartialFn) -> MultilinearPoly:
    """+-1 valued polynomial of a total Boolean f (output 0 -> +1, 1 -> -1)."""
    p = poly_of(f)
    signed = {k: -2 * v for k, v in p.coeffs.items()}
    signed[0] = signed.get(0, Fraction(0)) + 1
    return MultilinearPoly(f.n, Basis.ZERO_ONE, signed).to_basis(Basis.PLUS_MINUS)


def real_sensitivity_at(p: MultilinearPoly, y: Sequence[int]) -> Fraction:
    """Sum over single coordinates of |p(y) - p(y with i flipped)| / 2."""
    base = Fraction(p.evaluate(tuple(y)))
    total = Fraction(0)
    for i in range(p.n):
        flipped = list(y)
        flipped[i] = -flipped[i]
        total += abs(base - Fraction(p.evaluate(tuple(flipped))))
    return total / 2


def best_partition(f: PartialFn, x01: Sequence[int]) -> list[list[int]]:
    """A maximum packing of sensitive blocks at x, padded with singletons to cover [n]."""
    masks = minimal_sensitive_blocks(f, x01)
    target = kernels.max_packing(masks, f.n)
    chosen = _find_packing(sorted(masks), target)
    used = 0
    blocks = []
    for m in chosen:
        blocks.append([i for i in range(f.n) if m >> i & 1])
        used |= m
    blocks.extend([i] for i in range(f.n) if not used >> i & 1)
    return blocks


def _find_packing(masks: list[int], target: int) -> list[int]:
    def rec(start: int, used: int, need: int) -> list[int] | None:
        if need == 0:
            return []
        for j in range(start, len(masks)):
            if masks[j] & used == 0:
                rest = rec(j + 1, used | masks[j], need - 1)
                if rest is not None:
                    return [masks[j]] + rest
        return None

    found = rec(0, 0, target)
    if found is None:
        raise AssertionError("packing size not realizable")
    return found


@dataclass(frozen=True)
class BlockifyChain:
    bs: int
    sens: Fraction
    deg_blocked: int
    deg: int

    @property
    def holds(self) -> bool:
        return self.bs <= self.sens <= self.deg_blocked**2 <= self.deg**2


def blockify_chain(f: PartialFn, x01: Sequence[int]) -> BlockifyChain:
    """bs(f, x) <= s(f', 1^k) <= deg(f')^2 <= deg(f)^2 along the best partition."""
    partition = best_partition(f, x01)
    p = pm_table_poly(f)
    xpm = tuple(1 - 2 * int(b) for b in x01)
    fp = blockify(p, xpm, partition)
    return BlockifyChain(
        bs=block_sensitivity(f, x01),
        sens=real_sensitivity_at(fp, (1,) * fp.n),
        deg_blocked=fp.degree,
        deg=p.degree,
    )


# --- fractional certificate weights vs degree -----------------------------------


@dataclass(frozen=True)
class WeightWitness:
    n: int
    weights: dict[tuple[int, ...], tuple[Fraction, ...]]
    degree: int
    bound: Fraction

    def totals(self) -> dict[tuple[int, ...], Fraction]:
        return {x: sum(w, Fraction(0)) for x, w in self.weights.items()}

    def within_budget(self) -> bool:
        return all(t <= self.bound for t in self.totals().values())

    def covers(self, f: PartialFn) -> bool:
        """Check sum_{i: x_i != y_i} c_{x,i} >= |f(x) - f(y)| for all pairs."""
        for x, w in self.weights.items():
            fx = f.evaluate(x)
            for yi in range(1 << self.n):
                y = bits_of(yi, self.n)
                need = abs(int(f.values[yi]) - fx)
                if need and sum((w[i] for i in range(self.n) if x[i] != y[i]), Fraction(0)) < need:
                    return False
        return True


def fbsdeg_witness(f: PartialFn) -> WeightWitness:
    if not f.is_total:
        raise UsageError("the weight witness is built for total functions")
    if f.n > MAX_WITNESS_ARITY:
        raise UsageError(f"weight witnesses are limited to arity <= {MAX_WITNESS_ARITY}")
    d = degree(f)
    weights = {}
    for xi in range(1 << f.n):
        fc = frac_cert(f, xi)
        weights[fc.x] = fc.weights
    witness = WeightWitness(f.n, weights, d, PI_SQ_OVER_4_LOWER * d * d)
    if not witness.covers(f):
        raise AssertionError("certificate weights fail the covering inequality")
    if not witness.within_budget():
        raise AssertionError("certificate weights exceed the (pi^2/4) d^2 budget")
    return witness
