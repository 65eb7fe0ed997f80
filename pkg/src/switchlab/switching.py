"""Random restrictions of low-certificate functions and their shallow trees.

A restriction here is described by a base point ``x`` and a free set ``S``:
bits outside ``S`` are fixed to ``x`` and bits in ``S`` stay free.  The module
provides the heavy-index filter and the staged sampling of ``S``, the
small-certificate DNF, the round-based certificate decision tree, and exact
and Monte Carlo estimates of how often a height-``d`` tree errs.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .boolfn import PartialFn, Restriction, UsageError, _as_bits, bits_of, index_of, restrict
from .measures import FractionalCertificate, fbs_all, frac_cert

MAX_EXACT_ARITY = 12
MAX_TREE_ARITY = 16
MAX_STABILITY_FREE = 20
MC_CHUNK = 10_000


def _prob(p) -> Fraction:
    p = Fraction(p)
    if not 0 <= p <= 1:
        raise UsageError(f"probability must lie in [0, 1], got {p}")
    return p


# --- free sets and heavy indices -----------------------------------------------


@dataclass(frozen=True)
class FreeSet:
    n: int
    indices: frozenset[int]
    p: Fraction

    @property
    def mask(self) -> int:
        return sum(1 << i for i in self.indices)


def sample_free_set(n: int, p, rng: np.random.Generator) -> FreeSet:
    p = _prob(p)
    picks = rng.random(n) < float(p)
    return FreeSet(n, frozenset(int(i) for i in np.nonzero(picks)[0]), p)


def free_set_weight(mask: int, n: int, p: Fraction) -> Fraction:
    """Pr[S = mask] when each index joins S independently with probability p."""
    k = bin(mask).count("1")
    return p**k * (1 - p) ** (n - k)


def free_set_size_distribution(n: int, p) -> list[Fraction]:
    """Exact Pr[|S| = j] for j = 0..n by enumerating every subset."""
    p = _prob(p)
    out = [Fraction(0)] * (n + 1)
    for mask in range(1 << n):
        out[bin(mask).count("1")] += free_set_weight(mask, n, p)
    return out


def heavy_set(cert: FractionalCertificate, S: FreeSet | Iterable[int], tau) -> frozenset[int]:
    indices = S.indices if isinstance(S, FreeSet) else frozenset(S)
    return frozenset(i for i in indices if cert.weights[i] > tau)


def restricted_stability_check(
    f: PartialFn,
    x: Sequence[int],
    S: Iterable[int],
    K: Iterable[int],
    cert: FractionalCertificate,
    bound=None,
) -> bool:
    """Every defined y that differs from x only inside S minus K moves f by at most
    the certificate weight on S minus K (and by at most ``bound`` when given)."""
    x = _as_bits(x, f.n)
    fx = f.evaluate(x)
    if fx is None:
        raise UsageError("base point is outside the domain")
    free = sorted(set(S) - set(K))
    if len(free) > MAX_STABILITY_FREE:
        raise UsageError(f"stability enumeration is limited to {MAX_STABILITY_FREE} free indices")
    budget = sum((cert.weights[i] for i in free), Fraction(0))
    if bound is not None:
        budget = min(budget, Fraction(bound))
    base = index_of(x)
    for sub in range(1 << len(free)):
        idx = base
        for j, i in enumerate(free):
            if sub >> j & 1:
                idx ^= 1 << i
        if f.domain[idx] and abs(int(f.values[idx]) - fx) > budget:
            return False
    return True


# --- staged sampling ------------------------------------------------------------


@dataclass(frozen=True)
class Stage:
    candidates: frozenset[int]
    sampled: frozenset[int]
    flipped: frozenset[int]  # A_{j+1}


@dataclass(frozen=True)
class HeavyTrace:
    stages: tuple[Stage, ...]
    terminated: bool
    k: int
    tau: float
    stage_limit: int

    def check(self) -> None:
        prev: frozenset[int] = frozenset()
        seen: set[int] = set()
        for st in self.stages:
            if not prev <= st.flipped:
                raise AssertionError("flipped sets must grow")
            if st.sampled & seen:
                raise AssertionError("stage samples must be disjoint")
            seen |= st.sampled
            prev = st.flipped


def heavy_threshold(p, F, k: int) -> float:
    return 2 * float(p) ** 0.75 * float(F) / k


def stagewise_sample(
    f: PartialFn,
    x: Sequence[int],
    y: Sequence[int],
    p,
    k: int,
    rng: np.random.Generator,
    F=None,
) -> HeavyTrace:
    """Sample S stage by stage over the heavy indices of successive hybrids.

    Stage j draws from h(x^{A_j}) minus every earlier heavy set, where
    h(z) = {i : c_{z,i} > tau}.  Hybrids outside the domain have no heavy set.
    """
    if k < 1:
        raise UsageError("k must be positive")
    x = _as_bits(x, f.n)
    y = _as_bits(y, f.n)
    p = _prob(p)
    if F is None:
        F = fbs_all(f)
    tau = heavy_threshold(p, F, k)
    limit = math.ceil(k / 6)
    cache: dict[int, frozenset[int]] = {}

    def heavy(idx: int) -> frozenset[int]:
        if idx not in cache:
            if not f.domain[idx]:
                cache[idx] = frozenset()
            else:
                w = frac_cert(f, idx).weights
                cache[idx] = frozenset(i for i in range(f.n) if w[i] > tau)
        return cache[idx]

    base = index_of(x)
    flipped: frozenset[int] = frozenset()
    covered: set[int] = set()
    sampled_all: set[int] = set()
    stages = []
    terminated = False
    for _ in range(limit):
        hyb = base
        for i in flipped:
            hyb ^= 1 << i
        h = heavy(hyb)
        cand = frozenset(h - covered)
        covered |= h
        order = sorted(cand)
        picks = rng.random(len(order)) < float(p)
        sampled = frozenset(i for i, keep in zip(order, picks) if keep)
        sampled_all |= sampled
        nxt = frozenset(i for i in sampled_all if x[i] != y[i])
        stages.append(Stage(cand, sampled, nxt))
        if nxt == flipped:
            terminated = True
            break
        flipped = nxt
    trace = HeavyTrace(tuple(stages), terminated, k, tau, limit)
    trace.check()
    return trace


# --- certificates of a restricted function --------------------------------------


def _cert_pairs(states: np.ndarray, n: int) -> list[tuple[int, int]]:
    """Ternary subcube states to (mask, values) pairs."""
    out = []
    for s in states.tolist():
        mask = vals = 0
        for i in range(n):
            dgt = s % 3
            if dgt != 2:
                mask |= 1 << i
                if dgt == 1:
                    vals |= 1 << i
            s //= 3
        out.append((mask, vals))
    return out


def _lex_key(pair: tuple[int, int], n: int):
    mask, vals = pair
    idx = tuple(i for i in range(n) if mask >> i & 1)
    return idx, tuple(vals >> i & 1 for i in idx)


def restricted(f: PartialFn, x: Sequence[int], S: Iterable[int]) -> PartialFn:
    return restrict(f, Restriction.from_free_set(_as_bits(x, f.n), S))


@dataclass(frozen=True)
class CertDnf:
    """OR of terms; each term maps a free-variable index to the bit it requires."""

    n: int
    terms: tuple[dict[int, int], ...]

    @property
    def width(self) -> int:
        return max((len(t) for t in self.terms), default=0)

    def evaluate(self, y: Sequence[int]) -> int:
        y = _as_bits(y, self.n)
        return int(any(all(y[i] == b for i, b in t.items()) for t in self.terms))


def cert_dnf_of(g: PartialFn, k: int) -> CertDnf:
    """All minimal 1-certificates of g of width at most k^2, as a DNF."""
    if g.n > MAX_TREE_ARITY:
        raise UsageError(f"certificate enumeration is limited to {MAX_TREE_ARITY} free variables")
    flags = kernels.subcube_flags(g.values, g.domain, g.n)
    pairs = _cert_pairs(kernels.minimal_certificates(flags, g.n, 1, k * k), g.n)
    pairs.sort(key=lambda pr: _lex_key(pr, g.n))
    terms = tuple({i: (v >> i) & 1 for i in range(g.n) if m >> i & 1} for m, v in pairs)
    return CertDnf(g.n, terms)


def cert_dnf(f: PartialFn, x: Sequence[int], S: Iterable[int], k: int) -> CertDnf:
    return cert_dnf_of(restricted(f, x, S), k)


# --- decision trees ----------------------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    value: int


@dataclass(frozen=True)
class Query:
    index: int
    child0: "DecisionTreeNode"
    child1: "DecisionTreeNode"


DecisionTreeNode = Leaf | Query


def tree_depth(node: DecisionTreeNode) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(tree_depth(node.child0), tree_depth(node.child1))


def tree_eval(node: DecisionTreeNode, y: Sequence[int]) -> int:
    while isinstance(node, Query):
        node = node.child1 if y[node.index] else node.child0
    return node.value


def check_tree(node: DecisionTreeNode, depth_bound: int) -> None:
    """Raise if a path repeats a query or runs deeper than ``depth_bound``."""
    stack = [(node, frozenset())]
    while stack:
        cur, seen = stack.pop()
        if isinstance(cur, Leaf):
            continue
        if cur.index in seen:
            raise AssertionError(f"index {cur.index} queried twice on one path")
        if len(seen) + 1 > depth_bound:
            raise AssertionError(f"tree deeper than {depth_bound}")
        nxt = seen | {cur.index}
        stack.append((cur.child0, nxt))
        stack.append((cur.child1, nxt))


class CertificateProcedure:
    """The round procedure on one function with certificates up to ``width``.

    Each round checks, in order: a small 1-certificate already read (output 1),
    a small 0-certificate already read (output 0), no small 1-certificate left
    consistent (output 0), rounds exhausted (output 0), no small 0-certificate
    left consistent (output 1).  Otherwise it queries every unread bit of the
    smallest consistent small 0-certificate in lexicographic order.
    """

    def __init__(self, g: PartialFn, width: int, rounds: int) -> None:
        if g.n > MAX_TREE_ARITY:
            raise UsageError(f"certificate trees are limited to {MAX_TREE_ARITY} free variables")
        self.n = g.n
        self.width = width
        self.rounds = rounds
        self.flags = kernels.subcube_flags(g.values, g.domain, g.n)
        zeros = _cert_pairs(kernels.minimal_certificates(self.flags, g.n, 0, width), g.n)
        zeros.sort(key=lambda pr: _lex_key(pr, g.n))
        ones = _cert_pairs(kernels.minimal_certificates(self.flags, g.n, 1, width), g.n)
        self.zero_mask = np.array([m for m, _ in zeros], dtype=np.int64)
        self.zero_vals = np.array([v for _, v in zeros], dtype=np.int64)
        self.one_mask = np.array([m for m, _ in ones], dtype=np.int64)
        self.one_vals = np.array([v for _, v in ones], dtype=np.int64)

    @staticmethod
    def _consistent(cm, cv, km: int, kv: int) -> np.ndarray:
        return ((cv ^ kv) & cm & km) == 0

    def step(self, km: int, kv: int, done: int) -> tuple[int | None, list[int]]:
        """(output, []) to stop, or (None, bits to query this round)."""
        c1 = self._consistent(self.one_mask, self.one_vals, km, kv)
        if np.any(c1 & ((self.one_mask & ~km) == 0)):
            return 1, []
        c0 = self._consistent(self.zero_mask, self.zero_vals, km, kv)
        if np.any(c0 & ((self.zero_mask & ~km) == 0)):
            return 0, []
        if not c1.any():
            return 0, []
        if done >= self.rounds:
            return 0, []
        hits = np.nonzero(c0)[0]
        if hits.size == 0:
            return 1, []
        chosen = int(self.zero_mask[hits[0]])
        return None, [i for i in range(self.n) if chosen >> i & 1 and not km >> i & 1]

    def tree(self) -> DecisionTreeNode:
        def at_round(km: int, kv: int, done: int) -> DecisionTreeNode:
            out, bits = self.step(km, kv, done)
            if out is not None:
                return Leaf(out)
            return query(bits, 0, km, kv, done + 1)

        def query(bits: list[int], pos: int, km: int, kv: int, done: int) -> DecisionTreeNode:
            if pos == len(bits):
                return at_round(km, kv, done)
            i = bits[pos]
            m = km | (1 << i)
            return Query(i, query(bits, pos + 1, m, kv, done), query(bits, pos + 1, m, kv | (1 << i), done))

        return at_round(0, 0, 0)

    def certified_depth(self, y: Sequence[int]) -> int:
        """Queries made along y's path before the read bits fix the function value.

        "Fixed" means the subcube of inputs agreeing with the read bits has at
        most one value on the domain.
        """
        tern = 3**self.n - 1
        if self.flags[tern] != 3:
            return 0
        km = kv = 0
        done = depth = 0
        while True:
            out, bits = self.step(km, kv, done)
            if out is not None:
                raise AssertionError("procedure stopped on an unfixed subcube")
            for i in bits:
                b = int(y[i])
                km |= 1 << i
                kv |= b << i
                tern -= (2 - b) * 3**i
                depth += 1
                if self.flags[tern] != 3:
                    return depth
            done += 1


def cert_dt_of(g: PartialFn, k: int) -> DecisionTreeNode:
    """Round-procedure tree with width and round limit k^2; depth at most k^4."""
    if k < 1:
        raise UsageError("k must be positive")
    node = CertificateProcedure(g, k * k, k * k).tree()
    check_tree(node, k**4)
    return node


def cert_dt(f: PartialFn, x: Sequence[int], S: Iterable[int], k: int) -> DecisionTreeNode:
    return cert_dt_of(restricted(f, x, S), k)


def height_tree(g: PartialFn, d: int) -> DecisionTreeNode:
    """Unlimited-width procedure tree cut at depth d.

    A cut node answers the value its subcube is fixed to, or 0 if unfixed.
    """
    proc = CertificateProcedure(g, g.n, g.n)
    full = proc.tree()

    def cut(node: DecisionTreeNode, depth: int, tern: int) -> DecisionTreeNode:
        if isinstance(node, Leaf):
            return node
        if depth == d:
            fl = int(proc.flags[tern])
            return Leaf(1 if fl == 2 else 0)
        step = 3**node.index
        return Query(
            node.index,
            cut(node.child0, depth + 1, tern - 2 * step),
            cut(node.child1, depth + 1, tern - step),
        )

    return cut(full, 0, 3**g.n - 1)


# --- switching failure --------------------------------------------------------------


class SwitchingProfile:
    """Per-free-set cache of the certified depth of y's path (or -1 when the
    tree cannot err: f_rho(y|S) is 0 or undefined)."""

    def __init__(self, f: PartialFn, x: Sequence[int], y: Sequence[int]) -> None:
        if f.n > MAX_TREE_ARITY:
            raise UsageError(f"switching profiles are limited to arity {MAX_TREE_ARITY}")
        self.f = f
        self.x = _as_bits(x, f.n)
        self.y = _as_bits(y, f.n)
        self.xi = index_of(self.x)
        self.yi = index_of(self.y)
        self._cache: dict[int, int] = {}

    def depth(self, mask: int) -> int:
        got = self._cache.get(mask)
        if got is None:
            got = _err_depth(self.f, self.xi, self.yi, mask)
            self._cache[mask] = got
        return got


def _err_depth(f: PartialFn, xi: int, yi: int, mask: int) -> int:
    full = (xi & ~mask) | (yi & mask)
    if not f.domain[full] or f.values[full] != 1:
        return -1
    free = [i for i in range(f.n) if mask >> i & 1]
    g = restrict(f, Restriction.from_free_set(bits_of(xi, f.n), free))
    ysub = [(yi >> i) & 1 for i in free]
    return CertificateProcedure(g, g.n, g.n).certified_depth(ysub)


def switch_fail_exact(f: PartialFn, x: Sequence[int], y: Sequence[int], p, d: int) -> Fraction:
    return switch_fail_curve(f, x, y, p, [d])[0]


def switch_fail_curve(f: PartialFn, x: Sequence[int], y: Sequence[int], p, ds: Sequence[int]) -> list[Fraction]:
    """Exact Pr_S[the height-d tree errs at y|S] for each d in ``ds``."""
    if f.n > MAX_EXACT_ARITY:
        raise UsageError(f"exact switching enumeration is limited to arity {MAX_EXACT_ARITY}")
    p = _prob(p)
    prof = SwitchingProfile(f, x, y)
    out = [Fraction(0)] * len(ds)
    for mask in range(1 << f.n):
        c = prof.depth(mask)
        if c < 0:
            continue
        w = free_set_weight(mask, f.n, p)
        for j, d in enumerate(ds):
            if c > d:
                out[j] += w
    return out


@dataclass(frozen=True)
class MonteCarloEstimate:
    hits: int
    trials: int

    @property
    def estimate(self) -> float:
        return self.hits / self.trials

    @property
    def stderr(self) -> float:
        e = self.estimate
        return math.sqrt(e * (1 - e) / self.trials)


def _masks(rng: np.random.Generator, size: int, n: int, p: float) -> np.ndarray:
    bits = rng.random((size, n)) < p
    return bits.astype(np.int64) @ (np.int64(1) << np.arange(n, dtype=np.int64)) if n else np.zeros(size, np.int64)


def switch_fail_mc(
    f: PartialFn,
    x: Sequence[int],
    y: Sequence[int],
    p,
    d: int,
    trials: int,
    rng_factory,
) -> MonteCarloEstimate:
    """Monte Carlo estimate of the same event with S drawn per trial.

    ``rng_factory(chunk)`` returns the generator for trial chunk ``chunk``, so the
    estimate does not depend on how chunks are scheduled.
    """
    if trials < 1:
        raise UsageError("trials must be positive")
    p = float(_prob(p))
    prof = SwitchingProfile(f, x, y)
    hits = 0
    for chunk, start in enumerate(range(0, trials, MC_CHUNK)):
        size = min(MC_CHUNK, trials - start)
        masks = _masks(rng_factory(chunk), size, f.n, p)
        uniq, counts = np.unique(masks, return_counts=True)
        for m, c in zip(uniq.tolist(), counts.tolist()):
            if prof.depth(m) > d:
                hits += c
    return MonteCarloEstimate(hits, trials)


def switch_fail_uniform_mc(f: PartialFn, p, d: int, trials: int, rng_factory) -> MonteCarloEstimate:
    """Variant with x and y drawn uniformly per trial alongside S."""
    if trials < 1:
        raise UsageError("trials must be positive")
    if f.n > MAX_TREE_ARITY:
        raise UsageError(f"switching profiles are limited to arity {MAX_TREE_ARITY}")
    p = float(_prob(p))
    cache: dict[tuple[int, int, int], int] = {}
    full = (1 << f.n) - 1
    hits = 0
    for chunk, start in enumerate(range(0, trials, MC_CHUNK)):
        size = min(MC_CHUNK, trials - start)
        rng = rng_factory(chunk)
        masks = _masks(rng, size, f.n, p)
        xs = rng.integers(0, 1 << f.n, size) if f.n else np.zeros(size, np.int64)
        ys = rng.integers(0, 1 << f.n, size) if f.n else np.zeros(size, np.int64)
        for m, xi, yi in zip(masks.tolist(), xs.tolist(), ys.tolist()):
            key = (m, xi & (full & ~m), yi & m)
            c = cache.get(key)
            if c is None:
                c = _err_depth(f, key[1], key[2], m)
                cache[key] = c
            if c > d:
                hits += 1
    return MonteCarloEstimate(hits, trials)


# --- reference bounds (reported, never asserted) -----------------------------------


def tree_failure_bound(k: int) -> float:
    return (2 + k / 6) * math.exp(-k / 6)


def height_failure_bound(d: int) -> float:
    return math.exp(-(d ** 0.2))


def uniform_failure_bound(d: int) -> float:
    return math.exp(-(d ** 0.1))


def stability_bound(p, F, N: int, k: int) -> float:
    return 4 * float(p) ** 1.75 * float(F) * N / k


def restriction_threshold(k: int, F, N: int) -> float:
    return (k / (48 * float(F) * N)) ** (4 / 7)


def stage_hit_bound(p, F, tau: float) -> float:
    return float(p) * float(F) / tau


def fbs_from_queries(T: int) -> float:
    """Upper bound pi^2 T^2 on fractional block sensitivity from T quantum queries."""
    return math.pi**2 * T * T
