"""Bias under product distributions, the OR-versus-CNF gap, and chain-level MC targets."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..boolfn import ONE, STAR, ZERO, BlockRestriction, Gate, PartialFn, UsageError, input_matrix, project
from ..measures import dt_depth
from ..switching import MonteCarloEstimate
from .restrictions import InitParams, LayerParams, sample_r_init_cells, sample_r_tau
from .sip import SipFormula, reduce_layer

MAX_EXACT_ARITY = 20


@dataclass(frozen=True)
class BiasedProduct:
    """Independent bits with Pr[x_i = 1] = probs[i]."""

    probs: tuple

    @classmethod
    def uniform(cls, n: int, p) -> "BiasedProduct":
        return cls((p,) * n)

    @property
    def n(self) -> int:
        return len(self.probs)

    @property
    def exact(self) -> bool:
        return all(isinstance(p, (Fraction, int)) for p in self.probs)

    def weights(self) -> np.ndarray:
        """Probability of every point in table order (object array of Fractions when exact)."""
        if self.n > MAX_EXACT_ARITY:
            raise UsageError(f"weighted enumeration is limited to {MAX_EXACT_ARITY} bits")
        if self.exact:
            w = np.array([Fraction(1)], dtype=object)
            for p in self.probs:
                p = Fraction(p)
                w = np.concatenate([w * (1 - p), w * p])
        else:
            w = np.ones(1)
            for p in self.probs:
                w = np.concatenate([w * (1 - float(p)), w * float(p)])
        return w


def _prob_one_read_once(F: SipFormula, leaf_probs: np.ndarray) -> object:
    cur = leaf_probs
    for depth in range(F.d - 1, -1, -1):
        grouped = cur.reshape(-1, F.fanins[depth])
        if F.gate(depth) is Gate.AND:
            cur = np.prod(grouped, axis=1)
        else:
            cur = 1 - np.prod(1 - grouped, axis=1)
    return cur[0]


def prob_one(F: PartialFn | SipFormula, D: BiasedProduct):
    """Pr_D[F = 1]; points outside the domain carry no mass."""
    if isinstance(F, SipFormula):
        if D.n != F.n:
            raise UsageError(f"distribution has {D.n} bits, formula has {F.n} inputs")
        dtype = object if D.exact else np.float64
        leaves = np.array([Fraction(p) if D.exact else float(p) for p in D.probs], dtype=dtype)
        return _prob_one_read_once(F, leaves)
    if D.n != F.n:
        raise UsageError(f"distribution has {D.n} bits, function has arity {F.n}")
    return _mass(F, D, 1)


def _mass(F: PartialFn, D: BiasedProduct, value: int):
    w = D.weights()
    sel = (F.values == value) & F.domain.astype(bool)
    if not sel.any():
        return Fraction(0) if D.exact else 0.0
    return w[sel].sum()


def bias(F: PartialFn | SipFormula, D: BiasedProduct):
    """min(Pr[F = 0], Pr[F = 1]) under D."""
    p1 = prob_one(F, D)
    p0 = 1 - p1 if isinstance(F, SipFormula) else _mass(F, D, 0)
    return min(p0, p1)


# --- OR under a restriction versus a CNF -------------------------------------------------


@dataclass(frozen=True)
class CNF:
    """Clauses are tuples of (variable, value); a literal holds when x_var == value."""

    n: int
    clauses: tuple[tuple[tuple[int, int], ...], ...]

    def __post_init__(self) -> None:
        for cl in self.clauses:
            for i, b in cl:
                if not 0 <= i < self.n or b not in (0, 1):
                    raise UsageError(f"bad literal ({i}, {b}) for {self.n} variables")

    @property
    def width(self) -> int:
        return max((len(c) for c in self.clauses), default=0)

    def evaluate(self, x: Sequence[int]) -> int:
        return int(all(any(x[i] == b for i, b in cl) for cl in self.clauses))

    def table(self) -> np.ndarray:
        if self.n > MAX_EXACT_ARITY:
            raise UsageError(f"CNF tables are limited to {MAX_EXACT_ARITY} variables")
        X = input_matrix(self.n)
        out = np.ones(X.shape[0], dtype=bool)
        for cl in self.clauses:
            sat = np.zeros(X.shape[0], dtype=bool)
            for i, b in cl:
                sat |= X[:, i] == b
            out &= sat
        return out.astype(np.uint8)


def or_restricted_table(tau: Sequence[int]) -> np.ndarray:
    """OR of tau with its stars filled from y, tabulated over y in {0,1}^n."""
    tau = tuple(int(c) for c in tau)
    n = len(tau)
    if any(c not in (ZERO, ONE, STAR) for c in tau):
        raise UsageError("tau cells must be 0, 1 or *")
    if ONE in tau:
        return np.ones(1 << n, dtype=np.uint8)
    X = input_matrix(n)
    stars = [i for i, c in enumerate(tau) if c == STAR]
    if not stars:
        return np.zeros(1 << n, dtype=np.uint8)
    return X[:, stars].any(axis=1).astype(np.uint8)


@dataclass(frozen=True)
class CnfGap:
    disagreement: Fraction
    bias: Fraction
    slack: Fraction

    @property
    def holds(self) -> bool:
        return self.disagreement >= self.bias - self.slack


def or_cnf_gap(tau: Sequence[int], cnf: CNF, p, check: bool = True) -> CnfGap:
    """Exact Pr[OR_tau(Y) != C(Y)], bias(OR_tau, Y) and r p for Y with bits 1 w.p. p."""
    n = len(tau)
    if cnf.n != n:
        raise UsageError(f"CNF has {cnf.n} variables, tau has {n}")
    p = Fraction(p)
    w = BiasedProduct.uniform(n, p).weights()
    orv = or_restricted_table(tau)
    cv = cnf.table()
    dis = w[orv != cv].sum() if (orv != cv).any() else Fraction(0)
    p1 = w[orv == 1].sum() if orv.any() else Fraction(0)
    gap = CnfGap(Fraction(dis), min(Fraction(p1), 1 - Fraction(p1)), cnf.width * p)
    if check and not gap.holds:
        raise AssertionError(f"disagreement {gap.disagreement} < bias {gap.bias} - {gap.slack}")
    return gap


def random_cnf_instance(rng: np.random.Generator, max_n: int = 12) -> tuple[tuple[int, ...], CNF, Fraction]:
    """A (tau, CNF, p) triple: mostly-star tau with few ones, width 1..3, p in (0, 1/2]."""
    n = int(rng.integers(1, max_n + 1))
    u = rng.random(n)
    tau = tuple(int(ONE if v < 0.05 else ZERO if v < 0.35 else STAR) for v in u)
    r = int(rng.integers(1, min(3, n) + 1))
    m = int(rng.integers(1, 7))
    clauses = []
    for _ in range(m):
        width = int(rng.integers(1, r + 1))
        vars_ = rng.choice(n, size=width, replace=False)
        clauses.append(tuple((int(i), int(rng.integers(0, 2))) for i in sorted(vars_)))
    p = Fraction(int(rng.integers(1, 17)), 32)
    return tau, CNF(n, tuple(clauses)), p


# --- chain-level Monte Carlo targets ---------------------------------------------------------


def restricted_bias(F: SipFormula, lifted: np.ndarray, p_one: float) -> float:
    """Bias of the formula above the bottom layer when its inputs are ``lifted``.

    ``F`` describes the gates above the projected layer; stars become
    independent variables equal to 1 with probability ``p_one``.
    """
    leaves = np.where(lifted == STAR, p_one, lifted.astype(np.float64))
    p1 = float(_prob_one_read_once(F, leaves))
    return min(p1, 1 - p1)


@dataclass(frozen=True)
class ToyUnbiasedOr:
    """Depth-2 family: OR of ``w`` bottom ANDs, each projected by the bottom rule.

    q' = 1/2, the completion bias t solves (1 - t)^(q' w) = 1/2, and
    x = w^(-5/4), so a typical projection leaves an OR of about w/2 fresh
    variables that is close to balanced.
    """

    w: int
    block_len: int = 2

    @property
    def qprime(self) -> float:
        return 0.5

    @property
    def x(self) -> float:
        return self.w ** -1.25

    @property
    def t(self) -> float:
        return 1 - 2 ** (-1 / (self.qprime * self.w))

    def sample_bias(self, rng: np.random.Generator) -> float:
        init = InitParams(self.block_len, self.x, self.qprime)
        cells = sample_r_init_cells(init, self.w, rng)
        lifted = reduce_layer(cells, Gate.AND)
        return restricted_bias(SipFormula((self.w,), Gate.OR), lifted, self.t)

    def exact_mean(self) -> float:
        """E[bias] summed over the number of starred and forced gates."""
        x, qp, t, w = self.x, self.qprime, self.t, self.w
        total = 0.0
        for s in range(w + 1):
            pr = math.comb(w, s) * qp**s * (1 - x - qp) ** (w - s)
            p0 = (1 - t) ** s
            total += pr * min(p0, 1 - p0)
        return total


@dataclass(frozen=True)
class MeanEstimate:
    mean: float
    stderr: float
    trials: int


def unbiasedor_mc(toy: ToyUnbiasedOr, trials: int, rng: np.random.Generator) -> MeanEstimate:
    if trials < 2:
        raise UsageError("need at least two trials")
    vals = np.array([toy.sample_bias(rng) for _ in range(trials)])
    return MeanEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(trials)), trials)


@dataclass(frozen=True)
class TailEstimate:
    trials: int
    depth_counts: dict[int, int]

    def tail(self, s: int) -> MonteCarloEstimate:
        return MonteCarloEstimate(sum(c for d, c in self.depth_counts.items() if d > s), self.trials)


def random_cnf(n: int, width: int, clauses: int, rng: np.random.Generator) -> CNF:
    out = []
    for _ in range(clauses):
        vars_ = rng.choice(n, size=width, replace=False)
        out.append(tuple((int(i), int(rng.integers(0, 2))) for i in sorted(vars_)))
    return CNF(n, tuple(out))


def projcnf_tail_mc(
    cnf: CNF,
    tau: BlockRestriction,
    params: LayerParams,
    trials: int,
    rng: np.random.Generator,
) -> TailEstimate:
    """Depth distribution of the optimal decision tree of proj_rho C over rho drawn from the layer rule."""
    if tau.N * tau.l != cnf.n:
        raise UsageError("tau does not cover the CNF's variables")
    F = PartialFn(cnf.n, cnf.table())
    counts: dict[int, int] = {}
    for _ in range(trials):
        rho = sample_r_tau(tau, params, rng)
        depth = dt_depth(project(F, rho))
        counts[depth] = counts.get(depth, 0) + 1
    return TailEstimate(trials, dict(sorted(counts.items())))
