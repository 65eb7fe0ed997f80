"""Typical restrictions: star-count windows one and two layers above the restricted one."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, sqrt

import mpmath
import numpy as np

from ..boolfn import STAR, UsageError
from .params import SipParams
from .restrictions import InitParams, sample_r_init_cells
from .sip import SipFormula, reduce_layer

WINDOW_SLACK = 1e-9


@dataclass(frozen=True)
class TypicalityWindow:
    """Condition 1: |count - center| <= radius.  Condition 2: lo2 <= count <= hi2."""

    center: float
    radius: float
    lo2: float
    hi2: float

    def cond1(self, count: int) -> bool:
        return abs(count - self.center) <= self.radius + WINDOW_SLACK

    def cond2(self, count: int) -> bool:
        return self.lo2 - WINDOW_SLACK <= count <= self.hi2 + WINDOW_SLACK

    @property
    def forces_undetermined(self) -> bool:
        """Both windows exclude a zero star count, which is what the structural remark needs."""
        return self.center - self.radius > 0 and self.lo2 > 0


def sip_window(params: SipParams, k: int) -> TypicalityWindow:
    """Window for a restriction over A_k of the formula described by ``params``."""
    if params.fanins is None:
        raise UsageError("parameters are degenerate; no window is defined")
    if not 3 <= k <= params.d:
        raise UsageError(f"need 3 <= k <= {params.d}")
    with mpmath.workprec(200):
        w = mpmath.mpf(params.w)
        center = params.q * w
        radius = w ** params.beta(k - 1)
        fan = params.fanins[k - 3]
        return TypicalityWindow(float(center), float(radius), float(fan - w ** mpmath.mpf(0.8)), float(fan))


@dataclass
class TypicalityReport:
    typical: bool
    cond1_failures: list[tuple[int, int]] = field(default_factory=list)
    cond2_failures: list[tuple[int, int]] = field(default_factory=list)

    @property
    def failed_condition(self) -> int | None:
        if self.cond1_failures:
            return 1
        if self.cond2_failures:
            return 2
        return None


def is_typical(tau: np.ndarray | list, formula: SipFormula, k: int, window: TypicalityWindow) -> TypicalityReport:
    """Check both windows over every gate of A_{k-2} and A_{k-3}.

    ``tau`` holds the 0/1/* cells of A_k in address order.  Failures are
    listed as (gate address, star count).  When the windows exclude zero
    stars, a typical ``tau`` must leave every A_{k-3} gate undetermined; that
    is asserted on every call.
    """
    if not 3 <= k <= formula.d:
        raise UsageError(f"need 3 <= k <= {formula.d}")
    cells = np.asarray(tau, dtype=np.uint8)
    if cells.shape != (formula.layer_size(k),):
        raise UsageError(f"tau has {cells.size} cells, A_{k} has {formula.layer_size(k)}")
    lifted = reduce_layer(cells.reshape(-1, formula.fanins[k - 1]), formula.gate(k - 1))
    c1 = (lifted.reshape(-1, formula.fanins[k - 2]) == STAR).sum(axis=1)
    lifted2 = reduce_layer(lifted.reshape(-1, formula.fanins[k - 2]), formula.gate(k - 2))
    c2 = (lifted2.reshape(-1, formula.fanins[k - 3]) == STAR).sum(axis=1)
    report = TypicalityReport(True)
    report.cond1_failures = [(a, int(c)) for a, c in enumerate(c1) if not window.cond1(int(c))]
    report.cond2_failures = [(a, int(c)) for a, c in enumerate(c2) if not window.cond2(int(c))]
    report.typical = not report.cond1_failures and not report.cond2_failures
    if report.typical and window.forces_undetermined:
        lifted3 = reduce_layer(lifted2.reshape(-1, formula.fanins[k - 3]), formula.gate(k - 3))
        if not (lifted3 == STAR).all():
            raise AssertionError("typical restriction left an A_{k-3} gate determined")
    return report


@dataclass(frozen=True)
class TypicalityRate:
    trials: int
    typical: int
    cond1_failures: int
    cond2_failures: int

    @property
    def failure_rate(self) -> float:
        return 1 - self.typical / self.trials

    @property
    def cond1_rate(self) -> float:
        return self.cond1_failures / self.trials

    def stderr(self, rate: float) -> float:
        return sqrt(rate * (1 - rate) / self.trials)


def typicality_rate_mc(
    formula: SipFormula,
    k: int,
    window: TypicalityWindow,
    sampler: Callable[[np.random.Generator], np.ndarray],
    trials: int,
    rng: np.random.Generator,
) -> TypicalityRate:
    if trials < 1:
        raise UsageError("trials must be positive")
    typical = f1 = f2 = 0
    for _ in range(trials):
        rep = is_typical(sampler(rng), formula, k, window)
        typical += rep.typical
        f1 += bool(rep.cond1_failures)
        f2 += bool(rep.cond2_failures)
    return TypicalityRate(trials, typical, f1, f2)


# --- a scaled family with a closed-form failure rate ----------------------------------


TOY_STAR_PROB = Fraction(1, 8)
TOY_BLOCK_LEN = 2


@dataclass(frozen=True)
class ToyTypicality:
    """One OR gate over B bottom AND gates of fan-in 2, restricted by the bottom rule.

    Each bottom block becomes a star with probability ``ps`` and is fixed to
    contain a 0 otherwise, so the OR gate sees Binomial(B, ps) stars.  The
    condition-1 window is B ps +- (B ps)^(2/3).
    """

    B: int
    ps: Fraction = TOY_STAR_PROB

    @property
    def formula(self) -> SipFormula:
        return SipFormula((1, self.B, TOY_BLOCK_LEN))

    @property
    def window(self) -> TypicalityWindow:
        mu = float(self.B * self.ps)
        return TypicalityWindow(mu, mu ** (2 / 3), 0.0, 1.0)

    def sampler(self, rng: np.random.Generator) -> np.ndarray:
        init = InitParams(TOY_BLOCK_LEN, 0, self.ps)
        return sample_r_init_cells(init, self.B, rng).reshape(-1)

    def rate_mc(self, trials: int, rng: np.random.Generator) -> TypicalityRate:
        return typicality_rate_mc(self.formula, 3, self.window, self.sampler, trials, rng)

    def exact_cond1_failure(self) -> Fraction:
        win = self.window
        ps = Fraction(self.ps)
        total = Fraction(0)
        for c in range(self.B + 1):
            if not win.cond1(c):
                total += comb(self.B, c) * ps**c * (1 - ps) ** (self.B - c)
        return total
