"""Exact dense two-phase simplex over the rationals with Bland's pivoting rule.

Arithmetic runs on gmpy2 ``mpq``; inputs may be ints, Fractions, decimal
strings or mpq, and all outputs are ``fractions.Fraction``.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from gmpy2 import mpq

Number = int | Fraction | str


class Sense(str, Enum):
    MIN = "min"
    MAX = "max"


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class LpResourceError(RuntimeError):
    """Raised when rational entries outgrow the configured bit budget."""


LE, GE, EQ = "<=", ">=", "="

DEFAULT_MAX_BITS = 1 << 16


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[Fraction, ...]
    relation: str
    rhs: Fraction


@dataclass
class LinearProgram:
    """``sense`` objective over ``len(objective)`` variables.

    Bounds default to ``[0, +inf)``; ``None`` in a bound means unbounded on
    that side.
    """

    sense: Sense
    objective: Sequence[Number]
    constraints: list[Constraint] = field(default_factory=list)
    lower: list[Fraction | None] | None = None
    upper: list[Fraction | None] | None = None

    def __post_init__(self) -> None:
        self.sense = Sense(self.sense)
        self.objective = tuple(Fraction(c) for c in self.objective)
        m = len(self.objective)
        if m < 1:
            raise ValueError("a linear program needs at least one variable")
        if self.lower is None:
            self.lower = [Fraction(0)] * m
        if self.upper is None:
            self.upper = [None] * m
        if len(self.lower) != m or len(self.upper) != m:
            raise ValueError("bound vectors must match the variable count")
        self.lower = [None if b is None else Fraction(b) for b in self.lower]
        self.upper = [None if b is None else Fraction(b) for b in self.upper]

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    def add(self, coeffs: Sequence[Number], relation: str, rhs: Number) -> None:
        if relation not in (LE, GE, EQ):
            raise ValueError(f"relation must be one of <=, >=, =; got {relation!r}")
        row = tuple(Fraction(c) for c in coeffs)
        if len(row) != self.num_vars:
            raise ValueError(f"constraint row has {len(row)} entries, expected {self.num_vars}")
        self.constraints.append(Constraint(row, relation, Fraction(rhs)))

    def set_free(self, j: int) -> None:
        self.lower[j] = None
        self.upper[j] = None

    def is_feasible_point(self, x: Sequence[Fraction]) -> bool:
        for j, v in enumerate(x):
            if self.lower[j] is not None and v < self.lower[j]:
                return False
            if self.upper[j] is not None and v > self.upper[j]:
                return False
        for con in self.constraints:
            lhs = sum((a * v for a, v in zip(con.coeffs, x)), Fraction(0))
            if con.relation == LE and lhs > con.rhs:
                return False
            if con.relation == GE and lhs < con.rhs:
                return False
            if con.relation == EQ and lhs != con.rhs:
                return False
        return True


@dataclass(frozen=True)
class LpSolution:
    status: Status
    value: Fraction | None = None
    assignment: tuple[Fraction, ...] | None = None

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def _frac(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


class _Tableau:
    """Rows hold [coefficients..., rhs]; ``obj`` holds reduced costs and -value."""

    def __init__(self, rows, basis, ncols, max_bits):
        self.rows = rows
        self.basis = basis
        self.ncols = ncols
        self.max_bits = max_bits

    def pivot(self, r: int, c: int) -> None:
        prow = self.rows[r]
        piv = prow[c]
        if piv != 1:
            inv = 1 / piv
            prow = [v * inv for v in prow]
            self.rows[r] = prow
        nz = [j for j, v in enumerate(prow) if v != 0]
        for i, row in enumerate(self.rows):
            if i == r:
                continue
            factor = row[c]
            if factor != 0:
                for j in nz:
                    row[j] -= factor * prow[j]
        self.basis[r] = c
        for v in prow:
            if v != 0 and (v.numerator.bit_length() > self.max_bits or v.denominator.bit_length() > self.max_bits):
                raise LpResourceError(f"rational entry exceeds {self.max_bits} bits")

    def run(self, obj: list, allowed: int) -> bool:
        """Maximise: ``obj`` is the reduced-cost row (negative means improving).

        Returns False when the problem is unbounded.  Columns ``>= allowed``
        never enter the basis.
        """
        rows = self.rows
        while True:
            enter = -1
            for j in range(allowed):
                if obj[j] < 0:
                    enter = j
                    break
            if enter < 0:
                return True
            leave = -1
            best = None
            for i, row in enumerate(rows):
                a = row[enter]
                if a > 0:
                    ratio = row[-1] / a
                    if best is None or ratio < best or (ratio == best and self.basis[i] < self.basis[leave]):
                        best = ratio
                        leave = i
            if leave < 0:
                return False
            factor = obj[enter]
            self.pivot(leave, enter)
            prow = self.rows[leave]
            for j, v in enumerate(prow):
                if v != 0:
                    obj[j] -= factor * v


def solve(lp: LinearProgram, max_bits: int = DEFAULT_MAX_BITS) -> LpSolution:
    m = lp.num_vars
    # Map each original variable to internal nonnegative columns:
    # x_j = shift + sign * y_col  (or y_plus - y_minus when free).
    cols: list[list[tuple[int, int]]] = []
    shift: list[Fraction] = []
    ncols = 0
    extra_rows: list[tuple[dict[int, Fraction], str, Fraction]] = []
    for j in range(m):
        lo, hi = lp.lower[j], lp.upper[j]
        if lo is not None:
            cols.append([(ncols, 1)])
            shift.append(lo)
            if hi is not None:
                if hi < lo:
                    return LpSolution(Status.INFEASIBLE)
                extra_rows.append(({ncols: Fraction(1)}, LE, hi - lo))
            ncols += 1
        elif hi is not None:
            cols.append([(ncols, -1)])
            shift.append(hi)
            ncols += 1
        else:
            cols.append([(ncols, 1), (ncols + 1, -1)])
            shift.append(Fraction(0))
            ncols += 2

    rows_spec: list[tuple[dict[int, Fraction], str, Fraction]] = []
    for con in lp.constraints:
        coeffs: dict[int, Fraction] = {}
        rhs = con.rhs
        for j, a in enumerate(con.coeffs):
            if a == 0:
                continue
            rhs -= a * shift[j]
            for col, sign in cols[j]:
                coeffs[col] = coeffs.get(col, Fraction(0)) + sign * a
        rows_spec.append((coeffs, con.relation, rhs))
    rows_spec.extend(extra_rows)

    cost = [Fraction(0)] * ncols
    sgn = 1 if lp.sense is Sense.MAX else -1
    for j, c in enumerate(lp.objective):
        for col, sign in cols[j]:
            cost[col] += sgn * sign * c

    # Normalise to nonnegative right-hand sides.
    norm = []
    for coeffs, rel, rhs in rows_spec:
        if rhs < 0:
            coeffs = {k: -v for k, v in coeffs.items()}
            rhs = -rhs
            rel = {LE: GE, GE: LE, EQ: EQ}[rel]
        norm.append((coeffs, rel, rhs))

    nrows = len(norm)
    n_slack = sum(1 for _, rel, _ in norm if rel != EQ)
    n_art = sum(1 for _, rel, _ in norm if rel != LE)
    width = ncols + n_slack + n_art
    zero = mpq(0)
    rows = []
    basis = []
    s_idx = ncols
    a_idx = ncols + n_slack
    art_rows = []
    for i, (coeffs, rel, rhs) in enumerate(norm):
        row = [zero] * (width + 1)
        for k, v in coeffs.items():
            row[k] = mpq(v.numerator, v.denominator)
        row[-1] = mpq(rhs.numerator, rhs.denominator)
        if rel == LE:
            row[s_idx] = mpq(1)
            basis.append(s_idx)
            s_idx += 1
        else:
            if rel == GE:
                row[s_idx] = mpq(-1)
                s_idx += 1
            row[a_idx] = mpq(1)
            basis.append(a_idx)
            art_rows.append(i)
            a_idx += 1
        rows.append(row)

    tab = _Tableau(rows, basis, width, max_bits)
    first_art = ncols + n_slack

    if n_art:
        # Phase 1: maximise -(sum of artificials).
        obj = [zero] * (width + 1)
        for j in range(first_art, width):
            obj[j] = mpq(1)
        for i in art_rows:
            for j, v in enumerate(rows[i]):
                if v != 0:
                    obj[j] -= v
        tab.run(obj, first_art)
        if obj[-1] != 0:
            return LpSolution(Status.INFEASIBLE)
        # Drive zero-level artificials out of the basis or drop redundant rows.
        i = 0
        while i < len(tab.rows):
            if tab.basis[i] >= first_art:
                row = tab.rows[i]
                col = next((j for j in range(first_art) if row[j] != 0), -1)
                if col >= 0:
                    tab.pivot(i, col)
                else:
                    del tab.rows[i]
                    del tab.basis[i]
                    continue
            i += 1

    # Phase 2 on the original objective; artificials stay out.
    obj = [zero] * (width + 1)
    for j in range(ncols):
        obj[j] = -mpq(cost[j].numerator, cost[j].denominator)
    for i, b in enumerate(tab.basis):
        cb = obj[b]
        if cb != 0:
            for j, v in enumerate(tab.rows[i]):
                if v != 0:
                    obj[j] -= cb * v
    if not tab.run(obj, first_art):
        return LpSolution(Status.UNBOUNDED)

    y = [Fraction(0)] * ncols
    for i, b in enumerate(tab.basis):
        if b < ncols:
            y[b] = _frac(tab.rows[i][-1])
    x = []
    for j in range(m):
        v = shift[j]
        for col, sign in cols[j]:
            v += sign * y[col]
        x.append(v)
    value = sum((c * xv for c, xv in zip(lp.objective, x)), Fraction(0))
    sol = LpSolution(Status.OPTIMAL, value, tuple(x))
    if not lp.is_feasible_point(sol.assignment):
        raise AssertionError("simplex returned a point violating the constraints")
    return sol
