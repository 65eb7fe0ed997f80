"""Exact query-complexity measures of partial Boolean functions.

Points outside the domain are unconstrained: a tree or certificate may do
anything there, and flips that leave the domain are never sensitive.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

from . import kernels
from .boolfn import PartialFn, UsageError, _as_bits, bits_of, index_of, input_matrix
from .lp import GE, LE, LinearProgram, Sense, solve

MAX_DT_ARITY = 16
MAX_BS_ARITY = 12
MAX_FBS_ARITY = 10
MAX_ADEG_ARITY = 12

ONE_THIRD = Fraction(1, 3)


def _require(f: PartialFn, cap: int, what: str) -> None:
    if f.n > cap:
        raise UsageError(f"{what} is limited to arity <= {cap}, got {f.n}")


def _point_index(f: PartialFn, x: Sequence[int] | int) -> int:
    idx = int(x) if isinstance(x, (int, np.integer)) else index_of(_as_bits(x, f.n))
    if not 0 <= idx < (1 << f.n):
        raise UsageError(f"input index {idx} out of range")
    if not f.domain[idx]:
        raise UsageError(f"input {bits_of(idx, f.n)} is outside the domain")
    return idx


def subcube_flags(f: PartialFn) -> np.ndarray:
    return kernels.subcube_flags(f.values, f.domain, f.n)


def ternary_index(x: Sequence[int]) -> int:
    """Ternary state of a fully fixed input."""
    s = 0
    p = 1
    for b in x:
        s += int(b) * p
        p *= 3
    return s


# --- decision trees and certificates ----------------------------------------


def dt_depth(f: PartialFn) -> int:
    _require(f, MAX_DT_ARITY, "decision-tree depth")
    table = kernels.dt_depth_table(subcube_flags(f), f.n)
    return int(table[-1])


def sensitive_masks(f: PartialFn, x: Sequence[int] | int) -> np.ndarray:
    """Difference masks x XOR y over defined y with f(y) != f(x)."""
    idx = _point_index(f, x)
    fx = f.values[idx]
    ys = np.nonzero(f.domain.astype(bool) & (f.values != fx))[0]
    return (ys ^ idx).astype(np.int64)


def minimal_masks(masks: Iterable[int]) -> list[int]:
    """Inclusion-minimal elements of a family of bit masks, sorted."""
    arr = np.unique(np.asarray(list(masks), dtype=np.int64))
    if arr.size == 0:
        return []
    pc = np.array([bin(int(m)).count("1") for m in arr])
    arr = arr[np.argsort(pc, kind="stable")]
    kept = []
    while arr.size:
        k = arr[0]
        kept.append(int(k))
        arr = arr[(arr & k) != k]
    return sorted(kept)


def minimal_sensitive_blocks(f: PartialFn, x: Sequence[int] | int) -> list[int]:
    return minimal_masks(sensitive_masks(f, x))


def cert_complexity(f: PartialFn, x: Sequence[int] | int) -> int:
    """Smallest number of x's bits that force f's value on the domain."""
    _require(f, MAX_DT_ARITY, "certificate complexity")
    return int(kernels.min_hitting_set(minimal_sensitive_blocks(f, x), f.n))


@dataclass(frozen=True)
class CertificateSummary:
    C: int
    C0: int
    C1: int


def cert_complexity_all(f: PartialFn) -> CertificateSummary:
    """C, C0, C1 via one pass over the subcube lattice."""
    _require(f, MAX_DT_ARITY, "certificate complexity")
    table = kernels.cert_table(subcube_flags(f), f.n)
    inputs = input_matrix(f.n).astype(np.int64)
    tern = inputs @ (3 ** np.arange(f.n, dtype=np.int64)) if f.n else np.zeros(1, dtype=np.int64)
    per_x = table[tern].astype(np.int64)
    dom = f.domain.astype(bool)
    c0 = per_x[dom & (f.values == 0)]
    c1 = per_x[dom & (f.values == 1)]
    C0 = int(c0.max()) if c0.size else 0
    C1 = int(c1.max()) if c1.size else 0
    return CertificateSummary(max(C0, C1), C0, C1)


# --- sensitivity family ----------------------------------------------------------


def sensitivity_counts(f: PartialFn) -> np.ndarray:
    """s(f, x) for every table index (0 outside the domain)."""
    idx = np.arange(1 << f.n, dtype=np.int64)
    dom = f.domain.astype(bool)
    out = np.zeros(1 << f.n, dtype=np.int64)
    for i in range(f.n):
        nb = idx ^ (1 << i)
        out += dom & dom[nb] & (f.values != f.values[nb])
    return out


def sensitivity(f: PartialFn, x: Sequence[int] | int) -> int:
    return int(sensitivity_counts(f)[_point_index(f, x)])


def sensitivity_all(f: PartialFn) -> int:
    counts = sensitivity_counts(f)
    return int(counts.max(initial=0))


def block_sensitivity(f: PartialFn, x: Sequence[int] | int) -> int:
    _require(f, MAX_BS_ARITY, "block sensitivity")
    return int(kernels.max_packing(minimal_sensitive_blocks(f, x), f.n))


def block_sensitivity_all(f: PartialFn) -> int:
    return max((block_sensitivity(f, int(i)) for i in f.defined_indices()), default=0)


@dataclass(frozen=True)
class FractionalCertificate:
    x: tuple[int, ...]
    weights: tuple[Fraction, ...]
    value: Fraction

    def covers(self, f: PartialFn) -> bool:
        """Check the defining inequality at every defined y."""
        w = np.array(self.weights, dtype=object)
        fx = f.evaluate(self.x)
        xi = index_of(self.x)
        for y in f.defined_indices():
            diff = int(y) ^ xi
            need = abs(int(f.values[y]) - fx)
            total = sum((w[i] for i in range(f.n) if diff >> i & 1), Fraction(0))
            if total < need:
                return False
        return True


def frac_cert(f: PartialFn, x: Sequence[int] | int) -> FractionalCertificate:
    """Minimum-weight fractional certificate at x (exact LP).

    Only inclusion-minimal sensitive blocks contribute rows: any other row
    has a superset support with the same right-hand side and is implied.
    """
    _require(f, MAX_DT_ARITY, "fractional certificate complexity")
    idx = _point_index(f, x)
    blocks = minimal_sensitive_blocks(f, idx)
    n = f.n
    xbits = bits_of(idx, n)
    if not blocks:
        return FractionalCertificate(xbits, tuple(Fraction(0) for _ in range(n)), Fraction(0))
    lp = LinearProgram(Sense.MIN, [1] * n)
    for b in blocks:
        lp.add([1 if b >> i & 1 else 0 for i in range(n)], GE, 1)
    sol = solve(lp)
    if not sol.optimal:
        raise AssertionError(f"certificate LP ended as {sol.status}")
    return FractionalCertificate(xbits, sol.assignment, sol.value)


def frac_block_sens(f: PartialFn, x: Sequence[int] | int, check_duality: bool = False) -> Fraction:
    """Maximum fractional packing of sensitive blocks at x with unit capacities."""
    _require(f, MAX_FBS_ARITY, "fractional block sensitivity")
    idx = _point_index(f, x)
    blocks = sorted(set(int(m) for m in sensitive_masks(f, idx)))
    if not blocks:
        value = Fraction(0)
    else:
        lp = LinearProgram(Sense.MAX, [1] * len(blocks))
        for i in range(f.n):
            lp.add([1 if b >> i & 1 else 0 for b in blocks], LE, 1)
        sol = solve(lp)
        if not sol.optimal:
            raise AssertionError(f"packing LP ended as {sol.status}")
        value = sol.value
    if check_duality:
        dual = frac_cert(f, idx).value
        if dual != value:
            raise AssertionError(f"packing value {value} differs from certificate value {dual}")
    return value


def fbs_all(f: PartialFn) -> Fraction:
    """fbs(f) = FC(f) = max over the domain of the certificate LP value."""
    return max((frac_cert(f, int(i)).value for i in f.defined_indices()), default=Fraction(0))


# --- polynomials -----------------------------------------------------------------


class Basis(str, Enum):
    ZERO_ONE = "01"
    PLUS_MINUS = "pm"


def _popcount(m: int) -> int:
    return bin(m).count("1")


@dataclass(frozen=True)
class MultilinearPoly:
    """Coefficients keyed by variable-subset bit masks.

    In the PLUS_MINUS basis, table index bit 0 stands for +1 and bit 1 for -1.
    """

    n: int
    basis: Basis
    coeffs: Mapping[int, Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        clean = {int(k): v for k, v in self.coeffs.items() if v != 0}
        if any(k >> self.n for k in clean):
            raise UsageError("monomial uses a variable beyond the arity")
        object.__setattr__(self, "coeffs", clean)
        object.__setattr__(self, "basis", Basis(self.basis))

    @property
    def degree(self) -> int:
        return max((_popcount(k) for k in self.coeffs), default=0)

    def evaluate(self, x: Sequence) -> object:
        if len(x) != self.n:
            raise UsageError(f"point has {len(x)} coordinates, polynomial has {self.n}")
        total = 0
        for mask, c in self.coeffs.items():
            term = c
            for i in range(self.n):
                if mask >> i & 1:
                    term = term * x[i]
            total = total + term
        return total

    def points(self) -> list[tuple[int, ...]]:
        """Boolean points in table order for this basis."""
        if self.basis is Basis.ZERO_ONE:
            return [bits_of(i, self.n) for i in range(1 << self.n)]
        return [tuple(1 - 2 * b for b in bits_of(i, self.n)) for i in range(1 << self.n)]

    def table(self) -> list:
        return [self.evaluate(p) for p in self.points()]

    def to_basis(self, basis: Basis) -> "MultilinearPoly":
        basis = Basis(basis)
        if basis is self.basis:
            return self
        out: dict[int, Fraction] = {}
        for mask, c in self.coeffs.items():
            # Expand the monomial over all submasks T of mask.
            sub = mask
            while True:
                k = _popcount(sub)
                if self.basis is Basis.ZERO_ONE:
                    # x_i = (1 - z_i)/2
                    coef = Fraction(c) * Fraction((-1) ** k, 2 ** _popcount(mask))
                else:
                    # z_i = 1 - 2 x_i
                    coef = Fraction(c) * (-2) ** k
                out[sub] = out.get(sub, Fraction(0)) + coef
                if sub == 0:
                    break
                sub = (sub - 1) & mask
        return MultilinearPoly(self.n, basis, out)

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for mask in sorted(self.coeffs, key=lambda m: (_popcount(m), m)):
            var = "*".join(f"x{i}" for i in range(self.n) if mask >> i & 1)
            parts.append(f"{self.coeffs[mask]}" + (f"*{var}" if var else ""))
        return " + ".join(parts)


def mobius(values: np.ndarray, n: int) -> np.ndarray:
    """Coefficients of the multilinear 0/1-basis interpolant of an integer table."""
    a = np.array(values, dtype=np.int64).copy()
    for i in range(n):
        view = a.reshape(-1, 2, 1 << i)
        view[:, 1, :] -= view[:, 0, :]
    return a


def poly_of(f: PartialFn) -> MultilinearPoly:
    if not f.is_total:
        raise UsageError("exact degree needs a total function; use approx_degree for partial ones")
    coeffs = mobius(f.values, f.n)
    return MultilinearPoly(f.n, Basis.ZERO_ONE, {int(k): Fraction(int(c)) for k, c in enumerate(coeffs) if c})


def degree(f: PartialFn) -> int:
    if not f.is_total:
        raise UsageError("exact degree needs a total function; use approx_degree for partial ones")
    coeffs = mobius(f.values, f.n)
    nz = np.nonzero(coeffs)[0]
    return max((_popcount(int(k)) for k in nz), default=0)


def approx_degree(f: PartialFn, eps: Fraction | int | str = ONE_THIRD) -> tuple[int, MultilinearPoly]:
    """Smallest d admitting p of degree <= d with 0 <= p <= 1 and |p - f| <= eps on dom."""
    _require(f, MAX_ADEG_ARITY, "approximate degree")
    eps = Fraction(eps)
    n = f.n
    pts = range(1 << n)
    for d in range(n + 1):
        monos = [m for m in range(1 << n) if _popcount(m) <= d]
        lp = LinearProgram(Sense.MIN, [0] * len(monos), lower=[None] * len(monos))
        for x in pts:
            row = [1 if (m & x) == m else 0 for m in monos]
            lo, hi = Fraction(0), Fraction(1)
            if f.domain[x]:
                fx = int(f.values[x])
                lo, hi = max(lo, fx - eps), min(hi, fx + eps)
            if lo > hi:
                raise UsageError(f"eps={eps} leaves no admissible value at input {bits_of(x, n)}")
            lp.add(row, GE, lo)
            lp.add(row, LE, hi)
        sol = solve(lp)
        if sol.optimal:
            witness = MultilinearPoly(n, Basis.ZERO_ONE, dict(zip(monos, sol.assignment)))
            return d, witness
    raise AssertionError("the exact interpolant always certifies degree <= n")


def check_approximation(f: PartialFn, p: MultilinearPoly, eps: Fraction = ONE_THIRD) -> bool:
    """Re-evaluate p at every Boolean point against range and closeness."""
    p01 = p.to_basis(Basis.ZERO_ONE)
    for x, val in enumerate(p01.table()):
        if not 0 <= val <= 1:
            return False
        if f.domain[x] and abs(val - int(f.values[x])) > eps:
            return False
    return True


def real_block_sens(p: MultilinearPoly, x: Sequence[int], block: Iterable[int]) -> Fraction:
    """|p(x) - p(x^B)| / 2 for a polynomial in the +-1 basis."""
    if p.basis is not Basis.PLUS_MINUS:
        raise UsageError("real-valued block sensitivity expects a +-1 basis polynomial")
    x = tuple(int(v) for v in x)
    if any(v not in (1, -1) for v in x):
        raise UsageError("point must have +-1 coordinates")
    flipped = list(x)
    for i in block:
        flipped[i] = -flipped[i]
    return abs(Fraction(p.evaluate(x)) - Fraction(p.evaluate(tuple(flipped)))) / 2


# --- aggregate report ------------------------------------------------------------


@dataclass(frozen=True)
class MeasureReport:
    n: int
    DT: int
    C: int
    C0: int
    C1: int
    s: int
    bs: int | None
    fbs: Fraction
    deg: int | None
    adeg: int | None

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("n", "DT", "C", "C0", "C1", "s", "bs", "fbs", "deg", "adeg")}


def measure_all(f: PartialFn, with_adeg: bool = True) -> MeasureReport:
    certs = cert_complexity_all(f)
    return MeasureReport(
        n=f.n,
        DT=dt_depth(f),
        C=certs.C,
        C0=certs.C0,
        C1=certs.C1,
        s=sensitivity_all(f),
        bs=block_sensitivity_all(f) if f.n <= MAX_BS_ARITY else None,
        fbs=fbs_all(f),
        deg=degree(f) if f.is_total else None,
        adeg=approx_degree(f)[0] if with_adeg and f.n <= MAX_ADEG_ARITY else None,
    )


def measure_at(f: PartialFn, x: Sequence[int]) -> dict:
    idx = _point_index(f, x)
    out = {
        "x": "".join(str(b) for b in bits_of(idx, f.n)),
        "value": int(f.values[idx]),
        "C": cert_complexity(f, idx),
        "s": sensitivity(f, idx),
        "fc": frac_cert(f, idx).value,
    }
    if f.n <= MAX_BS_ARITY:
        out["bs"] = block_sensitivity(f, idx)
    if f.n <= MAX_FBS_ARITY:
        out["fbs"] = frac_block_sens(f, idx)
    return out
