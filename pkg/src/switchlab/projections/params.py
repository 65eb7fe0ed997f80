"""Parameter calculus for the Sipser-style formulas and their projection chains.

Everything is evaluated in 200-bit mpmath floats.  Nothing raises on a bad
parameter regime; instead each result carries a ``violations`` list naming
every recurrence or window that fails.  At small ``m`` the recurrences do
leave ``(0, 1)``, and callers are expected to look at that list.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import mpmath
from mpmath import mpf

from ..boolfn import UsageError

PRECISION = 200
# Residual allowed when re-checking an identity that was used to define a value.
IDENTITY_TOL = mpf(2) ** -150
# log2 of the largest N_i we are willing to form; beyond this the request is refused.
MAX_LOG2_SIZE = mpf(2) ** 60


class ParameterResourceError(UsageError):
    """The requested regime produces quantities too large to represent sensibly."""


def _in_open_unit(v: mpf) -> bool:
    return 0 < v < 1


def _fmt(v) -> str:
    return mpmath.nstr(v, 8)


@dataclass
class BaseParams:
    m: int
    w: int
    q: mpf
    p: mpf
    lam: mpf

    def beta(self, k: int, depth: int) -> mpf:
        return mpf(1) / 3 + mpf(depth - k - 1) / (12 * depth)


def _base(m: int) -> BaseParams:
    if m < 2:
        raise UsageError("m must be at least 2")
    w = int(mpmath.floor(m * mpf(2) ** m * mpmath.log(2)))
    q = mpf(2) ** (-mpf(m) / 2)
    lam = mpmath.log(w, 2) ** mpf(1.5) / mpf(w) ** mpf(1.25)
    return BaseParams(m, w, q, q * q, lam)


def _t_chain(base: BaseParams, top: int) -> dict[int, mpf]:
    """t_top = (p - lam)/q and t_{k-1} = ((1 - t_k)^{qw} - lam)/q down to t_1.

    Once a value leaves (0, 1) the power is no longer meaningful; the chain
    still continues with a real-valued power when possible so that the
    report shows how far off it is, and stops at the first complex value.
    """
    t = {top: (base.p - base.lam) / base.q}
    for k in range(top, 1, -1):
        if t[k] > 1:
            break
        t[k - 1] = ((1 - t[k]) ** (base.q * base.w) - base.lam) / base.q
    return t


def _w0(base: BaseParams, t1: mpf | None) -> int | None:
    """min{i : (1 - t_1)^{q i} <= 1/2}, or None when t_1 is outside (0, 1)."""
    if t1 is None or not _in_open_unit(t1):
        return None
    guess = int(mpmath.ceil(mpmath.log(mpf(1) / 2) / (base.q * mpmath.log(1 - t1))))
    i = max(guess - 2, 1)
    while (1 - t1) ** (base.q * i) > mpf(1) / 2:
        i += 1
    return i


def _check_w0(base: BaseParams, t1: mpf | None, w0: int | None, violations: list[str]) -> None:
    if w0 is None:
        violations.append(f"w_0 undefined: t_1 = {_fmt(t1) if t1 is not None else 'unavailable'} is outside (0, 1)")
        return
    half = mpf(1) / 2
    if not (1 - t1) ** (base.q * w0) <= half:
        violations.append(f"w_0 = {w0} does not reach (1 - t_1)^(q w_0) <= 1/2")
    if w0 > 1 and (1 - t1) ** (base.q * (w0 - 1)) <= half:
        violations.append(f"w_0 = {w0} is not minimal")


def _check_chain(base: BaseParams, t: dict[int, mpf], top: int, violations: list[str]) -> None:
    for k in range(top, 0, -1):
        if k not in t:
            violations.append(f"t_{k} undefined: the recurrence left (0, 1) above it")
            continue
        if not _in_open_unit(t[k]):
            violations.append(f"t_{k} = {_fmt(t[k])} is outside (0, 1)")
        if k < top and k + 1 in t:
            again = ((1 - t[k + 1]) ** (base.q * base.w) - base.lam) / base.q
            if abs(again - t[k]) > IDENTITY_TOL:
                violations.append(f"t_{k} fails its recurrence by {_fmt(again - t[k])}")


# --- the plain formula -------------------------------------------------------------


@dataclass
class SipParams:
    m: int
    d: int
    w: int
    q: mpf
    p: mpf
    lam: mpf
    t: dict[int, mpf]
    w0: int | None
    fanins: tuple[int, ...] | None
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def beta(self, k: int) -> mpf:
        return mpf(1) / 3 + mpf(self.d - k - 1) / (12 * self.d)

    @property
    def n(self) -> int | None:
        if self.fanins is None:
            return None
        out = 1
        for f in self.fanins:
            out *= f
        return out

    def as_dict(self) -> dict:
        return {
            "m": self.m,
            "d": self.d,
            "w": self.w,
            "q": _fmt(self.q),
            "p": _fmt(self.p),
            "lambda": _fmt(self.lam),
            "t": {str(k): _fmt(v) for k, v in sorted(self.t.items())},
            "w0": self.w0,
            "fanins": list(self.fanins) if self.fanins else None,
            "violations": list(self.violations),
        }


def _check_depth(d: int, least: int) -> None:
    if d < least:
        raise UsageError(f"depth must be at least {least}")


def sip_params(m: int, d: int) -> SipParams:
    """w, q, p, lambda, the t_k chain, w_0 and the fan-in vector for depth d."""
    _check_depth(d, 2)
    with mpmath.workprec(PRECISION):
        base = _base(m)
        top = d - 1
        t = _t_chain(base, top)
        violations: list[str] = []
        _check_chain(base, t, top, violations)
        w0 = _w0(base, t.get(1))
        _check_w0(base, t.get(1), w0, violations)
        fanins = None if w0 is None else (w0,) + (base.w,) * (d - 2) + (m,)
        return SipParams(m, d, base.w, base.q, base.p, base.lam, t, w0, fanins, violations)


# --- the modified formula with a thinned second-to-last layer -------------------------


@dataclass
class SipPrimeParams:
    base: SipParams
    N: mpf | None
    qprime: mpf | None
    x: mpf | None
    p1: mpf | None
    w_second_last: mpf | None
    w_last: mpf | None
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def fanins(self) -> tuple | None:
        if self.N is None or self.base.fanins is None:
            return None
        d = self.base.d
        head = self.base.fanins[: d - 2]
        return tuple(head) + (self.w_second_last, self.w_last)

    def as_dict(self) -> dict:
        out = self.base.as_dict()
        out.update(
            {
                "N": None if self.N is None else _fmt(self.N),
                "qprime": None if self.qprime is None else _fmt(self.qprime),
                "x": None if self.x is None else _fmt(self.x),
                "p1": None if self.p1 is None else _fmt(self.p1),
                "w_second_last": None if self.w_second_last is None else _fmt(self.w_second_last),
                "w_last": None if self.w_last is None else _fmt(self.w_last),
                "fanins": None if self.fanins is None else [_fmt(v) for v in self.fanins],
                "violations": list(self.violations),
            }
        )
        return out


def _solve_n(K: mpf, c: mpf) -> mpf | None:
    """Largest N with N^(2/7) = K * log2(1/p_1(N)) where p_1(N) = c N^(-5/7).

    In L = ln N the difference h(L) = e^(2L/7) - K((5/7) L / ln 2 - log2 c) is
    convex with a single minimum, so the largest root is found by bisection
    to the right of that minimum.  Returns None when h stays positive.
    """
    ln2 = mpmath.log(2)

    def h(L):
        return mpmath.exp(2 * L / 7) - K * (mpf(5) / 7 * L / ln2 - mpmath.log(c, 2))

    lo = mpf(7) / 2 * mpmath.log(5 * K / (2 * ln2))
    if h(lo) > 0:
        return None
    hi = lo + 1
    while h(hi) <= 0:
        hi = lo + 2 * (hi - lo)
    for _ in range(PRECISION + 20):
        mid = (lo + hi) / 2
        if h(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return mpmath.exp(hi)


def sipprime_params(m: int, d: int) -> SipPrimeParams:
    """Solve the self-referential definition of N and derive x, q', p_1 and the last two fan-ins."""
    _check_depth(d, 2)
    with mpmath.workprec(PRECISION):
        base = sip_params(m, d)
        violations = list(base.violations)
        none = SipPrimeParams(base, None, None, None, None, None, None, violations)
        t_last = base.t.get(d - 1)
        if base.w0 is None or t_last is None:
            violations.append("N undefined: the base parameters are degenerate")
            return none
        w = mpf(base.w)
        c = 1 / (base.q * w ** mpf(1.25)) + t_last
        if c <= 0:
            violations.append(f"p_1 is not positive: 1/(q w^(5/4)) + t_(d-1) = {_fmt(c)}")
            return none
        K = base.q * base.w0 * w ** (d - 2)
        N = _solve_n(K, c)
        if N is None:
            violations.append("no N satisfies N^(2/7) = q w_0 w^(d-2) log2(1/p_1)")
            return none
        qprime = N ** (-mpf(5) / 7)
        w_sl = base.q * w * N ** (mpf(5) / 7)
        x = 1 / (w_sl * w ** mpf(0.25))
        p1 = x + qprime * t_last
        w_last = -mpmath.log(p1, 2)
        out = SipPrimeParams(base, N, qprime, x, p1, w_sl, w_last, violations)

        if not _in_open_unit(p1):
            violations.append(f"p_1 = {_fmt(p1)} is outside (0, 1)")
        if abs(p1 - qprime * (1 / (base.q * w ** mpf(1.25)) + (base.p - base.lam) / base.q)) > IDENTITY_TOL * p1:
            violations.append("p_1 differs from x + q'(p - lambda)/q")
        n_sip = base.w0 * w ** (d - 2) * m
        implied = base.q / qprime * n_sip / m * mpmath.log(1 / p1, 2)
        if abs(implied - N) > IDENTITY_TOL * N:
            violations.append(f"N fails its defining equation by {_fmt(implied - N)}")
        if x + qprime > 1:
            violations.append(f"x + q' = {_fmt(x + qprime)} exceeds 1")
        if d >= 3:
            prod = mpf(1)
            for f in out.fanins:
                prod *= f
            if abs(prod - N) > IDENTITY_TOL * N:
                violations.append("the fan-in product differs from N")
        return out


# --- the alternating chain used for the oracle construction ----------------------------


@dataclass
class QcmaParams:
    m: int
    d: int
    w: int
    q: mpf
    p: mpf
    lam: mpf
    t: dict[int, mpf]
    w0: int | None
    N_levels: dict[int, mpf]
    q_levels: dict[int, mpf]
    lam_levels: dict[int, mpf]
    f_levels: dict[int, mpf]
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def depth(self) -> int:
        return 2 * self.d + 2

    def beta(self, k: int) -> mpf:
        return mpf(1) / 3 + mpf(2 * self.d - k + 1) / (24 * (self.d + 1))

    @property
    def fanins(self) -> tuple | None:
        if self.w0 is None or len(self.N_levels) < self.d or len(self.f_levels) < self.d:
            return None
        out: list = [mpf(self.w0), mpf(self.w)]
        for i in range(1, self.d + 1):
            out.append(self.q * self.w * self.N_levels[i] ** (mpf(5) / 7))
            out.append(self.f_levels[i])
        return tuple(out)

    def as_dict(self) -> dict:
        def fmt_map(mp):
            return {str(k): _fmt(v) for k, v in sorted(mp.items())}

        return {
            "m": self.m,
            "d": self.d,
            "w": self.w,
            "q": _fmt(self.q),
            "p": _fmt(self.p),
            "lambda": _fmt(self.lam),
            "t": fmt_map(self.t),
            "w0": self.w0,
            "N": fmt_map(self.N_levels),
            "q_i": fmt_map(self.q_levels),
            "lambda_i": fmt_map(self.lam_levels),
            "f": fmt_map(self.f_levels),
            "violations": list(self.violations),
        }


def _n_level(base: BaseParams, w0: int, i: int, d: int) -> mpf:
    a = w0 * base.q * mpf(base.w) ** 3
    b = base.q * mpf(base.w) ** 2
    e = mpf(7) / 2
    log2_n = e**i * mpmath.log(a, 2) + mpf(7) / 5 * (e ** (i - 1) - 1) * mpmath.log(b, 2)
    if i == d:
        log2_n += e * mpmath.log(base.q * base.w, 2)
    if log2_n > MAX_LOG2_SIZE:
        raise ParameterResourceError(f"N_{i} has about 2^{_fmt(log2_n)} bits of magnitude")
    return mpf(2) ** log2_n


def qcma_params(m: int, d: int) -> QcmaParams:
    _check_depth(d, 1)
    with mpmath.workprec(PRECISION):
        base = _base(m)
        top = 2 * d + 1
        t = _t_chain(base, top)
        violations: list[str] = []
        _check_chain(base, t, top, violations)
        w0 = _w0(base, t.get(1))
        _check_w0(base, t.get(1), w0, violations)
        out = QcmaParams(m, d, base.w, base.q, base.p, base.lam, t, w0, {}, {}, {}, {}, violations)
        if w0 is None:
            violations.append("N_i undefined without w_0")
            return out
        for i in range(1, d + 1):
            Ni = _n_level(base, w0, i, d)
            qi = Ni ** (-mpf(5) / 7)
            out.N_levels[i] = Ni
            out.q_levels[i] = qi
            out.lam_levels[i] = qi / (base.q * mpf(base.w) ** mpf(1.25))
        for i in range(1, d + 1):
            ti = t.get(2 * i + 1)
            if ti is None:
                violations.append(f"f_{i} undefined: t_{2 * i + 1} unavailable")
                continue
            inner = out.lam_levels[i] + out.q_levels[i] * ti
            if inner <= 0 or inner >= 1:
                violations.append(f"lambda_{i} + q_{i} t_{2 * i + 1} = {_fmt(inner)} is outside (0, 1)")
                continue
            if i < d:
                tn = t.get(2 * i + 2)
                if tn is None or not _in_open_unit(tn):
                    violations.append(f"f_{i} undefined: t_{2 * i + 2} outside (0, 1)")
                    continue
                fi = mpmath.log(inner) / (base.q * mpmath.log(1 - tn))
            else:
                fi = -mpmath.log(inner, 2)
            out.f_levels[i] = fi
            if fi <= 0:
                violations.append(f"f_{i} = {_fmt(fi)} is not positive")
        for k in range(1, out.depth):
            if not out.beta(k) < mpf(5) / 12:
                violations.append(f"beta({k}) = {_fmt(out.beta(k))} is not below 5/12")
        for i in range(1, d):
            if i not in out.f_levels:
                continue
            center = base.q * out.f_levels[i]
            r = mpf(base.w) ** out.beta(2 * i + 2)
            for size in (center - r, center, center + r):
                res = qia_bound_check(out, i, [size])
                if not res.ok:
                    violations.append(f"q_({i},a) at |S_a| = {_fmt(size)} leaves its interval")
        return out


@dataclass(frozen=True)
class QiaCheck:
    ok: bool
    vacuous: tuple[int, ...]
    values: tuple[mpf, ...]
    interval: tuple[mpf, mpf] | None


def qia_bound_check(params: QcmaParams, i: int, sizes) -> QiaCheck:
    """q_(i,a) = ((1 - t_{2i+2})^|S_a| - lambda_i)/t_{2i+1} inside q_i(1 +- 2 t_{2i+2} w^beta)?

    Sizes outside the window q f_i +- w^beta(2i+2) are reported as vacuous and
    do not count against the result.
    """
    if not 1 <= i < params.d:
        raise UsageError(f"level i must satisfy 1 <= i < {params.d}")
    with mpmath.workprec(PRECISION):
        t_hi = params.t.get(2 * i + 2)
        t_lo = params.t.get(2 * i + 1)
        f_i = params.f_levels.get(i)
        if t_hi is None or t_lo is None or f_i is None or t_lo == 0:
            return QiaCheck(False, tuple(range(len(sizes))), (), None)
        b = mpf(params.w) ** params.beta(2 * i + 2)
        center = params.q * f_i
        qi = params.q_levels[i]
        lo, hi = qi * (1 - 2 * t_hi * b), qi * (1 + 2 * t_hi * b)
        ok = True
        vacuous = []
        values = []
        # Window edges are compared with a tiny slack so that the exact edge counts as inside.
        slack = IDENTITY_TOL * max(abs(center), 1)
        for j, s in enumerate(sizes):
            s = mpf(s)
            if abs(s - center) > b + slack:
                vacuous.append(j)
                values.append(mpmath.nan)
                continue
            v = ((1 - t_hi) ** s - params.lam_levels[i]) / t_lo
            values.append(v)
            if not lo <= v <= hi:
                ok = False
        return QiaCheck(ok, tuple(vacuous), tuple(values), (lo, hi))
