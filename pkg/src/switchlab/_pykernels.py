"""Pure numpy/Python implementations of the hot kernels.

Every function here has a twin with the same signature in ``_kernels.pyx``.
Ternary subcube states use digit ``i`` (weight ``3**i``) for variable ``i``:
0 and 1 fix the variable, 2 leaves it free.  Flags are bit 0 = "contains a
defined 0-point", bit 1 = "contains a defined 1-point".
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

NAME = "python"


def subcube_flags(values: np.ndarray, domain: np.ndarray, n: int) -> np.ndarray:
    vals = np.asarray(values, dtype=np.uint8)
    dom = np.asarray(domain, dtype=np.uint8)
    base = np.where(dom.astype(bool), np.left_shift(np.uint8(1), vals), 0).astype(np.uint8)
    if n == 0:
        return base.copy()
    # C-order reshape puts bit 0 on the last axis, which matches digit 0 being
    # the fastest-varying ternary digit after the axis-wise extension below.
    arr = base.reshape((2,) * n)
    for axis in range(n):
        lo = np.take(arr, [0], axis=axis)
        hi = np.take(arr, [1], axis=axis)
        arr = np.concatenate([lo, hi, lo | hi], axis=axis)
    return np.ascontiguousarray(arr).reshape(-1)


def _digits(n: int) -> np.ndarray:
    idx = np.arange(3**n, dtype=np.int64)
    out = np.empty((3**n, n), dtype=np.int8)
    for i in range(n):
        out[:, i] = idx % 3
        idx //= 3
    return out


def dt_depth_table(flags: np.ndarray, n: int) -> np.ndarray:
    size = 3**n
    depth = np.zeros(size, dtype=np.int16)
    if n == 0:
        return depth
    digits = _digits(n)
    stars = (digits == 2).sum(axis=1)
    mixed = np.asarray(flags) == 3
    pow3 = 3 ** np.arange(n, dtype=np.int64)
    for level in range(1, n + 1):
        states = np.nonzero((stars == level) & mixed)[0]
        if states.size == 0:
            continue
        best = np.full(states.size, np.iinfo(np.int16).max, dtype=np.int16)
        sd = digits[states]
        for i in range(n):
            sel = sd[:, i] == 2
            if not sel.any():
                continue
            s = states[sel]
            cand = 1 + np.maximum(depth[s - 2 * pow3[i]], depth[s - pow3[i]])
            best[sel] = np.minimum(best[sel], cand)
        depth[states] = best
    return depth


def cert_table(flags: np.ndarray, n: int) -> np.ndarray:
    """Smallest fixed-position count of a monochromatic supercube, per state.

    For a fully fixed state encoding a defined input x this equals C(f, x).
    """
    size = 3**n
    big = np.int16(n + 1)
    digits = _digits(n) if n else np.zeros((1, 0), dtype=np.int8)
    fixed = (digits != 2).sum(axis=1).astype(np.int16)
    fl = np.asarray(flags)
    best = np.where((fl == 1) | (fl == 2), fixed, big).astype(np.int16)
    pow3 = 3 ** np.arange(n, dtype=np.int64)
    stars = n - fixed
    # Supercubes have strictly more stars, so sweep from many stars to few.
    for level in range(n - 1, -1, -1):
        states = np.nonzero(stars == level)[0]
        if states.size == 0:
            continue
        sd = digits[states]
        cur = best[states]
        for i in range(n):
            sel = sd[:, i] != 2
            if not sel.any():
                continue
            s = states[sel]
            parent = s + (2 - sd[sel, i].astype(np.int64)) * pow3[i]
            cur[sel] = np.minimum(cur[sel], best[parent])
        best[states] = cur
    return best


def minimal_certificates(flags: np.ndarray, n: int, value: int, max_width: int) -> np.ndarray:
    """States of inclusion-minimal ``value``-certificates of width <= max_width."""
    target = 1 << value
    fl = np.asarray(flags)
    cand = np.nonzero(fl == target)[0]
    if cand.size == 0 or n == 0:
        return cand.astype(np.int64)
    digits = _digits(n)[cand]
    width = (digits != 2).sum(axis=1)
    keep = width <= max_width
    pow3 = 3 ** np.arange(n, dtype=np.int64)
    for i in range(n):
        sel = digits[:, i] != 2
        parent = cand[sel] + (2 - digits[sel, i].astype(np.int64)) * pow3[i]
        bad = fl[parent] == target
        idx = np.nonzero(sel)[0][bad]
        keep[idx] = False
    return cand[keep].astype(np.int64)


def max_packing(masks, n: int) -> int:
    """Maximum number of pairwise disjoint masks (exact, memoised on free bits)."""
    masks = sorted(set(int(m) for m in masks if m))
    if not masks:
        return 0
    by_low: dict[int, list[int]] = {}
    for m in masks:
        by_low.setdefault((m & -m).bit_length() - 1, []).append(m)
    memo: dict[int, int] = {}

    def best(avail: int) -> int:
        if avail == 0:
            return 0
        got = memo.get(avail)
        if got is not None:
            return got
        # Every bit below ``low`` is gone, so a usable block through ``low``
        # must have ``low`` as its lowest bit.
        low = (avail & -avail).bit_length() - 1
        res = best(avail & ~(1 << low))
        for m in by_low.get(low, ()):
            if m & ~avail == 0:
                cand = 1 + best(avail & ~m)
                if cand > res:
                    res = cand
        memo[avail] = res
        return res

    return best((1 << n) - 1)


def min_hitting_set(masks, n: int) -> int:
    masks = [int(m) for m in masks]
    if not masks:
        return 0
    if any(m == 0 for m in masks):
        raise ValueError("empty set cannot be hit")
    for size in range(n + 1):
        for combo in combinations(range(n), size):
            t = 0
            for i in combo:
                t |= 1 << i
            if all(m & t for m in masks):
                return size
    raise AssertionError("unreachable: full set hits every nonempty mask")
