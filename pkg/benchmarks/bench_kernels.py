"""Time each hot kernel under the compiled and the numpy backend.

    python benchmarks/bench_kernels.py [--n 10] [--repeat 5] [--seed 0]

Prints one row per kernel with the best-of-``repeat`` time for each backend
and the speedup.  Both backends receive identical inputs and their outputs
are compared before timing.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from switchlab import kernels
from switchlab.seeding import rng_for


def _inputs(n: int, seed: int):
    rng = rng_for(seed, "bench", n)
    values = rng.integers(0, 2, 1 << n).astype(np.uint8)
    domain = (rng.random(1 << n) < 0.9).astype(np.uint8)
    flags = kernels.backend_module("python").subcube_flags(values, domain, n)
    masks = [int(m) for m in rng.integers(1, 1 << n, 3 * n)]
    return values, domain, flags, masks


def _cases(n, values, domain, flags, masks):
    width = min(n, 4)
    return {
        "subcube_flags": lambda k: k.subcube_flags(values, domain, n),
        "dt_depth_table": lambda k: k.dt_depth_table(flags, n),
        "cert_table": lambda k: k.cert_table(flags, n),
        "minimal_certificates": lambda k: k.minimal_certificates(flags, n, 1, width),
        "max_packing": lambda k: k.max_packing(masks, n),
        "min_hitting_set": lambda k: k.min_hitting_set(masks, n),
    }


def _same(a, b) -> bool:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array_equal(np.asarray(a), np.asarray(b))
    return a == b


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args(argv)

    backends = kernels.available_backends()
    if len(backends) < 2:
        print("compiled backend unavailable; only the numpy backend can be timed")
    mods = {b: kernels.backend_module(b) for b in backends}
    cases = _cases(a.n, *_inputs(a.n, a.seed))

    header = f"{'kernel':<22}" + "".join(f"{b + ' (s)':>14}" for b in backends) + f"{'speedup':>10}"
    print(f"n={a.n}, best of {a.repeat}")
    print(header)
    for name, call in cases.items():
        outs = [call(m) for m in mods.values()]
        if not all(_same(outs[0], o) for o in outs[1:]):
            raise SystemExit(f"{name}: backends disagree")
        times = [min(timeit.repeat(lambda m=m: call(m), number=1, repeat=a.repeat)) for m in mods.values()]
        speed = f"{times[-1] / times[0]:>9.1f}x" if len(times) > 1 else f"{'-':>10}"
        print(f"{name:<22}" + "".join(f"{t:>14.5f}" for t in times) + speed)


if __name__ == "__main__":
    main()
