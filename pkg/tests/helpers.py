"""Random function generators shared by the tests."""

import numpy as np

from switchlab.boolfn import PartialFn


def random_partial(rng, n, density=0.8):
    vals = rng.integers(0, 2, 1 << n)
    dom = (rng.random(1 << n) < density).astype(np.uint8)
    return PartialFn(n, vals, dom)


def random_total(rng, n):
    return PartialFn(n, rng.integers(0, 2, 1 << n))
