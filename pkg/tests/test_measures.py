from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from switchlab.boolfn import PartialFn, UsageError, and_fn, maj_fn, or_fn, xor_fn
from switchlab.measures import (
    Basis,
    MultilinearPoly,
    approx_degree,
    block_sensitivity,
    block_sensitivity_all,
    cert_complexity,
    cert_complexity_all,
    check_approximation,
    degree,
    dt_depth,
    fbs_all,
    frac_block_sens,
    frac_cert,
    measure_all,
    measure_at,
    poly_of,
    real_block_sens,
    sensitivity,
    sensitivity_all,
)

from helpers import random_partial, random_total
from oracles import cert_size, dt_depth_search, moebius_direct, packing_size, sensitive_blocks

# Rational lower bound for pi^2 (pi^2 = 9.8696044010...).
PI_SQ_LOWER = Fraction(98696044, 10**7)


class TestDecisionTree:
    def test_or3(self, backend):
        assert dt_depth(or_fn(3)) == dt_depth_search(or_fn(3)) == 3

    def test_constant(self, backend):
        assert dt_depth(PartialFn.constant(3, 1)) == 0

    def test_xor2(self, backend):
        assert dt_depth(xor_fn(2)) == dt_depth_search(xor_fn(2)) == 2

    def test_partial_points_unconstrained(self, backend):
        # XOR_2 defined only where x0 = 0 is the dictator x1.
        f = PartialFn(2, [0, 1, 1, 0], [1, 0, 1, 0])
        assert dt_depth(f) == 1

    def test_random_against_search(self, backend):
        rng = np.random.default_rng(21)
        for _ in range(30):
            f = random_partial(rng, int(rng.integers(1, 6)), density=0.7)
            assert dt_depth(f) == dt_depth_search(f)

    def test_cap(self):
        with pytest.raises(UsageError):
            dt_depth(PartialFn.constant(17, 0))


class TestCertificates:
    def test_or3_zero(self, backend):
        assert cert_complexity(or_fn(3), (0, 0, 0)) == cert_size(or_fn(3), (0, 0, 0)) == 3

    def test_or3_single_one(self, backend):
        assert cert_complexity(or_fn(3), (1, 0, 0)) == 1

    def test_xor2_everywhere(self, backend):
        for x in product((0, 1), repeat=2):
            assert cert_complexity(xor_fn(2), x) == cert_size(xor_fn(2), x) == 2

    def test_outside_domain(self):
        f = PartialFn(2, [0, 1, 1, 0], [1, 1, 1, 0])
        with pytest.raises(UsageError):
            cert_complexity(f, (1, 1))

    def test_table_matches_pointwise(self, backend):
        rng = np.random.default_rng(22)
        for _ in range(25):
            n = int(rng.integers(1, 6))
            f = random_partial(rng, n, density=0.75)
            pts = [tuple((int(i) >> k) & 1 for k in range(n)) for i in f.defined_indices()]
            c0 = max((cert_size(f, x) for x in pts if f.evaluate(x) == 0), default=0)
            c1 = max((cert_size(f, x) for x in pts if f.evaluate(x) == 1), default=0)
            summary = cert_complexity_all(f)
            assert (summary.C0, summary.C1, summary.C) == (c0, c1, max(c0, c1))
            for x in pts:
                assert cert_complexity(f, x) == cert_size(f, x)


class TestSensitivity:
    def test_or3(self):
        assert sensitivity(or_fn(3), (0, 0, 0)) == 3
        assert sensitivity(or_fn(3), (1, 1, 0)) == 0

    @pytest.mark.parametrize("n", [1, 2, 5, 8])
    def test_xor(self, n):
        rng = np.random.default_rng(n)
        x = tuple(int(b) for b in rng.integers(0, 2, n))
        assert sensitivity(xor_fn(n), x) == n

    def test_flips_outside_domain_do_not_count(self):
        f = PartialFn(2, [0, 1, 1, 0], [1, 1, 0, 0])
        assert sensitivity(f, (0, 0)) == 1

    def test_block_examples(self, backend):
        assert block_sensitivity(or_fn(3), (0, 0, 0)) == 3
        assert packing_size(sensitive_blocks(or_fn(3), (0, 0, 0))) == 3
        for x in product((0, 1), repeat=4):
            assert block_sensitivity(xor_fn(4), x) == packing_size(sensitive_blocks(xor_fn(4), x)) == 4
        assert block_sensitivity_all(PartialFn.constant(3, 0)) == 0

    def test_block_against_oracle(self, backend):
        rng = np.random.default_rng(23)
        for _ in range(40):
            n = int(rng.integers(1, 7))
            f = random_partial(rng, n, density=0.8)
            for i in f.defined_indices()[:6]:
                x = tuple((int(i) >> k) & 1 for k in range(n))
                assert block_sensitivity(f, x) == packing_size(sensitive_blocks(f, x))


class TestFractional:
    @pytest.mark.parametrize("n", range(1, 9))
    def test_or_at_zero(self, n):
        fc = frac_cert(or_fn(n), (0,) * n)
        # Unit weights cover every y != 0; the n singleton blocks pack to n.
        assert fc.value == n
        assert fc.weights == (Fraction(1),) * n
        assert fc.covers(or_fn(n))

    @pytest.mark.parametrize("n", range(1, 9))
    def test_or_single_one(self, n):
        x = (1,) + (0,) * (n - 1)
        assert frac_cert(or_fn(n), x).value == 1

    def test_constant(self):
        assert frac_cert(PartialFn.constant(4, 1), (0, 1, 0, 1)).value == 0
        assert frac_block_sens(PartialFn.constant(4, 1), (0, 1, 0, 1)) == 0

    def test_fbs_examples(self):
        assert frac_block_sens(or_fn(3), (0, 0, 0)) == 3
        for x in product((0, 1), repeat=3):
            assert frac_block_sens(xor_fn(3), x, check_duality=True) == 3

    def test_maj3_is_fractional(self):
        # Sensitive blocks at 000 are all pairs; packing of pairs on 3 points is 3/2.
        assert frac_block_sens(maj_fn(3), (0, 0, 0), check_duality=True) == Fraction(3, 2)
        assert fbs_all(maj_fn(3)) == 2

    def test_duality_on_random_samples(self):
        rng = np.random.default_rng(24)
        for _ in range(500):
            n = int(rng.integers(1, 9))
            f = random_partial(rng, n, density=float(rng.uniform(0.4, 1.0)))
            dom = f.defined_indices()
            if not len(dom):
                continue
            x = int(rng.choice(dom))
            fc = frac_cert(f, x)
            assert fc.covers(f)
            assert frac_block_sens(f, x) == fc.value


class TestDegree:
    def test_examples(self):
        assert degree(and_fn(2)) == 2
        assert moebius_direct(and_fn(2)) == {3: 1}
        for n in range(1, 7):
            assert degree(xor_fn(n)) == n
        assert degree(PartialFn.constant(3, 1)) == 0

    def test_partial_rejected(self):
        with pytest.raises(UsageError):
            degree(PartialFn(1, [0, 1], [1, 0]))

    def test_mobius_against_inclusion_exclusion(self):
        rng = np.random.default_rng(25)
        for n in range(0, 7):
            f = random_total(rng, n)
            p = poly_of(f)
            assert {k: int(v) for k, v in p.coeffs.items()} == moebius_direct(f)
            assert p.table() == [int(v) for v in f.values]

    def test_basis_round_trip(self):
        rng = np.random.default_rng(26)
        f = random_total(rng, 4)
        p = poly_of(f)
        pm = p.to_basis(Basis.PLUS_MINUS)
        assert pm.table() == p.table()
        assert pm.to_basis(Basis.ZERO_ONE) == p


class TestApproxDegree:
    def test_or2(self):
        d, w = approx_degree(or_fn(2))
        assert d == 1
        assert w.coeffs == {0: Fraction(1, 3), 1: Fraction(1, 3), 2: Fraction(1, 3)}
        assert check_approximation(or_fn(2), w)

    def test_constant(self):
        assert approx_degree(PartialFn.constant(3, 1))[0] == 0

    def test_xor2(self):
        assert approx_degree(xor_fn(2))[0] == 2

    def test_witnesses_on_random_functions(self):
        rng = np.random.default_rng(27)
        for _ in range(15):
            n = int(rng.integers(1, 5))
            f = random_partial(rng, n, density=0.7)
            d, w = approx_degree(f)
            assert w.degree <= d
            assert check_approximation(f, w)
            if f.is_total:
                assert d <= degree(f)


class TestRealBlockSensitivity:
    def test_examples(self):
        x1 = MultilinearPoly(3, Basis.PLUS_MINUS, {1: Fraction(1)})
        assert real_block_sens(x1, (1, 1, 1), {0}) == 1
        assert real_block_sens(x1, (1, 1, 1), {1}) == 0
        avg = MultilinearPoly(2, Basis.PLUS_MINUS, {1: Fraction(1, 2), 2: Fraction(1, 2)})
        assert real_block_sens(avg, (1, 1), {0}) == Fraction(1, 2)

    def test_wrong_basis(self):
        with pytest.raises(UsageError):
            real_block_sens(MultilinearPoly(1, Basis.ZERO_ONE, {1: 1}), (1,), {0})


def _all_functions(n):
    for code in range(1 << (1 << n)):
        yield PartialFn(n, [(code >> i) & 1 for i in range(1 << n)])


def test_all_three_bit_functions_obey_the_inequalities():
    for f in _all_functions(3):
        r = measure_all(f, with_adeg=False)
        assert r.s <= r.bs <= r.fbs
        assert r.bs <= r.C
        assert r.bs <= r.deg**2
        assert r.s <= r.deg**2
        assert 4 * r.fbs <= PI_SQ_LOWER * r.deg**2


def test_report_keys_and_pointwise():
    r = measure_all(maj_fn(3))
    assert r.as_dict() == {
        "n": 3, "DT": 3, "C": 2, "C0": 2, "C1": 2, "s": 2, "bs": 2, "fbs": 2, "deg": 3, "adeg": 1,
    }
    at = measure_at(or_fn(3), (0, 0, 0))
    assert at == {"x": "000", "value": 0, "C": 3, "s": 3, "fc": 3, "bs": 3, "fbs": 3}
