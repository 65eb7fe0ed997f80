import math
from fractions import Fraction

import numpy as np
import pytest
from numpy.polynomial import chebyshev as npcheb

from switchlab.boolfn import PartialFn, UsageError, or_fn, xor_fn
from switchlab.measures import Basis, MultilinearPoly, block_sensitivity, degree, fbs_all
from switchlab.polybounds import (
    PI_SQ_OVER_4_LOWER,
    blockify,
    blockify_chain,
    check_gadget,
    chebyshev,
    chebyshev_eval,
    composed_gadget,
    eval_h,
    fbsdeg_witness,
    gadget_degree,
    gadget_table,
    or_gadget,
    pm_table_poly,
    real_sensitivity_at,
)

from helpers import random_total


class TestChebyshev:
    def test_degree_two(self):
        assert chebyshev(2) == [-1, 0, 2]

    @pytest.mark.parametrize("m", range(0, 12))
    def test_against_numpy_basis_change(self, m):
        ref = npcheb.cheb2poly([0] * m + [1])
        assert chebyshev(m) == [int(round(c)) for c in ref]

    @pytest.mark.parametrize("m", range(0, 11))
    def test_value_at_one(self, m):
        assert sum(chebyshev(m)) == 1

    @pytest.mark.parametrize("m", range(2, 9))
    def test_value_at_cos_pi_over_m(self, m):
        assert abs(chebyshev_eval(m, math.cos(math.pi / m)) + 1) <= 1e-12

    def test_negative(self):
        with pytest.raises(UsageError):
            chebyshev(-1)


class TestGadget:
    def test_degree_selection(self):
        for N in range(1, 200):
            m = gadget_degree(N)
            assert math.pi * math.sqrt(N) / 2 <= m < math.pi * math.sqrt(N) / 2 + 1

    def test_n4_examples(self):
        g = or_gadget(4)
        assert g.m == 4
        assert eval_h(g, [1, 1, 1, 1]) == 1
        assert abs(eval_h(g, [-1, 1, 1, 1]) - math.cos(math.pi / 4)) <= 1e-12
        assert abs(eval_h(g, [-1] * 4) - (2 * g.alpha_float - 1)) <= 1e-15
        assert abs(eval_h(g, [-1] * 4)) <= 1

    def test_alpha_in_unit_interval(self):
        for N in range(1, 300):
            assert 0 < or_gadget(N).alpha < 1

    def test_n1_symbolic(self):
        # N = 1 gives m = 2, alpha = 1/2, h = (1 + y)/2, T_2(h) = 2h^2 - 1.
        g = or_gadget(1)
        assert (g.m, g.alpha) == (2, 0.5)
        for y in (1, -1):
            h = Fraction(1, 2) + Fraction(y, 2)
            assert composed_gadget(g, [y]) == float(2 * h * h - 1)
        np.testing.assert_array_equal(gadget_table(g), [1.0, -1.0])

    @pytest.mark.parametrize("N", [4, 9, 16])
    def test_endpoints_and_bounds(self, N):
        r = check_gadget(N)
        assert r.ok
        assert abs(r.at_ones - 1) <= 1e-9 and r.worst_flip <= 1e-9 and r.max_abs <= 1 + 1e-9

    @pytest.mark.parametrize("N", range(1, 13))
    def test_h_bounded_exhaustively(self, N):
        g = or_gadget(N)
        assert np.abs(gadget_table(g)).max() <= 1 + 1e-9

    def test_rejects_non_sign_inputs(self):
        with pytest.raises(UsageError):
            eval_h(or_gadget(2), [1, 0])


class TestBlockify:
    def test_xor4_pairs_cancel(self):
        # Flipping a two-bit block never changes parity, so f' is constant.
        p = pm_table_poly(xor_fn(4))
        fp = blockify(p, (1, 1, 1, 1), [[0, 1], [2, 3]])
        assert fp.degree == 0
        assert real_sensitivity_at(fp, (1, 1)) == 0

    def test_xor_on_split_pairs(self):
        # Blocks of odd overlap with the parity support give XOR_2 with s = 2.
        f = PartialFn.from_function(4, lambda x: x[0] ^ x[2])
        fp = blockify(pm_table_poly(f), (1, 1, 1, 1), [[0, 1], [2, 3]])
        assert fp.coeffs == {3: Fraction(1)}
        assert real_sensitivity_at(fp, (1, 1)) == 2

    def test_matches_table_reevaluation(self):
        rng = np.random.default_rng(31)
        f = random_total(rng, 5)
        p = pm_table_poly(f)
        x = (1, -1, -1, 1, 1)
        part = [[0, 3], [1], [2, 4]]
        fp = blockify(p, x, part)
        for yi in range(8):
            y = tuple(1 - 2 * ((yi >> j) & 1) for j in range(3))
            z = list(x)
            for j, b in enumerate(part):
                if y[j] == -1:
                    for i in b:
                        z[i] = -z[i]
            assert fp.evaluate(y) == p.evaluate(tuple(z))

    def test_singletons_are_relabeling(self):
        p = pm_table_poly(random_total(np.random.default_rng(32), 4))
        assert blockify(p, (1, 1, 1, 1), [[0], [1], [2], [3]]) == p

    def test_whole_set_block(self):
        p = pm_table_poly(random_total(np.random.default_rng(33), 3))
        x = (1, -1, 1)
        fp = blockify(p, x, [[0, 1, 2]])
        assert fp.evaluate((1,)) == p.evaluate(x)
        assert fp.evaluate((-1,)) == p.evaluate((-1, 1, -1))

    @pytest.mark.parametrize("part", [[[0, 1], [1, 2]], [[0], [1]], [[0, 1, 2], []], [[0, 1, 5]]])
    def test_bad_partitions(self, part):
        p = MultilinearPoly(3, Basis.PLUS_MINUS, {1: 1})
        with pytest.raises(UsageError):
            blockify(p, (1, 1, 1), part)

    def test_chain_on_random_functions(self):
        rng = np.random.default_rng(34)
        for _ in range(100):
            n = int(rng.integers(1, 7))
            f = random_total(rng, n)
            x = tuple(int(b) for b in rng.integers(0, 2, n))
            chain = blockify_chain(f, x)
            assert chain.bs == block_sensitivity(f, x)
            assert chain.holds


class TestWeightWitness:
    def test_or2(self):
        w = fbsdeg_witness(or_fn(2))
        assert w.weights[(0, 0)] == (1, 1)
        assert w.totals()[(0, 0)] == 2 <= PI_SQ_OVER_4_LOWER * 4

    def test_constant(self):
        w = fbsdeg_witness(PartialFn.constant(3, 1))
        assert all(all(c == 0 for c in ws) for ws in w.weights.values())

    def test_xor3(self):
        w = fbsdeg_witness(xor_fn(3))
        assert set(w.totals().values()) == {3}
        assert w.degree == 3

    def test_partial_rejected(self):
        with pytest.raises(UsageError):
            fbsdeg_witness(PartialFn(1, [0, 1], [1, 0]))

    @pytest.mark.parametrize("n", [2, 3])
    def test_exhaustive_fbs_vs_degree(self, n):
        for code in range(1 << (1 << n)):
            f = PartialFn(n, [(code >> i) & 1 for i in range(1 << n)])
            assert fbs_all(f) <= PI_SQ_OVER_4_LOWER * degree(f) ** 2
