import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from switchlab.boolfn import (
    STAR,
    BlockRestriction,
    Gate,
    PartialFn,
    UsageError,
    builtin,
    or_fn,
    project,
    xor_fn,
)
from switchlab.projections.bias import (
    CNF,
    BiasedProduct,
    ToyUnbiasedOr,
    bias,
    or_cnf_gap,
    or_restricted_table,
    projcnf_tail_mc,
    random_cnf,
    random_cnf_instance,
    unbiasedor_mc,
)
from switchlab.projections.params import (
    QcmaParams,
    qcma_params,
    qia_bound_check,
    sip_params,
    sipprime_params,
)
from switchlab.projections.restrictions import (
    InitParams,
    LayerParams,
    ParameterError,
    chain_completion,
    chain_expand,
    chain_target,
    chain_tv,
    completion_check_init,
    init_block_distribution,
    layer_block_distribution,
    projection_chain,
    qcma_layer,
    sample_r_init,
    sample_r_tau,
    sample_rho_qcma,
)
from switchlab.projections.sip import (
    MAX_SIP_INPUTS,
    SipFormula,
    build_sip,
    eval_sip,
    format_spec,
    parse_spec,
    read_spec,
    write_spec,
)
from switchlab.projections.typicality import (
    ToyTypicality,
    TypicalityWindow,
    is_typical,
    typicality_rate_mc,
)
from switchlab.seeding import rng_for

F = Fraction


# --- parameter calculus -------------------------------------------------------------


def _float_chain(m, d):
    """Independent double-precision re-derivation of w, q, lambda and the t chain."""
    w = math.floor(m * 2**m / math.log2(math.e))
    q = 2 ** (-m / 2)
    lam = math.log2(w) ** 1.5 / w**1.25
    t = {d - 1: (q * q - lam) / q}
    for k in range(d - 1, 1, -1):
        t[k - 1] = ((1 - t[k]) ** (q * w) - lam) / q
    return w, q, lam, t


def test_small_m_base_values():
    s = sip_params(4, 2)
    assert s.w == 44
    assert s.q == mpmath.mpf(1) / 4
    assert s.p == mpmath.mpf(1) / 16


@pytest.mark.parametrize("m,d", [(4, 2), (6, 2), (8, 2), (12, 2), (16, 3)])
def test_chain_matches_float_rederivation(m, d):
    s = sip_params(m, d)
    w, q, lam, t = _float_chain(m, d)
    assert s.w == w
    assert float(s.lam) == pytest.approx(lam, rel=1e-12)
    for k, v in t.items():
        assert float(s.t[k]) == pytest.approx(v, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("m,d", [(4, 2), (6, 2), (6, 3)])
def test_degenerate_regimes_are_reported(m, d):
    s = sip_params(m, d)
    assert not s.ok
    assert s.w0 is None and s.fanins is None
    assert any("outside (0, 1)" in v for v in s.violations)


def test_w0_is_minimal_by_direct_search():
    s = sip_params(8, 2)
    assert s.ok
    t1 = float(s.t[1])
    q = float(s.q)
    # The threshold crossing sits near 4.3e4; scan a window around it in floats.
    crossing = next(i for i in range(40000, 50000) if (1 - t1) ** (q * i) <= 0.5)
    assert s.w0 == crossing
    assert s.fanins == (s.w0, 8)
    assert s.n == s.w0 * 8


def test_beta_values():
    s = sip_params(8, 2)
    assert s.beta(1) == mpmath.mpf(1) / 3
    assert s.beta(0) == mpmath.mpf(1) / 3 + mpmath.mpf(1) / 24


def test_sipprime_solves_its_defining_equation():
    sp = sipprime_params(8, 2)
    assert sp.ok
    with mpmath.workprec(200):
        lhs = sp.N ** (mpmath.mpf(2) / 7)
        rhs = sp.base.q * sp.base.w0 * mpmath.log(1 / sp.p1, 2)
        assert abs(lhs - rhs) < mpmath.mpf(10) ** -30 * lhs
        assert sp.qprime == sp.N ** (-mpmath.mpf(5) / 7)
        assert abs(sp.p1 - (sp.x + sp.qprime * sp.base.t[1])) < mpmath.mpf(10) ** -40
        assert abs(sp.w_last + mpmath.log(sp.p1, 2)) < mpmath.mpf(10) ** -40


def test_sipprime_product_matches_n_at_depth_three():
    sp = sipprime_params(16, 3)
    assert sp.ok, sp.violations
    prod = mpmath.mpf(1)
    for f in sp.fanins:
        prod *= f
    assert abs(prod / sp.N - 1) < mpmath.mpf(10) ** -30


def test_sipprime_inherits_degeneracy():
    sp = sipprime_params(4, 2)
    assert sp.N is None and not sp.ok


@pytest.mark.parametrize("m,d", [(4, 2), (6, 2), (6, 3), (8, 2)])
def test_qcma_chain_leaves_unit_interval_at_small_m(m, d):
    qc = qcma_params(m, d)
    assert not qc.ok
    assert any(k in qc.t and not 0 < qc.t[k] < 1 for k in range(1, 2 * d + 2))


def test_qcma_beta_below_five_twelfths():
    for d in range(1, 8):
        qc = QcmaParams(8, d, 1, 1, 1, 1, {}, None, {}, {}, {}, {})
        for k in range(1, 2 * d + 2):
            assert qc.beta(k) < mpmath.mpf(5) / 12


def _toy_qcma(w=64, q=F(1, 8), t=0.01, t_lo=0.1, q1=0.01):
    """Hand-built two-level parameters whose probabilities are all inside (0, 1)."""
    with mpmath.workprec(200):
        qm = mpmath.mpf(q.numerator) / q.denominator
        lam1 = q1 / (qm * mpmath.mpf(w) ** mpmath.mpf(1.25))
        ts = {1: mpmath.mpf(0.2), 2: mpmath.mpf(0.3), 3: mpmath.mpf(t_lo), 4: mpmath.mpf(t), 5: mpmath.mpf(0.05)}
        f1 = mpmath.log(lam1 + q1 * ts[3]) / (qm * mpmath.log(1 - ts[4]))
        return QcmaParams(
            m=6,
            d=2,
            w=w,
            q=qm,
            p=qm * qm,
            lam=mpmath.mpf(0.001),
            t=ts,
            w0=10,
            N_levels={1: mpmath.mpf(1e6), 2: mpmath.mpf(1e9)},
            q_levels={1: mpmath.mpf(q1), 2: mpmath.mpf(0.3)},
            lam_levels={1: lam1, 2: mpmath.mpf(0.1)},
            f_levels={1: f1, 2: mpmath.mpf(3)},
        )


def test_qia_center_is_exactly_q_i():
    qc = _toy_qcma()
    with mpmath.workprec(200):
        center = qc.q * qc.f_levels[1]
        res = qia_bound_check(qc, 1, [center])
        assert res.ok and not res.vacuous
        assert abs(res.values[0] - qc.q_levels[1]) < mpmath.mpf(10) ** -40


def test_qia_window_edges_and_vacuous_sizes():
    qc = _toy_qcma()
    with mpmath.workprec(200):
        center = qc.q * qc.f_levels[1]
        r = mpmath.mpf(qc.w) ** qc.beta(4)
    res = qia_bound_check(qc, 1, [center - r, center + r, center + 10 * r])
    assert res.ok
    assert res.vacuous == (2,)
    lo, hi = res.interval
    assert lo <= res.values[0] <= hi and lo <= res.values[1] <= hi


def test_qia_rejects_bad_level():
    with pytest.raises(UsageError):
        qia_bound_check(_toy_qcma(), 2, [1])


# --- formulas ---------------------------------------------------------------------------


def test_depth_two_examples():
    F2 = build_sip((2, 2))
    assert F2.top is Gate.OR and F2.gate(1) is Gate.AND
    assert eval_sip(F2, (1, 1, 0, 0)) == 1
    assert eval_sip(F2, (0, 0, 0, 0)) == 0


def test_depth_three_matches_composed_gates():
    F3 = build_sip((2, 2, 2))
    table = F3.to_partial_fn()
    for idx in range(256):
        x = [(idx >> i) & 1 for i in range(8)]
        ands = [x[2 * j] & x[2 * j + 1] for j in range(4)]
        ors = [ands[0] | ands[1], ands[2] | ands[3]]
        assert table.values[idx] == (ors[0] & ors[1])
        assert eval_sip(F3, x) == ors[0] & ors[1]


def test_partial_evaluation():
    F2 = build_sip((2, 2))
    assert F2.evaluate((1, STAR, 0, 0)) == STAR
    assert F2.evaluate((1, 1, STAR, 0)) == 1
    assert F2.evaluate((0, STAR, STAR, 0)) == 0
    layers = F2.layers((1, STAR, 1, 1))
    assert list(layers[1]) == [STAR, 1]


def test_or_bottom_is_the_dual():
    F2 = build_sip((2, 3), bottom="OR")
    g = F2.to_partial_fn()
    for idx in range(64):
        x = [(idx >> i) & 1 for i in range(6)]
        assert g.values[idx] == ((x[0] | x[1] | x[2]) & (x[3] | x[4] | x[5]))


def test_builtin_sip_uses_formula():
    assert builtin("SIP", fanins=(2, 2)) == build_sip((2, 2)).to_partial_fn()


def test_spec_file_round_trip(tmp_path):
    F3 = build_sip((3, 2, 2), bottom=Gate.OR)
    path = tmp_path / "f.sip"
    write_spec(F3, path)
    assert read_spec(path) == F3
    assert parse_spec("fanins=2,2\n") == build_sip((2, 2))
    assert format_spec(build_sip((2, 2))) == "d=2\nfanins=2,2\nbottom=AND\n"


@pytest.mark.parametrize(
    "text",
    ["d=3\nfanins=2,2\n", "fanins=2,x\n", "bottom=AND\n", "fanins=2\nbottom=XOR\n", "garbage\n", "fanins=0,2\n"],
)
def test_malformed_spec(text):
    with pytest.raises(UsageError):
        parse_spec(text)


def test_size_cap():
    with pytest.raises(UsageError):
        build_sip((MAX_SIP_INPUTS, 2))
    with pytest.raises(UsageError):
        build_sip((2, 11, 1 << 10)).to_partial_fn()


# --- bottom-layer restriction -------------------------------------------------------------


def test_block_length_one_star_branch_is_star():
    dist = init_block_distribution(InitParams(1, F(0), F(1)))
    assert {k: v for k, v in dist.items() if v} == {(STAR,): 1}


def test_x_one_gives_all_ones():
    rho = sample_r_init(InitParams(3, 1, 0), 50, rng_for(0, "x1"))
    assert all(b == (1, 1, 1) for b in rho.blocks)


def test_star_branch_frequencies_at_width_two():
    trials = 100_000
    rho = sample_r_init(InitParams(2, 0, 1), trials, rng_for(1, "w2"))
    counts = {}
    for b in rho.blocks:
        counts[b] = counts.get(b, 0) + 1
    assert set(counts) == {(STAR, 1), (1, STAR), (STAR, STAR)}
    se = math.sqrt(trials * (1 / 3) * (2 / 3))
    for c in counts.values():
        assert abs(c - trials / 3) <= 3 * se


def test_init_rejects_excess_mass():
    with pytest.raises(ParameterError):
        InitParams(2, F(3, 4), F(1, 2))


# --- completion -------------------------------------------------------------------------------


def test_completion_small_example():
    rep = completion_check_init(1, F(3, 10), F(1, 2), F(2, 5))
    assert rep.tv == 0 and rep.residual == 0


def _valid_triples(w):
    out = []
    for qp in (F(1, 4), F(1, 2), F(3, 4)):
        for t in (F(1, 10), F(1, 5), F(1, 3)):
            x = F(1, 2**w) - qp * t
            if x >= 0 and x + qp <= 1:
                out.append((x, qp, t))
    return out


@pytest.mark.parametrize("w", [1, 2, 3, 4])
def test_completion_exact_for_valid_triples(w):
    triples = _valid_triples(w)
    assert triples
    for x, qp, t in triples:
        assert completion_check_init(w, x, qp, t).tv == 0


def test_completion_invalid_triple_reports_distance():
    rep = completion_check_init(2, F(1, 16), F(1, 2), F(1, 8))
    assert rep.residual == F(-1, 8)
    assert rep.tv > 0


@settings(max_examples=60, deadline=None)
@given(
    w=st.integers(1, 3),
    qp=st.fractions(min_value=0, max_value=1, max_denominator=20),
    t=st.fractions(min_value=0, max_value=1, max_denominator=20),
)
def test_completion_distance_vanishes_iff_identity_holds(w, qp, t):
    x = F(1, 2**w) - qp * t
    assume(x >= 0 and x + qp <= 1)
    assert completion_check_init(w, x, qp, t).tv == 0
    # Any other x with the same q', t gives a nonzero distance.
    x2 = x / 2 if x else F(1, 2**w + 1)
    assume(x2 + qp <= 1)
    assert completion_check_init(w, x2, qp, t).tv > 0


# --- layer restriction -----------------------------------------------------------------------


TOY = LayerParams(Gate.AND, F(1, 2), F(1, 2), F(1, 8))


def test_q_a_toy_value():
    assert TOY.q_a(2) == F(1, 4)


def test_forced_block_is_copied():
    tau = BlockRestriction.parse("11|*1")
    rho = sample_r_tau(tau, TOY, rng_for(0, "copy"))
    assert rho.blocks[0] == (1, 1)


def test_zero_block_without_stars_is_fully_fixed():
    tau = BlockRestriction.parse("01|1*")
    dist = layer_block_distribution(tau.blocks[0], TOY)
    assert dist == {(0, 1): 1}
    rho = sample_r_tau(tau, TOY, rng_for(0, "zero"))
    assert STAR not in rho.blocks[0]


def test_out_of_window_uses_biased_coins():
    params = LayerParams(Gate.AND, F(1, 2), F(1, 2), F(1, 8), center=5, radius=1)
    dist = layer_block_distribution((STAR, STAR), params)
    assert dist == {(0, 0): F(1, 4), (0, 1): F(1, 4), (1, 0): F(1, 4), (1, 1): F(1, 4)}


def test_main_clause_distribution_sums_to_one():
    dist = layer_block_distribution((STAR, 1, STAR), TOY)
    assert sum(dist.values()) == 1
    assert dist[(1, 1, 1)] == F(1, 8)
    star_mass = sum(v for k, v in dist.items() if STAR in k)
    assert star_mass == F(1, 4)


def test_bad_q_a_names_the_block():
    params = LayerParams(Gate.AND, F(1, 2), F(1, 10), F(1, 16))
    with pytest.raises(ParameterError, match="block 1"):
        sample_r_tau(BlockRestriction.parse("11|*1"), params, rng_for(0, "bad"))


@pytest.mark.parametrize("gate", [Gate.AND, Gate.OR])
def test_clause_frequencies_match(gate):
    """Each outcome of the main clause within 3 standard errors at 1e5 draws."""
    params = LayerParams(gate, F(1, 2), F(1, 2), F(1, 8))
    block = (STAR, STAR)
    tau = BlockRestriction((block,) * 100_000)
    rho = sample_r_tau(tau, params, rng_for(2, "freq", gate.value))
    exact = layer_block_distribution(block, params)
    trials = tau.N
    counts = {}
    for b in rho.blocks:
        counts[b] = counts.get(b, 0) + 1
    assert set(counts) <= set(exact)
    for key, p in exact.items():
        p = float(p)
        se = math.sqrt(trials * p * (1 - p))
        assert abs(counts.get(key, 0) - trials * p) <= 3 * se


def test_or_layer_swaps_roles():
    params = LayerParams(Gate.OR, F(1, 2), F(1, 2), F(1, 8))
    dist = layer_block_distribution((STAR, STAR), params)
    assert dist[(0, 0)] == F(1, 8)
    assert all(1 not in k or STAR not in k for k in dist)


# --- chain completion -------------------------------------------------------------------------


OR_STAGE = LayerParams(Gate.OR, F(1, 2), F(1, 2), F(1, 16))
AND_STAGE = LayerParams(Gate.AND, F(1, 2), F(2, 3), F(1, 16))


@pytest.mark.parametrize("text", ["**|*0", "*1*|**0", "**1|*0*|***|0**", "**|**"])
def test_two_stage_chain_is_exact(text):
    tau = BlockRestriction.parse(text)
    assert chain_tv(tau, [(OR_STAGE, tau.l), (AND_STAGE, 2)]) == 0


def test_chain_with_window_fallback_is_exact():
    windowed = LayerParams(Gate.OR, F(1, 2), F(1, 2), F(1, 16), center=2, radius=0)
    tau = BlockRestriction.parse("**|*0")
    assert chain_tv(tau, [(windowed, 2), (AND_STAGE, 2)]) == 0


def test_chain_detects_mismatched_bias():
    wrong = LayerParams(Gate.AND, F(1, 3), F(2, 3), F(1, 16))
    assert chain_tv(BlockRestriction.parse("**|*0"), [(OR_STAGE, 2), (wrong, 2)]) > 0


@settings(max_examples=25, deadline=None)
@given(
    cells=st.lists(st.sampled_from([0, 1, STAR, STAR]), min_size=4, max_size=4),
    t_top=st.sampled_from([F(1, 3), F(1, 2), F(2, 3)]),
    t_mid=st.sampled_from([F(1, 2), F(3, 4)]),
    t_low=st.sampled_from([F(1, 2), F(2, 3)]),
    lam=st.sampled_from([F(1, 32), F(1, 16)]),
)
def test_chain_exact_on_random_strings(cells, t_top, t_mid, t_low, lam):
    tau = BlockRestriction.from_flat(cells, 2)
    top = LayerParams(Gate.OR, t_top, t_mid, lam)
    low = LayerParams(Gate.AND, t_mid, t_low, lam)
    try:
        dist = chain_completion(tau, [(top, 2), (low, 2)])
    except ParameterError:
        assume(False)
    assert dist == chain_target(tau, top)


# --- alternating-chain samplers -----------------------------------------------------------------


def test_bottom_level_all_ones_frequency():
    qc = _toy_qcma()
    trials = 100_000
    rho = sample_rho_qcma(qc, 2, 1, rng_for(3, "qd"), blocks=trials, block_len=3)
    hits = sum(1 for b in rho.blocks if b == (1, 1, 1))
    p = float(qc.lam_levels[2])
    assert abs(hits - trials * p) <= 3 * math.sqrt(trials * p * (1 - p))


def test_kind_two_copies_zero_blocks():
    qc = _toy_qcma()
    tau = BlockRestriction.parse("000|*0*")
    rho = sample_rho_qcma(qc, 1, 2, rng_for(0, "k2"), tau=tau)
    assert rho.blocks[0] == (0, 0, 0)


def test_kind_one_out_of_window_fixes_everything():
    qc = _toy_qcma()
    layer = qcma_layer(qc, 1, 1)
    assert layer.gate is Gate.AND
    tau = BlockRestriction.parse("***")
    assert not layer.in_window(3)
    rho = sample_rho_qcma(qc, 1, 1, rng_for(0, "k1"), tau=tau)
    assert STAR not in rho.blocks[0]


def test_real_parameters_refuse_layers():
    with pytest.raises(ParameterError):
        qcma_layer(qcma_params(8, 2), 1, 2)


# --- typicality ----------------------------------------------------------------------------------


FORM = SipFormula((2, 3, 4, 2))
WIN = TypicalityWindow(center=2, radius=0.5, lo2=1, hi2=3)


def _tau_with_star_counts(counts_per_gate):
    """Inputs of A_4 where OR gate a in A_2 sees the requested number of star AND gates."""
    cells = []
    for c in counts_per_gate:
        for j in range(4):
            cells.extend((STAR, 1) if j < c else (0, 1))
    return np.array(cells, dtype=np.uint8)


def test_full_assignment_is_not_typical():
    rep = is_typical(np.zeros(FORM.n, dtype=np.uint8), FORM, 4, WIN)
    assert not rep.typical
    assert rep.failed_condition == 1
    assert rep.cond1_failures[0] == (0, 0)


def test_constructed_typical_instance():
    rep = is_typical(_tau_with_star_counts([2] * 6), FORM, 4, WIN)
    assert rep.typical


def test_determined_gate_fails_second_condition():
    counts = [2] * 6
    tau = _tau_with_star_counts(counts)
    # Make all three OR gates under A_1 gate 1 evaluate to 1.
    for a in (3, 4, 5):
        base = a * 8
        tau[base : base + 2] = 1
    rep = is_typical(tau, FORM, 4, TypicalityWindow(center=2, radius=1, lo2=1, hi2=3))
    assert rep.cond2_failures == [(1, 0)]
    assert not rep.cond1_failures


def test_all_star_sampler_is_deterministic():
    form = SipFormula((1, 4, 2))
    ones = lambda rng: np.full(form.n, STAR, dtype=np.uint8)  # noqa: E731
    inside = typicality_rate_mc(form, 3, TypicalityWindow(4, 0, 0, 1), ones, 10, rng_for(0, "a"))
    outside = typicality_rate_mc(form, 3, TypicalityWindow(2, 1, 0, 1), ones, 10, rng_for(0, "a"))
    assert inside.failure_rate == 0 and outside.failure_rate == 1


def test_toy_family_reproducible_and_matches_binomial():
    toy = ToyTypicality(64)
    a = toy.rate_mc(4000, rng_for(5, "typ"))
    b = toy.rate_mc(4000, rng_for(5, "typ"))
    assert a == b
    exact = float(toy.exact_cond1_failure())
    assert abs(a.cond1_rate - exact) <= 3 * math.sqrt(exact * (1 - exact) / a.trials)


def test_toy_exact_binomial_window():
    toy = ToyTypicality(64)
    # Star count c passes iff |c - 8| <= 4.
    expected = sum(
        math.comb(64, c) * F(1, 8) ** c * F(7, 8) ** (64 - c) for c in range(65) if abs(c - 8) > 4
    )
    assert toy.exact_cond1_failure() == expected


# --- bias and the CNF gap ---------------------------------------------------------------------------


def test_constant_has_zero_bias():
    assert bias(PartialFn.constant(3, 1), BiasedProduct.uniform(3, F(1, 3))) == 0


def test_or2_bias_by_atoms():
    p = F(2, 7)
    D = BiasedProduct.uniform(2, p)
    atoms = {(a, b): (p if a else 1 - p) * (p if b else 1 - p) for a in (0, 1) for b in (0, 1)}
    p0 = atoms[(0, 0)]
    assert bias(or_fn(2), D) == min(p0, 1 - p0)


def test_or2_bias_at_irrational_point():
    p = 1 - 1 / math.sqrt(2)
    assert bias(or_fn(2), BiasedProduct.uniform(2, p)) == pytest.approx(0.5, abs=1e-12)


def test_formula_bias_agrees_with_table():
    F2 = build_sip((2, 3))
    D = BiasedProduct(tuple(F(i + 1, 9) for i in range(6)))
    assert bias(F2, D) == bias(F2.to_partial_fn(), D)


def test_or_restricted_table():
    assert (or_restricted_table((0, 1, STAR)) == 1).all()
    t = or_restricted_table((STAR, 0))
    assert list(t) == [0, 1, 0, 1]


def test_cnf_gap_hand_instance():
    cnf = CNF(2, (((0, 1), (1, 1)),))
    gap = or_cnf_gap((STAR, STAR), cnf, F(1, 3))
    assert gap.disagreement == 0
    assert gap.bias == F(4, 9)


def test_cnf_gap_over_random_instances():
    rng = rng_for(11, "cnf")
    for _ in range(100):
        tau, cnf, p = random_cnf_instance(rng)
        assert or_cnf_gap(tau, cnf, p, check=False).holds


def test_cnf_gap_failure_raises():
    with pytest.raises(UsageError):
        or_cnf_gap((STAR,), CNF(2, ()), F(1, 2))


# --- projection chains --------------------------------------------------------------------------------


def test_empty_chain_is_identity():
    f = xor_fn(3)
    assert projection_chain(f, []) == f


def test_single_all_star_merge():
    f = xor_fn(4)
    rho = BlockRestriction.parse("**|**")
    g = projection_chain(f, [rho])
    assert g == PartialFn(2, [0, 0, 0, 0])


def test_two_stage_xor_against_substitution():
    f = xor_fn(4)
    outer = BlockRestriction.parse("*1|**")
    inner = BlockRestriction.parse("*0")
    g = projection_chain(f, [inner, outer])
    for z in (0, 1):
        full = chain_expand([inner, outer], (z,))
        assert g.evaluate((z,)) == f.evaluate(full)


def test_chain_matches_expansion_exhaustively():
    rng = rng_for(4, "chain")
    for _ in range(20):
        f = PartialFn(12, rng.integers(0, 2, 1 << 12))
        r3 = BlockRestriction.from_flat(rng.choice([0, 1, STAR], size=12, p=[0.2, 0.2, 0.6]), 3)
        r2 = BlockRestriction.from_flat(rng.choice([0, 1, STAR], size=4, p=[0.2, 0.2, 0.6]), 2)
        g = projection_chain(f, [r2, r3])
        assert g == project(project(f, r3), r2)
        for z in itertools.product((0, 1), repeat=2):
            assert g.evaluate(z) == f.evaluate(chain_expand([r2, r3], z))


def test_chain_shape_error_names_stage():
    with pytest.raises(UsageError, match="stage 0"):
        projection_chain(xor_fn(4), [BlockRestriction.parse("***"), BlockRestriction.parse("**|**")])


# --- chain-level Monte Carlo ------------------------------------------------------------------------------


def test_unbiased_or_mc_matches_exact_mean():
    toy = ToyUnbiasedOr(16)
    est = unbiasedor_mc(toy, 4000, rng_for(6, "ub"))
    assert abs(est.mean - toy.exact_mean()) <= 4 * est.stderr


def test_unbiased_or_seed_determinism():
    toy = ToyUnbiasedOr(8)
    assert unbiasedor_mc(toy, 50, rng_for(1, "d")) == unbiasedor_mc(toy, 50, rng_for(1, "d"))


def test_unbiased_or_fully_fixed_has_zero_bias():
    toy = ToyUnbiasedOr(4)
    from switchlab.projections.bias import restricted_bias

    assert restricted_bias(SipFormula((4,), Gate.OR), np.array([0, 0, 1, 0], dtype=np.uint8), toy.t) == 0


def test_projcnf_tail_counts():
    rng = rng_for(8, "tail")
    cnf = random_cnf(12, 3, 6, rng)
    tau = BlockRestriction.parse("***|***|***|***")
    est = projcnf_tail_mc(cnf, tau, LayerParams(Gate.AND, F(1, 2), F(1, 2), F(1, 16)), 100, rng)
    assert sum(est.depth_counts.values()) == 100
    assert max(est.depth_counts) <= 4
    assert est.tail(-1).estimate == 1
