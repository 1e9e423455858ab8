import math

import numpy as np
import pytest

from conftest import random_confidence_set
from rldp.core import Alphabet, JointDistribution
from rldp.errors import DomainError
from rldp.infotheory import conditional_mutual_information, grr_mutual_information, mutual_information
from rldp.protocols import (
    Method,
    brute_force_utility,
    build_grr,
    build_grr_cr,
    build_ir,
    build_srr,
    build_ue_cr,
    deserialize_spec,
    grr,
    materialize,
    obfuscate_many,
    optimize_protocol,
    serialize_spec,
    srr,
    symmetric_ue,
    unary_encoding,
    utility,
)
from rldp.protocols.mechanisms import boosted_delta, grr_matrix, ue_ratio
from rldp.randstats import SeededRng, sample_jeffreys
from rldp.uncertainty import ConfidenceSet

LN3 = math.log(3.0)


# -- mechanisms ---------------------------------------------------------------


def test_grr_examples():
    assert np.allclose(grr(3, 0.0).matrix, 1 / 3)
    m = grr(2, LN3).matrix
    assert np.allclose(np.diag(m), 0.75) and np.allclose(m[0, 1], 0.25)
    m = grr(4, LN3).matrix
    assert np.allclose(np.diag(m), 0.5)
    assert np.allclose(m[~np.eye(4, dtype=bool)], 1 / 6)


def test_grr_is_exactly_eps_ldp():
    m = grr(5, 1.3).matrix
    assert m.max(axis=1) / m.min(axis=1) == pytest.approx(np.full(5, math.exp(1.3)), rel=1e-12)


def test_grr_rejects_bad_input():
    with pytest.raises(DomainError):
        grr(1, 1.0)
    with pytest.raises(DomainError):
        grr(3, -0.1)


def test_unary_encoding_examples():
    m = unary_encoding(2, 0.75, 0.25).matrix
    # T = {0} is bitmask 1; the first symbol is index 0
    assert m[1, 0] == pytest.approx(0.5625)
    assert np.allclose(m.sum(axis=0), 1.0)
    flat = unary_encoding(3, 0.4, 0.4).matrix
    assert np.allclose(flat, flat[:, :1])
    with pytest.raises(DomainError):
        unary_encoding(2, 0.2, 0.3)


def test_symmetric_ue_meets_ratio_with_equality():
    for eps in (0.3, 1.0, 4.0):
        kappa, lam = symmetric_ue(eps)
        assert kappa == pytest.approx(1 - lam)
        assert ue_ratio(kappa, lam) == pytest.approx(eps, rel=1e-12)


def test_srr_examples():
    al = Alphabet(2, 2)
    assert np.allclose(srr(al, 0.0).matrix, 0.25)
    m = srr(al, math.log(2.0)).matrix
    assert np.allclose(m[:, 0], [4 / 9, 1 / 9, 2 / 9, 2 / 9])
    assert np.allclose(m.sum(axis=0), 1.0)


def test_srr_cross_s_ratios_take_three_values():
    al = Alphabet(3, 2)
    eps = 0.7
    m = srr(al, eps).matrix
    allowed = np.array([math.exp(-eps), 1.0, math.exp(eps)])
    for x in range(al.a):
        for xp in range(al.a):
            if al.split(x)[0] == al.split(xp)[0]:
                continue
            r = m[:, x] / m[:, xp]
            assert np.all(np.min(np.abs(r[:, None] - allowed[None, :]), axis=1) < 1e-12)


def test_boosted_delta():
    assert boosted_delta(0.7, 2.0) == pytest.approx(0.7)
    assert boosted_delta(0.0, 0.5) == 0.0
    assert boosted_delta(0.3, 0.0) == math.inf
    assert boosted_delta(0.3, 0.5) > 0.3


# -- builders and utility -------------------------------------------------------


def test_ir_zero_eps2_leaves_only_s_term(conf3):
    spec = build_ir(conf3, 1.0, 0.0)
    assert spec.params["delta2"] == 0.0
    expect = grr_mutual_information(conf3.center.marginal_s, 1.0)
    assert utility(spec) == pytest.approx(expect, abs=1e-12)


def test_ir_with_exact_product_center():
    # B = 0 and identical conditionals: d = 0, so U is released in the clear
    P = JointDistribution.from_grid(np.outer([0.5, 0.5], [0.25, 0.75]))
    F = ConfidenceSet(P, 0.0)
    spec = build_ir(F, 1.0, 0.4)
    assert spec.params["d"] == 0.0 and spec.params["delta2"] == math.inf
    Q = spec.channel.matrix.reshape(2, 2, 2, 2)  # [y1, y2, s, u]
    assert np.allclose(Q.sum(axis=0), np.eye(2)[:, None, :])
    expect = grr_mutual_information(np.array([0.5, 0.5]), 0.6) + mutual_information(
        np.array([0.25, 0.75]), np.eye(2))
    assert utility(spec) == pytest.approx(expect, abs=1e-12)
    assert brute_force_utility(spec) == pytest.approx(expect, abs=1e-12)


def test_ir_independent_inputs_drop_conditioning():
    P = JointDistribution.from_grid(np.outer([0.2, 0.5, 0.3], [0.6, 0.4]))
    F = ConfidenceSet(P, 0.01)
    spec = build_ir(F, 2.0, 1.0)
    R1 = grr_matrix(3, spec.params["eps1"])
    R2 = grr_matrix(2, spec.params["delta2"])
    joint = np.einsum("zu,ys,su->zuy", R2, R1, P.grid)
    assert conditional_mutual_information(joint) == pytest.approx(
        mutual_information(P.marginal_u, R2), abs=1e-12)


def test_grr_cr_mixing_factor():
    F = ConfidenceSet(JointDistribution.from_grid([[0.1, 0.3], [0.2, 0.4]]), 0.01)
    spec = build_grr_cr(F, LN3 + 0.5, 0.5)
    Q = spec.channel.matrix.reshape(2, 2, 2, 2)  # [s~, y, s, u]
    for s in range(2):
        assert Q[s, :, s, :].sum(axis=0) == pytest.approx(np.full(2, 0.75))


def test_grr_cr_decoy_is_independent_of_input():
    F = random_confidence_set(3, 3, 500, SeededRng(11))
    Q = build_grr_cr(F, 2.0, 1.0).channel.matrix.reshape(3, 3, 3, 3)
    for st in range(3):
        others = [Q[st, :, s, u] / Q[st, :, s, u].sum() for s in range(3) if s != st for u in range(3)]
        assert np.allclose(others, others[0], atol=1e-15)


def test_grr_cr_zero_eps2(conf3):
    spec = build_grr_cr(conf3, 1.5, 0.0)
    assert utility(spec) == pytest.approx(grr_mutual_information(conf3.center.marginal_s, 1.5), abs=1e-12)


def test_all_utilities_vanish_at_eps_zero(conf3):
    for spec in (build_ir(conf3, 0.0, 0.0), build_grr_cr(conf3, 0.0, 0.0),
                 build_ue_cr(conf3, 0.0, 0.0, 0.5, 0.5)):
        assert abs(utility(spec)) < 1e-12


@pytest.mark.parametrize("seed", range(6))
def test_decompositions_match_brute_force(seed):
    rng = SeededRng(100 + seed)
    F = random_confidence_set(2 + seed % 2, 2 + seed // 3, 300, rng)
    eps = 0.5 + seed
    kappa, lam = symmetric_ue((eps - eps / 4) * 0.9)
    for spec in (build_ir(F, eps, eps / 3), build_grr_cr(F, eps, eps / 3),
                 build_ue_cr(F, eps, eps / 4, kappa, lam)):
        assert utility(spec) == pytest.approx(brute_force_utility(spec), abs=1e-9)


def test_ue_cr_flat_encoding_gives_only_conditional_term():
    F = random_confidence_set(2, 2, 400, SeededRng(5))
    spec = build_ue_cr(F, 1.0, 0.5, 0.4, 0.4)
    grid = F.center.grid
    cond = math.fsum(grid[s].sum() * grr_mutual_information(grid[s] / grid[s].sum(), d)
                     for s, d in enumerate(spec.params["deltas"]))
    assert utility(spec) == pytest.approx(0.4 * cond, abs=1e-12)
    assert brute_force_utility(spec) == pytest.approx(0.4 * cond, abs=1e-9)


def test_ue_cr_preconditions(conf3):
    with pytest.raises(DomainError):
        build_ue_cr(conf3, 1.0, 0.8, 0.6, 0.4)  # 2 eps2 > eps
    with pytest.raises(DomainError):
        build_ue_cr(conf3, 1.0, 0.2, 0.9, 0.1)  # ratio above eps1


def test_budget_checks(conf3):
    with pytest.raises(DomainError):
        build_ir(conf3, 1.0, 1.5)
    with pytest.raises(DomainError):
        build_grr_cr(conf3, 1.0, -0.2)


def test_rebuild_from_params_is_bit_exact(conf3):
    spec = build_grr_cr(conf3, 2.0, 0.7)
    again = build_grr_cr(conf3, spec.eps, spec.params["eps2"])
    assert np.array_equal(spec.channel.matrix, again.channel.matrix)
    ir = build_ir(conf3, 2.0, 0.7)
    assert ir.params["eps1"] + ir.params["eps2"] == 2.0


def test_spec_round_trip(conf3):
    for spec in (build_grr(conf3.alphabet, 1.0), build_srr(conf3.alphabet, 1.0),
                 build_ir(conf3, 1.0, 0.3), build_ue_cr(conf3, 1.0, 0.2, 0.55, 0.45)):
        text = serialize_spec(spec)
        back = deserialize_spec(text)
        assert back.method is spec.method
        assert np.array_equal(back.channel.matrix, spec.channel.matrix)
        assert serialize_spec(back) == text


def test_srr_beats_grr_at_high_eps():
    rng = SeededRng(77)
    al = Alphabet(3, 3)
    for _ in range(50):
        P = sample_jeffreys(al, rng)
        for eps in (5.0, 8.0):
            assert utility(build_srr(al, eps), P) >= utility(build_grr(al, eps), P) - 1e-12


# -- optimizer ----------------------------------------------------------------


def test_optimizer_eps_zero_picks_zero_split(conf3):
    for m in (Method.IR, Method.GRR_CR, Method.UE_CR):
        spec = optimize_protocol(conf3, m, 0.0)
        assert spec.params["eps2"] == 0.0
        assert abs(utility(spec)) < 1e-12


def test_optimizer_spends_all_on_u_at_small_eps():
    F = random_confidence_set(5, 5, 1000, SeededRng(2024))
    spec = optimize_protocol(F, Method.GRR_CR, 0.5)
    assert spec.params["eps2"] == pytest.approx(0.5, abs=1e-6)


def test_optimizer_dominates_grid(conf3):
    eps = 1.5
    for m, build in ((Method.IR, build_ir), (Method.GRR_CR, build_grr_cr)):
        best = utility(optimize_protocol(conf3, m, eps))
        for e2 in np.linspace(0, eps, 65):
            assert best >= utility(build(conf3, eps, float(e2))) - 1e-12
    best = utility(optimize_protocol(conf3, Method.UE_CR, eps))
    k, l = symmetric_ue(eps / 2)
    assert best >= utility(build_ue_cr(conf3, eps, eps / 2, k, l)) - 1e-12


def test_optimizer_rejects_fixed_methods(conf3):
    with pytest.raises(DomainError):
        optimize_protocol(conf3, "grr", 1.0)


# -- sampling -----------------------------------------------------------------


def _check_frequencies(spec, x, column, draws=100_000, seed=3):
    out = obfuscate_many(spec, np.full(draws, x), SeededRng(seed))
    freq = np.bincount(out, minlength=column.size) / draws
    se = np.sqrt(column * (1 - column) / draws)
    assert np.all(np.abs(freq - column) <= 4 * se + 1e-12)


def test_grr_sampler_frequency():
    spec = build_grr(Alphabet(2, 1), LN3)
    out = obfuscate_many(spec, np.zeros(100_000, dtype=int), SeededRng(1))
    assert abs(np.mean(out == 0) - 0.75) < 4 * math.sqrt(0.75 * 0.25 / 100_000)


def test_deterministic_channel_sampler():
    spec = build_grr(Alphabet(2, 2), 800.0)
    assert np.all(obfuscate_many(spec, np.full(50, 2), SeededRng(0)) == 2)


@pytest.mark.parametrize("method", ["ir", "grr-cr", "ue-cr"])
def test_generative_samplers_match_channel(method):
    F = random_confidence_set(2, 2, 300, SeededRng(9))
    spec = {"ir": lambda: build_ir(F, 1.5, 0.6),
            "grr-cr": lambda: build_grr_cr(F, 1.5, 0.6),
            "ue-cr": lambda: build_ue_cr(F, 1.5, 0.5, *symmetric_ue(1.0))}[method]()
    M = materialize(spec).matrix
    for x in range(4):
        _check_frequencies(spec, x, M[:, x], seed=x + 1)
