import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ddpmine.analyst import (
    AnalystConfig,
    CandidatePool,
    CandidateProfile,
    FilterDecision,
    OwnerExhausted,
    ReuseState,
    Strategy,
    bound_decision,
    bound_term,
    filter_candidate,
    filter_pool,
    geometric_term,
    grow_candidates,
    pad_candidates,
    plan_assignments,
    sampling_term,
    settle,
    update_profiles,
)
from ddpmine.patterns import Pattern, PatternUniverse
from ddpmine.privacy import NoiseParams
from oracles import bound_terms_decimal

A = FilterDecision.ACCEPT
R = FilterDecision.REJECT
H = FilterDecision.HOLD


def cfg(f=0.1, tau=None, P=1000, K=50, eps=2.0, strategy="vanilla"):
    return AnalystConfig(NoiseParams(eps, K, P), f, tau=tau, strategy=strategy)


def s(*els):
    return Pattern.of("itemset", els)


# -- config -----------------------------------------------------------------


def test_config_defaults_and_validation():
    c = cfg()
    assert c.tau == 20 * c.P
    assert c.eta_g == c.eta_s == 0.01
    assert c.strategy is Strategy.VANILLA
    with pytest.raises(ValueError):
        cfg(tau=999)
    with pytest.raises(ValueError):
        cfg(f=0.0)
    with pytest.raises(ValueError):
        cfg(f=1.0)
    with pytest.raises(ValueError):
        AnalystConfig(NoiseParams(1, 1, 1), 0.5, eta_g=1.0)
    with pytest.raises(ValueError):
        cfg(strategy="greedy")


# -- bounds -----------------------------------------------------------------


def test_bound_terms_frozen_values():
    c = cfg()
    geo, samp = bound_terms_decimal(2, 50, 1000, 1, 0.01, 1000, 0.01)
    assert geometric_term(1, c) == pytest.approx(float(geo), rel=1e-12)
    assert sampling_term(1000, 0.01) == pytest.approx(float(samp), rel=1e-12)
    # frozen 4 s.f. values
    assert f"{geometric_term(1, c):.4g}" == "0.25"
    assert round(geometric_term(1, c), 4) == 0.2500
    assert f"{sampling_term(1000, 0.01):.4g}" == "0.04799"


def test_bound_scaling():
    c = cfg()
    assert geometric_term(4, c) == pytest.approx(geometric_term(1, c) / 2)
    assert sampling_term(4000, 0.01) == pytest.approx(sampling_term(1000, 0.01) / 2)


def test_bound_term_needs_responses():
    with pytest.raises(ValueError):
        bound_term(CandidateProfile(0, 0, 0), cfg())


def test_bound_keeps_denominator_factor():
    # 2a / (2 (1-a)^2 P^2 m eta) simplifies to a / ((1-a)^2 P^2 m eta)
    c = cfg()
    a = c.noise.alpha
    assert geometric_term(3, c) == pytest.approx(math.sqrt(a / ((1 - a) ** 2 * 1000**2 * 3 * 0.01)))


def test_filter_examples():
    c = cfg(f=0.10)
    assert filter_candidate(CandidateProfile(400, 1000, 1), c) is A
    assert filter_candidate(CandidateProfile(0, 1000, 1), cfg(f=0.40)) is R
    forced = cfg(f=0.05, tau=5000)
    prof = CandidateProfile(350, 5000, 5)
    assert bound_decision(prof, forced) is H
    assert filter_candidate(prof, forced) is A
    assert filter_candidate(CandidateProfile(200, 5000, 5), forced) is R
    assert filter_candidate(CandidateProfile(350, 4000, 4), forced) is H


def test_filter_tau_boundary_ratio_equal_f_accepts():
    forced = cfg(f=0.05, tau=5000)
    assert filter_candidate(CandidateProfile(250, 5000, 5), forced) is A


def test_bounds_checked_before_tau():
    c = cfg(f=0.05, tau=1000)
    assert filter_candidate(CandidateProfile(900, 1000, 1), c) is A
    assert filter_candidate(CandidateProfile(-500, 1000, 1), c) is R


@given(st.integers(-5000, 30000), st.integers(1, 30), st.floats(0.01, 0.99))
def test_filter_depends_only_on_profile(r, m, f):
    c = cfg(f=f, tau=10_000)
    prof = CandidateProfile(r, 1000 * m, m)
    d = filter_candidate(prof, c)
    assert d == filter_candidate(CandidateProfile(r, 1000 * m, m), c)
    if prof.n >= c.tau:
        assert d is not H


# -- pool operations --------------------------------------------------------


def test_update_profiles_accumulates():
    pool = CandidatePool(live={s(1): CandidateProfile(), s(2): CandidateProfile()})
    update_profiles(pool, [812, -3], [s(1), s(2)], 1000)
    assert pool.live[s(1)] == CandidateProfile(812, 1000, 1)
    update_profiles(pool, [790, 0], [s(1), s(2)], 1000)
    assert pool.live[s(1)] == CandidateProfile(1602, 2000, 2)
    assert pool.live[s(2)].ratio < 0
    with pytest.raises(IndexError):
        update_profiles(pool, [1], [s(1), s(2)], 1000)


def test_filter_pool_skips_unanswered():
    pool = CandidatePool(live={s(1): CandidateProfile(), s(2): CandidateProfile(900, 1000, 1)})
    out = filter_pool(pool, cfg())
    assert out == {s(2): A}
    assert s(1) in pool.live and s(2) in pool.accepted
    pool.check()


def test_grow_candidates_examples():
    u = PatternUniverse(5, "itemset")
    pool = CandidatePool(accepted={s(1), s(2), s(3), s(1, 2), s(1, 3)}, live={s(2, 3): CandidateProfile()})
    assert grow_candidates(pool, u) == []  # nothing new unlocked
    del pool.live[s(2, 3)]
    pool.accepted.add(s(2, 3))
    assert grow_candidates(pool, u) == [s(1, 2, 3)]
    assert pool.live[s(1, 2, 3)] == CandidateProfile()
    pool2 = CandidatePool(accepted={s(1), s(2)}, rejected={s(1, 2)})
    assert grow_candidates(pool2, u) == []


def test_pad_example_hand_trace():
    u = PatternUniverse(5, "itemset")
    pool = CandidatePool(
        live={
            s(1, 2): CandidateProfile(900, 1000, 1),
            s(1, 3): CandidateProfile(800, 1000, 1),
            s(2, 3): CandidateProfile(700, 1000, 1),
        },
        accepted={s(1), s(2), s(3)},
        rejected={s(0), s(4)},
    )
    added = pad_candidates(pool, cfg(K=4, strategy="padding"), u)
    assert added == [s(1, 2, 3)]
    assert pool.padded == {s(1, 2, 3)}
    assert pool.round_candidates()[-1] == s(1, 2, 3)
    pool.check()


def test_pad_noop_cases():
    u = PatternUniverse(5, "itemset")
    live = {s(i): CandidateProfile() for i in range(5)}
    pool = CandidatePool(live=dict(live))
    assert pad_candidates(pool, cfg(K=5, strategy="padding"), u) == []
    pool = CandidatePool(live=dict(live))
    assert pad_candidates(pool, cfg(K=50, strategy="vanilla"), u) == []
    ui = PatternUniverse(5, "item")
    pool = CandidatePool.initial(ui)
    assert pad_candidates(pool, cfg(K=50, strategy="padding"), ui) == []


def test_pad_order_follows_ratio():
    u = PatternUniverse(4, "itemset")
    pool = CandidatePool(live={s(i): CandidateProfile(100 * (i + 1), 1000, 1) for i in range(4)})
    added = pad_candidates(pool, cfg(K=5, strategy="padding"), u)
    # item 3 has the highest ratio, then 2: first virtual pair is {2,3}
    assert added == [s(2, 3)]


def test_padding_promotion_keeps_profile_and_filters():
    u = PatternUniverse(5, "itemset")
    c = cfg(K=4, strategy="padding", f=0.1)
    pool = CandidatePool(
        live={
            s(1, 2): CandidateProfile(900, 1000, 1),
            s(1, 3): CandidateProfile(800, 1000, 1),
            s(2, 3): CandidateProfile(700, 1000, 1),
        },
        accepted={s(1), s(2), s(3)},
        rejected={s(0), s(4)},
    )
    pad_candidates(pool, c, u)
    cands = pool.round_candidates()
    update_profiles(pool, [900, 800, 700, 650], cands, 1000)
    decisions, _ = settle(pool, c, u)
    # the three pairs are accepted, which promotes {1,2,3}; it already holds
    # two rounds of answers and is filtered in the same settle call
    assert decisions[s(1, 2, 3)] is A
    assert s(1, 2, 3) in pool.accepted and not pool.padded
    pool.check()


def test_retired_padding_goes_to_shadow():
    u = PatternUniverse(4, "itemset")
    c = cfg(K=4, strategy="padding")
    pool = CandidatePool(
        live={s(1, 2): CandidateProfile(900, 1000, 1), s(1, 3): CandidateProfile(800, 1000, 1),
              s(2, 3): CandidateProfile(700, 1000, 1)},
        accepted={s(1), s(2), s(3)},
        rejected={s(0)},
    )
    assert pad_candidates(pool, c, u) == [s(1, 2, 3)]
    update_profiles(pool, [0, 0, 0, 1], pool.round_candidates(), 1000)
    # {1,3} turns out infrequent, so {1,2,3} can no longer be generated
    pool.live.pop(s(1, 3))
    pool.rejected.add(s(1, 3))
    assert pad_candidates(pool, c, u) == []
    assert s(1, 2, 3) not in pool.live
    assert pool.shadow[s(1, 2, 3)] == CandidateProfile(1, 1000, 1)
    pool.check()


# -- assignment planning ----------------------------------------------------


def _check_plan(plan, candidates, P, K):
    per_cand = {c: [] for c in candidates}
    for oid, a in plan.assignments:
        assert len(a) <= K
        for _, pat in a.entries:
            per_cand[pat].append(oid)
    for c, owners in per_cand.items():
        assert len(owners) == P
        assert len(set(owners)) == P


def test_plan_single_candidate():
    plan, _ = plan_assignments([s(1)], cfg(P=3), ReuseState(), itertools.count().__next__)
    assert plan.fresh == [0, 1, 2] and not plan.reused
    assert all(len(a) == 1 for _, a in plan.assignments)


def test_plan_exactly_k_candidates():
    cands = [s(i) for i in range(50)]
    plan, _ = plan_assignments(cands, cfg(P=20, K=50), ReuseState(), itertools.count().__next__)
    assert len(plan.fresh) == 20
    assert all(len(a) == 50 for _, a in plan.assignments)


@given(st.integers(1, 120), st.integers(1, 30), st.integers(1, 60))
def test_plan_packing_property(n, P, K):
    cands = [s(i) for i in range(n)]
    plan, _ = plan_assignments(cands, cfg(P=P, K=K), ReuseState(), itertools.count().__next__)
    _check_plan(plan, cands, P, K)
    assert len(plan.fresh) == max(P, math.ceil(n * P / K))


def test_reuse_scripted_two_rounds():
    c = cfg(P=100, K=50, strategy="reusing")
    supply = itertools.count().__next__
    round1 = [s(i) for i in range(10)]
    plan1, reuse = plan_assignments(round1, c, ReuseState(), supply)
    assert len(plan1.fresh) == 100
    assert all(v.remaining == 40 for v in reuse.saved.values())
    round2 = [s(20 + i) for i in range(5)]
    plan2, reuse = plan_assignments(round2, c, reuse, supply)
    assert plan2.fresh == [] and len(plan2.reused) == 100
    _check_plan(plan2, round2, 100, 50)


def test_reuse_never_repeats_a_candidate_and_respects_lifetime_budget():
    rng = np.random.default_rng(0)
    c = cfg(P=7, K=6, strategy="reusing")
    supply = itertools.count().__next__
    reuse = ReuseState()
    seen: dict[int, set] = {}
    live = [s(i) for i in range(4)]
    nxt = 100
    for _ in range(12):
        plan, reuse = plan_assignments(live, c, reuse, supply)
        _check_plan(plan, live, 7, 6)
        for oid, a in plan.assignments:
            got = seen.setdefault(oid, set())
            assert not got.intersection(a.patterns)
            got.update(a.patterns)
            assert len(got) <= 6
        assert all(0 < v.remaining <= 6 for v in reuse.saved.values())
        # drop some candidates and add new ones
        keep = [p for p in live if rng.random() < 0.5]
        live = keep + [s(nxt + k) for k in range(int(rng.integers(1, 4)))]
        nxt += 10


def test_vanilla_clears_saved_owners():
    reuse = ReuseState()
    plan_assignments([s(1)], cfg(P=2, strategy="reusing"), reuse, itertools.count().__next__)
    assert reuse.saved
    plan_assignments([s(2)], cfg(P=2), reuse, itertools.count(10).__next__)
    assert not reuse.saved


def test_plan_exhaustion_propagates():
    def capped():
        capped.n += 1
        if capped.n > 2:
            raise OwnerExhausted("cap")
        return capped.n

    capped.n = 0
    with pytest.raises(OwnerExhausted):
        plan_assignments([s(1)], cfg(P=3), ReuseState(), capped)
