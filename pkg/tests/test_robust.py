import numpy as np
import pytest

from robjam.bands import bands_for, make_bands
from robjam.formulate import build_njp
from robjam.instgen import random_jamming_instance
from robjam.milp import bb_solve
from robjam.netmodel import JammingPlan, jam_powers
from robjam.robust import (LIFTED_CUT, BASIC_CUT, adversary_max, audit_robust, greedy_plan,
                           oracle_nominal, oracle_robust, price_of_robustness, robustness_cut,
                           separate, solve_nominal, solve_robust)


def nominal_plan(ji, y):
    return JammingPlan(jam_powers(y, ji) >= ji.nominal_balances + ji.epsilon, y)


# Single-TP example -----------------------------------------------------------------

def test_single_tp_nominal_picks_weak_device(single_tp):
    res = solve_nominal(single_tp.ji)
    assert res.plan.y == {0: 0} and res.n_jammed == 1


def test_single_tp_robust_picks_strong_device(single_tp):
    rep = solve_robust(single_tp.ji, single_tp.bands)
    assert rep.plan.y == {0: 1} and rep.n_jammed_robust == 1
    assert rep.cuts >= 1 and rep.audit.robust
    assert rep.por_percent == 0.0
    assert rep.plan.cost(single_tp.ji) > rep.nominal.plan.cost(single_tp.ji)


def test_single_tp_separation(single_tp):
    ji, mb = single_tp.ji, single_tp.bands
    res = separate(JammingPlan([1], {0: 0}), ji, mb)
    assert res.V == 1 and res.denied == (0,)
    model = build_njp(ji, mb)
    cut = robustness_cut(res, JammingPlan([1], {0: 0}), ji, model, BASIC_CUT)
    assert dict(cut.coefs) == {model.by_tag("z", 0): 1.0} and cut.rhs == 0.0
    assert separate(JammingPlan([1], {0: 1}), ji, mb).V == 0


def test_single_tp_audit(single_tp):
    ji, mb = single_tp.ji, single_tp.bands
    verdict = audit_robust(JammingPlan([1], {0: 0}), ji, mb)
    assert not verdict.robust and verdict.witness == (0, mb.k_plus)
    assert audit_robust(JammingPlan([1], {0: 1}), ji, mb).robust
    assert audit_robust(JammingPlan([0], {}), ji, mb).robust


def test_single_tp_oracle(single_tp):
    value, plan = oracle_robust(single_tp.ji, single_tp.bands)
    assert value == 1.0 and plan.y == {0: 1}
    value, plan = oracle_robust(single_tp.ji.with_budget(0.5), single_tp.bands)
    assert value == 0.0 and plan.y == {}


def test_empty_claimed_set_is_robust(single_tp):
    assert separate(JammingPlan([0], {}), single_tp.ji, single_tp.bands).V == 0


# oracles and cutting planes ------------------------------------------------

@pytest.mark.parametrize("seed", range(12))
def test_robust_matches_oracle(seed):
    ji = random_jamming_instance(seed, 4, 3, 2)
    mb = make_bands(ji.nominal_balances, 0.2)
    nom = solve_nominal(ji)
    assert nom.objective == pytest.approx(oracle_nominal(ji)[0], abs=1e-12)
    rep = solve_robust(ji, mb, nominal=nom)
    assert rep.objective == pytest.approx(oracle_robust(ji, mb)[0], abs=1e-12)
    assert rep.objective <= nom.objective + 1e-12
    assert rep.audit.robust


def test_oracle_deterministic():
    ji = random_jamming_instance(11, 4, 3, 2)
    mb = make_bands(ji.nominal_balances, 0.2)
    a, b = oracle_robust(ji, mb), oracle_robust(ji, mb)
    assert a[0] == b[0] and a[1].y == b[1].y


def test_closed_bands_equal_nominal():
    ji = random_jamming_instance(4, 6, 4, 2)
    mb = bands_for(ji.nominal_balances, ji.epsilon, policy="nominal")
    nom = solve_nominal(ji)
    rep = solve_robust(ji, mb, nominal=nom)
    assert rep.cuts == 0
    assert rep.objective == pytest.approx(nom.objective)
    assert rep.n_jammed_robust == nom.n_jammed


@pytest.mark.parametrize("seed", range(15))
def test_separation_logs_match_adversary(seed):
    ji = random_jamming_instance(seed, 5, 4, 2)
    mb = make_bands(ji.nominal_balances, 0.2)
    rep = solve_robust(ji, mb)
    for it in rep.iterations:
        plan = JammingPlan(np.isin(np.arange(ji.n_tps), it["claimed"]), it["y"])
        V, _, _ = adversary_max(plan, ji, mb)
        assert it["V"] == V


@pytest.mark.parametrize("scheme", [BASIC_CUT, LIFTED_CUT])
@pytest.mark.parametrize("seed", range(10))
def test_cut_excludes_incumbent(seed, scheme):
    ji = random_jamming_instance(seed, 5, 4, 2)
    mb = make_bands(ji.nominal_balances, 0.2)
    model = build_njp(ji, mb)
    rng = np.random.default_rng(seed)
    for _ in range(10):
        y = {j: int(rng.integers(0, 2)) for j in range(ji.n_jammers) if rng.random() < 0.6}
        plan = nominal_plan(ji.with_budget(1e9), y)
        wide = ji.with_budget(1e9)
        res = separate(plan, wide, mb)
        if res.V == 0:
            continue
        cut = robustness_cut(res, plan, wide, model, scheme)
        x = np.zeros(model.n_vars)
        for t in plan.claimed:
            x[model.by_tag("z", int(t))] = 1.0
        for j, m in plan.y.items():
            x[model.by_tag("y", j, m)] = 1.0
        assert cut.slack(x) < 0
        # every denied TP really is denied by the reported bands
        jam = jam_powers(plan.y, wide)
        for t in res.denied:
            d = mb.thresholds[t, mb.col(res.bands.get(t, 0))]
            assert wide.nominal_balances[t] + d + wide.epsilon > jam[t]


def test_lifted_cut_keeps_upgrades(single_tp):
    ji, mb = single_tp.ji, single_tp.bands
    model = build_njp(ji, mb)
    res = separate(JammingPlan([1], {0: 0}), ji, mb)
    cut = robustness_cut(res, JammingPlan([1], {0: 0}), ji, model, LIFTED_CUT)
    x = np.zeros(model.n_vars)
    x[model.by_tag("z", 0)] = 1.0
    x[model.by_tag("y", 0, 1)] = 1.0
    assert cut.slack(x) >= 0


def test_cut_count_progress():
    ji = random_jamming_instance(2, 6, 4, 2)
    mb = make_bands(ji.nominal_balances, 0.2)
    rep = solve_robust(ji, mb)
    cut_names = [it["cut"] for it in rep.iterations if "cut" in it]
    assert len(cut_names) == rep.cuts


@pytest.mark.parametrize("seed", range(8))
def test_greedy_margin_plan_is_robust(seed):
    ji = random_jamming_instance(seed, 6, 4, 2)
    mb = make_bands(ji.nominal_balances, 0.2)
    plan = greedy_plan(ji, np.maximum(mb.worst_positive, 0.0))
    assert plan.is_feasible(ji)
    assert audit_robust(plan, ji, mb).robust


def test_audit_rejects_over_budget(single_tp):
    plan = JammingPlan([1], {0: 1})
    assert not audit_robust(plan, single_tp.ji.with_budget(1.0), single_tp.bands).robust


def test_price_of_robustness():
    assert price_of_robustness(10, 8) == pytest.approx(-20.0)
    assert price_of_robustness(0, 0) == 0.0


def test_oracle_size_guard():
    ji = random_jamming_instance(0, 9, 2, 1)
    with pytest.raises(ValueError):
        oracle_nominal(ji)
