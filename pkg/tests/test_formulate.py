import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

from robjam.bands import make_bands
from robjam.formulate import (big_m_njp, big_m_spap, build_njp, build_sep, build_spap,
                              plan_vector)
from robjam.instgen import random_jamming_instance
from robjam.milp import STATUS_OPTIMAL, bb_solve
from robjam.model import BINARY, GE, LE
from robjam.netmodel import (JammingPlan, NetworkInstance, db_to_linear, is_jammed,
                             jam_powers)
from robjam.robust import adversary_max


def toy_network(seed, n_tps=4, n_trxs=2):
    rng = np.random.default_rng(seed)
    fading = db_to_linear(rng.uniform(-110.0, -60.0, size=(n_tps, n_trxs)))
    return NetworkInstance.from_linear(fading, noise=db_to_linear(-114.0),
                                       sir_threshold=db_to_linear(10.0),
                                       p_trx_max=db_to_linear(30.0),
                                       revenues=rng.uniform(0.5, 2.0, n_tps))


def powers_exist(net, server):
    """LP feasibility of the SIR rows of every served TP (scipy, independent)."""
    rows, rhs = [], []
    for t, s in enumerate(server):
        if s < 0:
            continue
        a = -net.sir_threshold * net.fading[t]
        a[s] = net.fading[t, s]
        # rows scaled to unit right-hand side: raw gains are ~1e-10
        scale = net.sir_threshold * net.noise
        rows.append(-a / scale)
        rhs.append(-1.0)
    if not rows:
        return True
    res = linprog(np.zeros(net.n_trxs), A_ub=np.array(rows), b_ub=np.array(rhs),
                  bounds=[(0, net.p_trx_max)] * net.n_trxs, method="highs",
                  options={"primal_feasibility_tolerance": 1e-9})
    return res.status == 0


def spap_brute_force(net):
    best = 0.0
    for server in itertools.product(range(-1, net.n_trxs), repeat=net.n_tps):
        value = sum(net.revenues[t] for t, s in enumerate(server) if s >= 0)
        if value > best and powers_exist(net, server):
            best = value
    return best


def njp_brute_force(ji):
    best = 0.0
    for combo in itertools.product(range(-1, ji.n_typologies), repeat=ji.n_jammers):
        y = {j: m for j, m in enumerate(combo) if m >= 0}
        if ji.plan_cost(y) > ji.budget:
            continue
        value = sum(ji.profits[t] for t in range(ji.n_tps)
                    if is_jammed(t, y, ji.nominal_balances[t], ji))
        best = max(best, value)
    return best


def interval_min(model, row, fixed):
    """Smallest activity of ``row`` over the variable box with ``fixed`` values."""
    total = 0.0
    for i, a in row.coefs:
        if i in fixed:
            total += a * fixed[i]
        else:
            v = model.variables[i]
            total += a * (v.lb if a > 0 else v.ub)
    return total


# SPAP ----------------------------------------------------------------------

def test_spap_single_tp_servable():
    net = NetworkInstance.from_linear([[1.0]], noise=1.0, sir_threshold=2.0, p_trx_max=5.0,
                                      revenues=[3.0])
    sol = bb_solve(build_spap(net))
    assert sol.objective == pytest.approx(3.0)


def test_spap_single_tp_unservable():
    net = NetworkInstance.from_linear([[0.1]], noise=1.0, sir_threshold=2.0, p_trx_max=5.0)
    for prune in (True, False):
        sol = bb_solve(build_spap(net, prune=prune))
        assert sol.objective == pytest.approx(0.0)


@pytest.mark.parametrize("seed", range(6))
def test_spap_matches_enumeration(seed):
    net = toy_network(seed)
    sol = bb_solve(build_spap(net, prune=False))
    assert sol.status == STATUS_OPTIMAL
    assert sol.objective == pytest.approx(spap_brute_force(net), rel=1e-9)


def test_big_m_spap_values():
    net = NetworkInstance.from_linear([[0.3]], noise=1.0, sir_threshold=1.0, p_trx_max=2.0)
    assert big_m_spap(0, 0, net) == pytest.approx(1.0)
    net = NetworkInstance.from_linear([[0.3, 0.5, 0.5]], noise=1.0, sir_threshold=1.0,
                                      p_trx_max=2.0)
    assert big_m_spap(0, 0, net) == pytest.approx(3.0)


@pytest.mark.parametrize("seed", range(4))
def test_spap_deactivation_sound(seed):
    net = toy_network(seed)
    model = build_spap(net, prune=False)
    for row in model.rows:
        if not row.name.startswith("sir"):
            continue
        ind = next(i for i, _ in row.coefs if model.variables[i].kind == BINARY)
        assert interval_min(model, row, {ind: 0.0}) >= row.rhs - 1e-12


def test_spap_rows_reproduce_domain_check():
    net = toy_network(1)
    model = build_spap(net, prune=False)
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = rng.uniform(0, net.p_trx_max, net.n_trxs)
        for t in range(net.n_tps):
            for s in range(net.n_trxs):
                row = next(r for r in model.rows if r.name == f"sir[{t},{s}]")
                x = np.zeros(model.n_vars)
                x[:net.n_trxs] = p
                x[model.by_tag("x", t, s)] = 1.0
                bal = (net.fading[t, s] * p[s]
                       - net.sir_threshold * (net.fading[t] @ p - net.fading[t, s] * p[s])
                       - net.sir_threshold * net.noise)
                assert row.slack(x) == pytest.approx(bal, abs=1e-9 * max(1.0, abs(bal)))


# NJP -----------------------------------------------------------------------

def test_njp_single_tp(single_tp):
    model = build_njp(single_tp.ji)
    sol = bb_solve(model)
    assert sol.objective == pytest.approx(1.0)
    assert sol.x[model.by_tag("z", 0)] == pytest.approx(1.0)
    assert sol.x[model.by_tag("y", 0, 0)] + sol.x[model.by_tag("y", 0, 1)] == pytest.approx(1.0)


def test_njp_empty_budget(single_tp):
    sol = bb_solve(build_njp(single_tp.ji.with_budget(0.5)))
    assert sol.objective == pytest.approx(0.0)


@pytest.mark.parametrize("seed", range(8))
def test_njp_matches_enumeration(seed):
    ji = random_jamming_instance(seed, 4, 3, 2)
    sol = bb_solve(build_njp(ji))
    assert sol.objective == pytest.approx(njp_brute_force(ji), rel=1e-9, abs=1e-12)


def test_big_m_njp_values():
    ji = random_jamming_instance(0, 1, 1, 1)
    ji = type(ji)(tp_ids=[0], jammer_xy=ji.jammer_xy, costs=ji.costs,
                  typology_powers=ji.typology_powers, jam_fading=ji.jam_fading,
                  budget=ji.budget, profits=[1.0], nominal_balances=[1e-5], epsilon=1e-8,
                  sir_threshold=ji.sir_threshold, noise=ji.noise)
    assert big_m_njp(0, ji) == pytest.approx(1.001e-5, rel=1e-12)
    mb = make_bands([1e-5], 0.2)
    assert big_m_njp(0, ji, mb) == pytest.approx(1e-5 + mb.worst_positive[0] + 1e-8)


@pytest.mark.parametrize("seed", range(4))
def test_njp_deactivation_sound(seed):
    ji = random_jamming_instance(seed, 5, 3, 2)
    mb = make_bands(ji.nominal_balances, 0.2)
    for model in (build_njp(ji), build_njp(ji, mb)):
        for t in range(ji.n_tps):
            row = next(r for r in model.rows if r.name == f"jam[{t}]")
            assert interval_min(model, row, {model.by_tag("z", t): 0.0}) >= row.rhs - 1e-15


@pytest.mark.parametrize("seed", range(4))
def test_njp_rows_reproduce_is_jammed(seed):
    ji = random_jamming_instance(seed, 4, 3, 2)
    model = build_njp(ji)
    for combo in itertools.product(range(-1, 2), repeat=3):
        y = {j: m for j, m in enumerate(combo) if m >= 0}
        x = plan_vector(model, JammingPlan(np.ones(ji.n_tps), y), ji)
        for t in range(ji.n_tps):
            row = next(r for r in model.rows if r.name == f"jam[{t}]")
            assert (row.slack(x) >= 0) == is_jammed(t, y, ji.nominal_balances[t], ji)


# SEP -----------------------------------------------------------------------

def test_sep_single_tp_denies_j1(single_tp):
    ji, mb = single_tp.ji, single_tp.bands
    plan = JammingPlan([1], {0: 0})
    model = build_sep(plan, ji, mb)
    sol = bb_solve(model)
    assert sol.objective == pytest.approx(1.0)
    k = next(k for k in mb.bands if sol.x[model.by_tag("w", 0, k)] > 0.5)
    # any positive band at or beyond the denying edge is an optimal choice
    assert k > 0
    jam = jam_powers(plan.y, ji)[0]
    assert jam < ji.nominal_balances[0] + mb.thresholds[0, mb.col(k)] + ji.epsilon


def test_sep_closed_bands_give_zero(single_tp):
    ji = random_jamming_instance(3, 5, 3, 2).with_budget(1e9)
    mb = make_bands(ji.nominal_balances, 0.2)
    closed = mb.with_bounds(upper=np.where(np.arange(mb.n_bands) == mb.zero_column,
                                           ji.n_tps, 0))
    plan = JammingPlan(np.ones(ji.n_tps), {j: 1 for j in range(ji.n_jammers)})
    plan = JammingPlan((jam_powers(plan.y, ji) >= ji.nominal_balances + ji.epsilon), plan.y)
    assert bb_solve(build_sep(plan, ji, closed)).objective == pytest.approx(0.0)


@pytest.mark.parametrize("seed", range(10))
def test_sep_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    ji = random_jamming_instance(100 + seed, 5, 4, 2).with_budget(1e9)
    y = {j: int(rng.integers(0, 2)) for j in range(ji.n_jammers)}
    z = jam_powers(y, ji) >= ji.nominal_balances + ji.epsilon
    plan = JammingPlan(z, y)
    mb = make_bands(ji.nominal_balances, 0.2, -1, 1)
    d = plan.n_jammed
    mb = mb.with_bounds(upper=[1, max(d, 1), 1])
    if d == 0:
        return
    sol = bb_solve(build_sep(plan, ji, mb))
    V, _, _ = adversary_max(plan, ji, mb)
    assert round(sol.objective) == V


def test_sep_deactivation_sound():
    ji = random_jamming_instance(5, 5, 3, 2).with_budget(1e9)
    mb = make_bands(ji.nominal_balances, 0.2)
    y = {j: 1 for j in range(ji.n_jammers)}
    plan = JammingPlan(jam_powers(y, ji) >= ji.nominal_balances + ji.epsilon, y)
    model = build_sep(plan, ji, mb)
    for t in plan.claimed:
        row = next(r for r in model.rows if r.name == f"deny[{t}]")
        for k in [None, *mb.bands]:
            x = np.zeros(model.n_vars)
            if k is not None:
                x[model.by_tag("w", int(t), k)] = 1.0
            assert row.slack(x) >= -1e-15


def test_sep_rejects_infeasible_incumbent(single_tp):
    with pytest.raises(ValueError):
        build_sep(JammingPlan([1], {}), single_tp.ji, single_tp.bands)
