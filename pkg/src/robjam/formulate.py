"""Builders turning domain objects into :class:`MilpModel` instances.

Three models are produced: the power/assignment design model (SPAP), the
0-1 jamming model (NJP) and the adversarial separation model (SEP).  Every
big-M is the tightest constant that still deactivates its row.
"""

from __future__ import annotations

import numpy as np

from .bands import CLAIMED, SERVED, MultibandSet
from .model import BINARY, CONTINUOUS, GE, LE, MAXIMIZE, MINIMIZE, MilpModel
from .netmodel import JammingInstance, JammingPlan, NetworkInstance, jam_powers

# slack making the denial inequality strict
SEP_TAU = 1e-12


# SPAP ----------------------------------------------------------------------

def big_m_spap(t: int, s: int, net: NetworkInstance) -> float:
    """``delta*N + delta * sum_{sigma != s} a_t,sigma * P_TRX``."""
    delta = net.sir_threshold
    row = net.fading[t]
    interf = row.sum() - row[s]
    return float(delta * net.noise + delta * interf * net.p_trx_max)


def servable_pairs(net: NetworkInstance) -> list[tuple[int, int]]:
    """(t, s) pairs whose SIR inequality can hold at all (``a_ts P_TRX >= delta N``)."""
    thr = net.sir_threshold * net.noise
    ok = net.fading * net.p_trx_max >= thr
    return [(int(t), int(s)) for t, s in zip(*np.nonzero(ok))]


def build_spap(net: NetworkInstance, prune: bool = True) -> MilpModel:
    """Revenue-maximising power and assignment model.

    With ``prune`` the assignment variables of pairs that cannot meet the SIR
    threshold even without interference are omitted (they are forced to 0).
    """
    model = MilpModel("SPAP", MAXIMIZE)
    delta = net.sir_threshold
    p = [model.add_var(f"p[{s}]", CONTINUOUS, 0.0, net.p_trx_max, tag=("p", s))
         for s in range(net.n_trxs)]
    pairs = servable_pairs(net) if prune else [
        (t, s) for t in range(net.n_tps) for s in range(net.n_trxs)]
    x = {}
    for t, s in pairs:
        x[t, s] = model.add_var(f"x[{t},{s}]", BINARY, tag=("x", t, s))
    model.set_objective({x[t, s]: float(net.revenues[t]) for t, s in pairs})
    for t, s in pairs:
        M = big_m_spap(t, s, net)
        coefs = {p[sig]: -delta * net.fading[t, sig] for sig in range(net.n_trxs) if sig != s}
        coefs[p[s]] = float(net.fading[t, s])
        coefs[x[t, s]] = -M
        model.add_row(coefs, GE, delta * net.noise - M, name=f"sir[{t},{s}]")
    by_tp: dict[int, list[int]] = {}
    for (t, s), i in x.items():
        by_tp.setdefault(t, []).append(i)
    for t, idx in sorted(by_tp.items()):
        model.add_row({i: 1.0 for i in idx}, LE, 1.0, name=f"gub[{t}]")
    return model


# NJP -----------------------------------------------------------------------

def big_m_njp(t: int, ji: JammingInstance, mb: MultibandSet | None = None) -> float:
    """Deactivation constant of the jamming row of served TP ``t``.

    Nominal: ``max(0, bal_t + eps)``; robust: ``max(0, bal_t + d_t^{K+} + eps)``.
    """
    rhs = ji.nominal_balances[t] + ji.epsilon
    if mb is not None:
        rhs += mb.worst_positive[t]
    return float(max(0.0, rhs))


def build_njp(ji: JammingInstance, mb: MultibandSet | None = None) -> MilpModel:
    """Profit-maximising 0-1 jamming model under the budget."""
    model = MilpModel("NJP", MAXIMIZE)
    z = [model.add_var(f"z[{t}]", BINARY, tag=("z", t)) for t in range(ji.n_tps)]
    y = {(j, m): model.add_var(f"y[{j},{m}]", BINARY, tag=("y", j, m))
         for j in range(ji.n_jammers) for m in range(ji.n_typologies)}
    model.set_objective({z[t]: float(ji.profits[t]) for t in range(ji.n_tps)})
    contrib = ji.contribution()
    for t in range(ji.n_tps):
        M = big_m_njp(t, ji, mb)
        coefs = {y[j, m]: float(contrib[t, j, m]) for (j, m) in y}
        coefs[z[t]] = -M
        model.add_row(coefs, GE, ji.nominal_balances[t] + ji.epsilon - M, name=f"jam[{t}]")
    model.add_row({y[j, m]: float(ji.costs[j, m]) for (j, m) in y}, LE, ji.budget,
                  name="budget")
    for j in range(ji.n_jammers):
        model.add_row({y[j, m]: 1.0 for m in range(ji.n_typologies)}, LE, 1.0,
                      name=f"gub[{j}]")
    return model


def plan_from_solution(model: MilpModel, x: np.ndarray, ji: JammingInstance) -> JammingPlan:
    z = np.array([x[model.by_tag("z", t)] for t in range(ji.n_tps)])
    y = {j: m for j in range(ji.n_jammers) for m in range(ji.n_typologies)
         if x[model.by_tag("y", j, m)] > 0.5}
    return JammingPlan(z, y)


def plan_vector(model: MilpModel, plan: JammingPlan, ji: JammingInstance) -> np.ndarray:
    x = np.zeros(model.n_vars)
    for t in range(ji.n_tps):
        x[model.by_tag("z", t)] = plan.z[t]
    for j, m in plan.y.items():
        x[model.by_tag("y", j, m)] = 1.0
    return x


# SEP -----------------------------------------------------------------------

def denial_rhs(plan: JammingPlan, ji: JammingInstance) -> np.ndarray:
    """``JAM_t - bal_t - eps + tau`` for every served TP."""
    return jam_powers(plan.y, ji) - ji.nominal_balances - ji.epsilon + SEP_TAU


def build_sep(plan: JammingPlan, ji: JammingInstance, mb: MultibandSet,
              scope: str = CLAIMED, strengthen: bool = True) -> MilpModel:
    """Adversary maximising the number of claimed TPs whose jamming it denies.

    Denial variables exist for the claimed TPs only.  Band variables cover the
    claimed TPs (``scope="claimed"``) or every served TP (``scope="served"``);
    the per-band cardinality rows count over that population, with lower
    bounds relaxed to the population size.

    With ``strengthen`` every claimed TP also gets the valid row
    ``v_t <= sum of w_t^k`` over the bands whose deviation alone denies ``t``.
    It leaves the integer optimum unchanged and makes the relaxation close to
    a bipartite matching, so most separations finish at the root.
    """
    if not plan.is_feasible(ji):
        raise ValueError("incumbent violates the nominal jamming model")
    if mb.n_tps != ji.n_tps:
        raise ValueError("band set and jamming instance disagree on |T'|")
    claimed = [int(t) for t in plan.claimed]
    if scope == CLAIMED:
        population = claimed
    elif scope == SERVED:
        population = list(range(ji.n_tps))
    else:
        raise ValueError(f"unknown SEP scope {scope!r}")

    model = MilpModel("SEP", MAXIMIZE)
    v = {t: model.add_var(f"v[{t}]", BINARY, tag=("v", t)) for t in claimed}
    w = {(t, k): model.add_var(f"w[{t},{k}]", BINARY, tag=("w", t, k))
         for t in population for k in mb.bands}
    model.set_objective({i: 1.0 for i in v.values()})

    rhs = denial_rhs(plan, ji)
    for t in claimed:
        d = mb.thresholds[t]
        M = max(0.0, rhs[t] - d[0])
        coefs = {w[t, k]: float(d[mb.col(k)]) for k in mb.bands}
        coefs[v[t]] = -M
        model.add_row(coefs, GE, rhs[t] - M, name=f"deny[{t}]")
    lower, upper = mb.scope_bounds(len(population))
    for k in mb.bands:
        idx = {w[t, k]: 1.0 for t in population}
        c = mb.col(k)
        if not idx:
            continue
        model.add_row(idx, LE, float(upper[c]), name=f"band_ub[{k}]")
        if lower[c] > 0:
            model.add_row(idx, GE, float(lower[c]), name=f"band_lb[{k}]")
    for t in population:
        model.add_row({w[t, k]: 1.0 for k in mb.bands}, LE, 1.0, name=f"one_band[{t}]")
    if strengthen:
        for t in claimed:
            d = mb.thresholds[t]
            coefs = {w[t, k]: -1.0 for k in mb.bands if k != 0 and d[mb.col(k)] >= rhs[t]}
            coefs[v[t]] = 1.0
            # no band at all (deviation 0) denies when the right-hand side is nonpositive
            model.add_row(coefs, LE, 1.0 if rhs[t] <= 0 else 0.0, name=f"link[{t}]")
    return model
