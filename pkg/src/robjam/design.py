"""Network design: solve the SPAP model and turn its solution into a design."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .formulate import build_spap
from .milp import STATUS_LIMIT, Limits, MilpSolution, bb_solve, solve_lp
from .model import MilpModel
from .netmodel import NetworkDesign, NetworkInstance, compute_delta_sir, db_to_linear

log = logging.getLogger(__name__)


@dataclass
class DesignResult:
    design: NetworkDesign
    status: str
    objective: float
    best_bound: float
    nodes: int

    @property
    def n_served(self) -> int:
        return len(self.design.served)

    @property
    def limit_reached(self) -> bool:
        return self.status == STATUS_LIMIT


POWER_STEPS_DB = tuple(float(v) for v in np.arange(-30.0, 1.0, 3.0))


def best_server_assignment(net: NetworkInstance, powers: np.ndarray) -> np.ndarray:
    """Each TP is served by its strongest TRX when the SIR balance is positive."""
    rx = net.fading * np.asarray(powers, dtype=float)[None, :]
    best_s = np.argmax(rx, axis=1)
    best = rx[np.arange(net.n_tps), best_s]
    bal = best - net.sir_threshold * (rx.sum(axis=1) - best + net.noise)
    return np.where(bal > 0, best_s, -1)


def greedy_powers(net: NetworkInstance, steps_db=POWER_STEPS_DB) -> np.ndarray:
    """Coordinate search over per-TRX power levels (off or P_max + step dB),
    scoring each setting by the revenue of :func:`best_server_assignment`."""
    levels = np.concatenate([[0.0], net.p_trx_max * db_to_linear(np.asarray(steps_db))])

    def score(p):
        return float(net.revenues[best_server_assignment(net, p) >= 0].sum())

    p = np.full(net.n_trxs, net.p_trx_max)
    best = score(p)
    improved = True
    while improved:
        improved = False
        for s in range(net.n_trxs):
            for level in levels:
                q = p.copy()
                q[s] = level
                v = score(q)
                if v > best + 1e-12 * max(1.0, best):
                    best, p, improved = v, q, True
    return p


def _point(model: MilpModel, net: NetworkInstance, powers, server) -> np.ndarray:
    x = np.zeros(model.n_vars)
    for s in range(net.n_trxs):
        x[model.by_tag("p", s)] = powers[s]
    for t, s in enumerate(server):
        if s >= 0:
            x[model.by_tag("x", t, int(s))] = 1.0
    return x


def polish_powers(net: NetworkInstance, server: np.ndarray, powers: np.ndarray) -> np.ndarray:
    """Re-optimise TRX powers for the fixed assignment, maximising the smallest
    SIR balance (in units of ``delta * N``).  Falls back to ``powers``."""
    served = np.flatnonzero(server >= 0)
    if served.size == 0:
        return np.asarray(powers, dtype=float)
    delta, dn = net.sir_threshold, net.sir_threshold * net.noise
    n_s = net.n_trxs
    mu_cap = float((net.fading.max() * net.p_trx_max) / dn)
    A = np.zeros((served.size, n_s + 1))
    for r, t in enumerate(served):
        s = server[t]
        A[r, :n_s] = -delta * net.fading[t]
        A[r, s] = net.fading[t, s]
        A[r, n_s] = -dn
    c = np.zeros(n_s + 1)
    c[n_s] = 1.0
    lb = np.zeros(n_s + 1)
    ub = np.append(np.full(n_s, net.p_trx_max), mu_cap)
    sol = solve_lp(c, A, [">="] * served.size, np.full(served.size, dn), lb, ub)
    if not sol.optimal or sol.x[n_s] <= 0:
        return np.asarray(powers, dtype=float)
    return np.clip(sol.x[:n_s], 0.0, net.p_trx_max)


def design_network(net: NetworkInstance, limits: Limits | None = None,
                   polish: bool = True) -> DesignResult:
    """Solve the design model (seeded with :func:`greedy_powers`) and build a
    design whose served TPs all carry a strictly positive SIR balance."""
    model = build_spap(net)
    p0 = greedy_powers(net)
    initial = _point(model, net, p0, best_server_assignment(net, p0))
    sol: MilpSolution = bb_solve(model, None, limits, initial=initial)
    x = sol.x
    powers = np.array([x[model.by_tag("p", s)] for s in range(net.n_trxs)])
    server = np.full(net.n_tps, -1)
    for var in model.variables:
        if var.tag and var.tag[0] == "x" and x[model.index(var.name)] > 0.5:
            server[var.tag[1]] = var.tag[2]
    if polish:
        powers = polish_powers(net, server, powers)
    # served TPs left without a positive margin by round-off are dropped
    for t in np.flatnonzero(server >= 0):
        if compute_delta_sir(int(t), int(server[t]), powers, net) <= 0:
            log.info("dropping TP %d: nonpositive SIR balance after solve", t)
            server[t] = -1
    design = NetworkDesign.build(net, powers, server)
    return DesignResult(design, sol.status, sol.objective, sol.best_bound, sol.nodes)
