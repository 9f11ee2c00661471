"""Robust jamming under RHS multiband uncertainty.

The robust plan is computed by a cutting-plane scheme run inside the
branch-and-bound: every integral candidate of the jamming model is handed to
an adversarial separation model; when the adversary can deny the jamming of
``V >= 1`` claimed TPs, a robustness cut on those TPs rejects the candidate.

Two cut rules are available:

``"basic"``
    ``sum_{t in D} z_t <= V - 1`` over the denied set ``D``.  It ignores the
    jammer configuration, so it can also remove robust plans that reach the
    same TPs with stronger devices.
``"lifted"`` (default)
    the same inequality relaxed by ``V * sum y_jm`` over every activation that
    would raise the jamming power at some denied TP above the candidate's.
    Any plan without such an upgrade receives at most the candidate's jamming
    power on ``D``, so the adversary's deviation still denies it; the cut
    therefore never removes a robust plan when all band lower bounds are 0.

Brute-force oracles (adversary, audit, nominal and robust optimum) enumerate
explicitly and share no code path with the models they check.
"""

from __future__ import annotations

import functools
import itertools
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .bands import CLAIMED, SERVED, MultibandSet, make_bands
from .formulate import build_njp, build_sep, plan_from_solution, plan_vector
from .milp import STATUS_LIMIT, STATUS_OPTIMAL, Limits, bb_solve
from .model import GE, LE, MINIMIZE, Row, make_row
from .netmodel import JammingInstance, JammingPlan, jam_powers

log = logging.getLogger(__name__)

BASIC_CUT = "basic"
LIFTED_CUT = "lifted"

ENUMERATION_LIMIT = 1_000_000

__all__ = [
    "MultibandSet", "make_bands", "SeparationResult", "NjpResult", "RobustRunReport",
    "AuditResult", "separate", "robustness_cut", "solve_nominal", "solve_robust",
    "audit_robust", "adversary_max", "greedy_plan",
    "rounding_heuristic", "oracle_nominal", "oracle_robust",
    "price_of_robustness",
]


@dataclass
class SeparationResult:
    V: int
    denied: tuple[int, ...]
    bands: dict[int, int]
    nodes: int = 0

    @property
    def robust(self) -> bool:
        return self.V == 0


@dataclass
class NjpResult:
    status: str
    plan: JammingPlan | None
    objective: float
    best_bound: float
    nodes: int
    cuts: int = 0

    @property
    def n_jammed(self) -> int:
        return self.plan.n_jammed if self.plan is not None else 0


@dataclass
class AuditResult:
    robust: bool
    # (t, k) of a denied TP and the band it deviates in, for a non-robust plan
    witness: tuple[int, int] | None = None
    assignment: dict[int, int] = field(default_factory=dict)
    method: str = "enumeration"

    def __bool__(self) -> bool:
        return self.robust


@dataclass
class RobustRunReport:
    status: str
    nominal: NjpResult
    plan: JammingPlan | None
    objective: float
    best_bound: float
    cuts: int
    nodes: int
    wall_seconds: float
    audit: AuditResult | None
    iterations: list[dict] = field(default_factory=list)
    cut_scheme: str = LIFTED_CUT
    scope: str = CLAIMED

    @property
    def n_jammed_nominal(self) -> int:
        return self.nominal.n_jammed

    @property
    def n_jammed_robust(self) -> int:
        return self.plan.n_jammed if self.plan is not None else 0

    @property
    def por_percent(self) -> float:
        return price_of_robustness(self.n_jammed_nominal, self.n_jammed_robust)

    @property
    def limit_reached(self) -> bool:
        return self.status == STATUS_LIMIT or self.nominal.status == STATUS_LIMIT


def price_of_robustness(nominal: float, robust: float) -> float:
    """``100 * (robust - nominal) / nominal``; 0 when the nominal value is 0."""
    if nominal == 0:
        return 0.0
    return 100.0 * (robust - nominal) / nominal


# separation ----------------------------------------------------------------

def separate(plan: JammingPlan, ji: JammingInstance, mb: MultibandSet,
             scope: str = CLAIMED) -> SeparationResult:
    """Solve the adversarial separation model for ``plan`` exactly."""
    if plan.n_jammed == 0:
        return SeparationResult(0, (), {})
    model = build_sep(plan, ji, mb, scope)
    sol = bb_solve(model)
    if sol.status != STATUS_OPTIMAL:
        # an empty realisation set cannot deny anything
        if sol.x is None and sol.status != STATUS_LIMIT:
            return SeparationResult(0, (), {}, sol.nodes)
        raise RuntimeError(f"separation ended with status {sol.status}")
    x = sol.x
    denied = tuple(int(t) for t in plan.claimed if x[model.by_tag("v", int(t))] > 0.5)
    bands = {}
    for var in model.variables:
        if var.tag and var.tag[0] == "w" and x[model.index(var.name)] > 0.5:
            bands[int(var.tag[1])] = int(var.tag[2])
    return SeparationResult(len(denied), denied, bands, sol.nodes)


def upgrade_activations(plan: JammingPlan, ji: JammingInstance,
                        denied) -> list[tuple[int, int]]:
    """Activations that would raise the jamming power at some denied TP."""
    denied = list(denied)
    reach = ji.jam_fading[denied].max(axis=0) > 0 if denied else np.zeros(ji.n_jammers, bool)
    out = []
    for j in range(ji.n_jammers):
        if not reach[j]:
            continue
        current = ji.typology_powers[plan.y[j]] if j in plan.y else 0.0
        out.extend((j, m) for m in range(ji.n_typologies) if ji.typology_powers[m] > current)
    return out


def robustness_cut(result: SeparationResult, plan: JammingPlan, ji: JammingInstance,
                   model, scheme: str = LIFTED_CUT) -> Row:
    """Cut excluding ``plan`` built from a separation result with ``V >= 1``."""
    if result.V < 1:
        raise ValueError("no cut for a robust incumbent")
    coefs = {model.by_tag("z", t): 1.0 for t in result.denied}
    if scheme == LIFTED_CUT:
        for j, m in upgrade_activations(plan, ji, result.denied):
            coefs[model.by_tag("y", j, m)] = -float(result.V)
    elif scheme != BASIC_CUT:
        raise ValueError(f"unknown cut scheme {scheme!r}")
    return make_row(coefs, LE, float(result.V - 1),
                    name=f"rob[{','.join(map(str, result.denied))}]")


# solving -------------------------------------------------------------------

def _profit_floor(value: float) -> float:
    return value - 1e-9 * max(1.0, abs(value))


def _min_cost_stage(model, ji, stage1, callback, limits):
    """Among plans with the stage-1 profit, find the cheapest one."""
    m2 = stage1.model.copy()
    m2.add_row({m2.by_tag("z", t): float(ji.profits[t]) for t in range(ji.n_tps)},
               GE, _profit_floor(stage1.objective), name="profit_floor")
    m2.set_objective({m2.by_tag("y", j, m): float(ji.costs[j, m])
                      for j in range(ji.n_jammers) for m in range(ji.n_typologies)},
                     MINIMIZE)
    return bb_solve(m2, callback, limits, initial=stage1.x)


def greedy_plan(ji: JammingInstance, margin: np.ndarray | None = None,
                start: dict[int, int] | None = None) -> JammingPlan:
    """Budget-feasible plan built by best profit-per-cost moves.

    A TP is claimed once its jamming power clears ``bal + margin + eps``.
    With ``margin`` set to the largest positive band deviation the claims hold
    for every deviation in the set, so the plan is robust by construction.
    ``start`` is a budget-feasible set of activations to extend.
    """
    need = ji.nominal_balances + ji.epsilon
    if margin is not None:
        need = need + np.asarray(margin, dtype=float)
    contrib = ji.sir_threshold * ji.jam_fading[:, :, None] * ji.typology_powers[None, None, :]
    y: dict[int, int] = dict(start or {})
    jam = jam_powers(y, ji)
    spent = ji.plan_cost(y)
    while True:
        claimed = jam >= need
        best, best_score = None, 0.0
        for j in range(ji.n_jammers):
            cur = y.get(j)
            for m in range(ji.n_typologies):
                if cur is not None and m <= cur:
                    continue
                extra = ji.costs[j, m] - (ji.costs[j, cur] if cur is not None else 0.0)
                if spent + extra > ji.budget * (1 + 1e-12):
                    continue
                new = jam + contrib[:, j, m] - (contrib[:, j, cur] if cur is not None else 0.0)
                gain = float(ji.profits @ ((new >= need) & ~claimed))
                score = gain / max(extra, 1e-12)
                if gain > 0 and score > best_score:
                    best, best_score = (j, m, extra, new), score
        if best is None:
            break
        j, m, extra, jam = best
        y[j] = m
        spent += extra
    return JammingPlan((jam >= need).astype(int), y)


def rounding_heuristic(model, ji: JammingInstance, margins=(None,)):
    """Node heuristic for the jamming model: keep the activations the relaxation
    favours most (within budget), then complete them greedily once per claim
    margin in ``margins``."""
    y_idx = [(j, m, model.by_tag("y", j, m))
             for j in range(ji.n_jammers) for m in range(ji.n_typologies)]
    seen: set[tuple] = set()

    def run(x: np.ndarray) -> list[np.ndarray]:
        order = sorted((item for item in y_idx if x[item[2]] > 1e-6),
                       key=lambda item: (-x[item[2]], item[0], item[1]))
        y: dict[int, int] = {}
        spent = 0.0
        for j, m, _ in order:
            if j in y or spent + ji.costs[j, m] > ji.budget * (1 + 1e-12):
                continue
            y[j] = m
            spent += ji.costs[j, m]
        key = tuple(sorted(y.items()))
        if key in seen:
            return []
        seen.add(key)
        return [plan_vector(model, greedy_plan(ji, mg, y), ji) for mg in margins]

    return run


def solve_nominal(ji: JammingInstance, limits: Limits | None = None,
                  min_cost: bool = True) -> NjpResult:
    """Optimal nominal plan; ties on profit are broken by the cheapest plan."""
    model = build_njp(ji)
    sol = bb_solve(model, None, limits, initial=plan_vector(model, greedy_plan(ji), ji),
                   heuristic=rounding_heuristic(model, ji))
    if sol.x is None:
        return NjpResult(sol.status, None, float("nan"), sol.best_bound, sol.nodes)
    nodes = sol.nodes
    x = sol.x
    if min_cost and sol.status == STATUS_OPTIMAL:
        s2 = _min_cost_stage(model, ji, sol, None, limits)
        nodes += s2.nodes
        if s2.x is not None:
            x = s2.x
    plan = plan_from_solution(model, x, ji)
    return NjpResult(sol.status, plan, plan.profit(ji), sol.best_bound, nodes)


def solve_robust(ji: JammingInstance, mb: MultibandSet, limits: Limits | None = None,
                 scope: str = CLAIMED, cut_scheme: str = LIFTED_CUT,
                 min_cost: bool = True, nominal: NjpResult | None = None,
                 audit: bool = True) -> RobustRunReport:
    """Robust cutting planes with separation on every integral candidate."""
    t0 = time.monotonic()
    if nominal is None:
        nominal = solve_nominal(ji, limits, min_cost=min_cost)
    model = build_njp(ji, mb)
    iterations: list[dict] = []

    def on_incumbent(x):
        plan = plan_from_solution(model, x, ji)
        res = separate(plan, ji, mb, scope)
        entry = {"profit": plan.profit(ji), "claimed": [int(t) for t in plan.claimed],
                 "y": dict(plan.y), "V": res.V, "denied": list(res.denied),
                 "bands": dict(res.bands)}
        iterations.append(entry)
        if res.V == 0:
            return None
        cut = robustness_cut(res, plan, ji, model, cut_scheme)
        entry["cut"] = cut.name
        return cut

    margin = np.maximum(mb.worst_positive, 0.0)
    start = greedy_plan(ji, margin)
    sol = bb_solve(model, on_incumbent, limits, initial=plan_vector(model, start, ji),
                   heuristic=rounding_heuristic(model, ji, (margin, None)))
    cuts, nodes = sol.cuts_added, sol.nodes
    status = sol.status
    x = sol.x
    if x is not None and min_cost and sol.status == STATUS_OPTIMAL:
        s2 = _min_cost_stage(model, ji, sol, on_incumbent, limits)
        cuts += s2.cuts_added
        nodes += s2.nodes
        if s2.x is not None:
            x = s2.x
    plan = plan_from_solution(model, x, ji) if x is not None else None
    verdict = None
    if audit and plan is not None:
        verdict = audit_robust(plan, ji, mb, scope)
        if not verdict.robust:
            log.warning("robust plan failed its audit (witness %s)", verdict.witness)
    objective = plan.profit(ji) if plan is not None else float("nan")
    if plan is not None and (nominal.plan is None or
                             objective > nominal.objective + 1e-12 * max(1.0, objective)):
        # only after a truncated nominal search: the robust plan is nominally feasible
        log.info("nominal incumbent improved by the robust plan")
        nominal = NjpResult(nominal.status, plan, objective, nominal.best_bound, nominal.nodes)
    return RobustRunReport(status, nominal, plan, objective, sol.best_bound, cuts, nodes,
                           time.monotonic() - t0, verdict, iterations, cut_scheme, scope)


# brute force ---------------------------------------------------------------

def _population(plan: JammingPlan, ji: JammingInstance, scope: str) -> list[int]:
    if scope == CLAIMED:
        return [int(t) for t in plan.claimed]
    if scope == SERVED:
        return list(range(ji.n_tps))
    raise ValueError(f"unknown scope {scope!r}")


@functools.lru_cache(maxsize=16)
def _assignments(n_items: int, n_bands: int) -> tuple[np.ndarray, np.ndarray]:
    """All band-column assignments for ``n_items`` balances, one per row, and
    the number of balances each row puts in every band."""
    total = n_bands ** n_items
    if total > ENUMERATION_LIMIT:
        raise ValueError(f"{total} band assignments exceed the enumeration limit")
    idx = np.arange(total, dtype=np.int64)
    powers = n_bands ** np.arange(n_items, dtype=np.int64)
    A = ((idx[:, None] // powers[None, :]) % n_bands).astype(np.int8)
    counts = np.zeros((total, n_bands), dtype=np.int64)
    for p in range(n_items):
        counts[idx, A[:, p]] += 1
    A.setflags(write=False)
    counts.setflags(write=False)
    return A, counts


def adversary_max(plan: JammingPlan, ji: JammingInstance, mb: MultibandSet,
                  scope: str = CLAIMED) -> tuple[int, tuple[int, ...], dict[int, int]]:
    """Largest number of claimed TPs any admissible deviation can deny.

    Enumerates every band assignment of the scope population that respects the
    (relaxed) per-band bounds.  Returns ``(V, denied, {t: band})``.
    """
    pop = _population(plan, ji, scope)
    claimed = [int(t) for t in plan.claimed]
    if not claimed:
        return 0, (), {}
    A, counts = _assignments(len(pop), mb.n_bands)
    lower, upper = mb.scope_bounds(len(pop))
    ok = np.all((counts >= lower) & (counts <= upper), axis=1)
    if not ok.any():
        return 0, (), {}
    jam = jam_powers(plan.y, ji)
    denied = np.zeros(A.shape, dtype=bool)
    for pos, t in enumerate(pop):
        if t in claimed:
            dev = mb.thresholds[t][A[:, pos]]
            denied[:, pos] = jam[t] < ji.nominal_balances[t] + dev + ji.epsilon
    score = np.where(ok, denied.sum(axis=1), -1)
    best = int(np.argmax(score))
    V = int(score[best])
    den = tuple(pop[p] for p in range(len(pop)) if denied[best, p])
    bands = {pop[p]: int(A[best, p]) + mb.k_minus for p in range(len(pop))
             if A[best, p] != mb.zero_column}
    return V, den, bands


def audit_robust(plan: JammingPlan, ji: JammingInstance, mb: MultibandSet,
                 scope: str = CLAIMED) -> AuditResult:
    """Check that no admissible deviation denies any claimed TP of ``plan``.

    Uses explicit enumeration when the assignment space is at most 10^6 and a
    separation re-solve otherwise.  A plan violating the budget or its nominal
    jamming rows is reported as not robust.
    """
    if not plan.is_feasible(ji):
        return AuditResult(False, None, {}, "nominal-check")
    if plan.n_jammed == 0:
        return AuditResult(True)
    pop = _population(plan, ji, scope)
    if mb.n_bands ** len(pop) <= ENUMERATION_LIMIT:
        V, denied, bands = adversary_max(plan, ji, mb, scope)
        method = "enumeration"
    else:
        res = separate(plan, ji, mb, scope)
        V, denied, bands = res.V, res.denied, res.bands
        method = "separation"
    if V == 0:
        return AuditResult(True, None, {}, method)
    t = denied[0]
    return AuditResult(False, (t, _worst_band(plan, ji, mb, t, len(pop), bands.get(t, 0))),
                       bands, method)


def _worst_band(plan: JammingPlan, ji: JammingInstance, mb: MultibandSet, t: int,
                size: int, fallback: int) -> int:
    """Most extreme open band whose deviation alone denies claimed TP ``t``."""
    _, upper = mb.scope_bounds(size)
    jam = jam_powers(plan.y, ji)[t]
    for k in sorted(mb.bands, key=abs, reverse=True):
        c = mb.col(k)
        if upper[c] > 0 and jam < ji.nominal_balances[t] + mb.thresholds[t, c] + ji.epsilon:
            return k
    return fallback


def _plans(ji: JammingInstance):
    """Every budget-feasible activation map ``{j: m}``."""
    choices = range(-1, ji.n_typologies)
    for combo in itertools.product(choices, repeat=ji.n_jammers):
        y = {j: m for j, m in enumerate(combo) if m >= 0}
        cost = sum(ji.costs[j, m] for j, m in y.items())
        if cost <= ji.budget * (1 + 1e-12):
            yield y, cost


def _check_oracle_size(ji: JammingInstance) -> None:
    if ji.n_jammers > 5 or ji.n_tps > 8 or ji.n_typologies > 2:
        raise ValueError("oracle limited to |J| <= 5, |T'| <= 8, |M| <= 2")


def _better(obj, cost, best_obj, best_cost) -> bool:
    tol = 1e-9 * max(1.0, abs(best_obj))
    return obj > best_obj + tol or (obj >= best_obj - tol and cost < best_cost)


def oracle_nominal(ji: JammingInstance) -> tuple[float, JammingPlan]:
    """Exhaustive nominal optimum (cheapest plan among the most profitable)."""
    _check_oracle_size(ji)
    best = (0.0, np.inf, JammingPlan(np.zeros(ji.n_tps), {}))
    for y, cost in _plans(ji):
        jam = jam_powers(y, ji)
        z = (jam >= ji.nominal_balances + ji.epsilon).astype(int)
        obj = float(ji.profits @ z)
        if _better(obj, cost, best[0], best[1]):
            best = (obj, cost, JammingPlan(z, y))
    return best[0], best[2]


def oracle_robust(ji: JammingInstance, mb: MultibandSet,
                  scope: str = CLAIMED) -> tuple[float, JammingPlan]:
    """Exhaustive robust optimum over budget-feasible ``(y, z)``.

    For each activation map, subsets of the nominally jammed TPs are audited in
    order of decreasing profit.  With all lower bounds 0 the witness TP of a
    failed audit can be denied alone in every superset (its single deviation
    stays admissible), so supersets of the witness are skipped.
    """
    _check_oracle_size(ji)
    monotone = bool(np.all(mb.lower == 0)) and scope == CLAIMED
    best = (0.0, np.inf, JammingPlan(np.zeros(ji.n_tps), {}))
    for y, cost in _plans(ji):
        jam = jam_powers(y, ji)
        cand = np.flatnonzero(jam >= ji.nominal_balances + ji.epsilon)
        if ji.profits[cand].sum() < best[0] - 1e-9 * max(1.0, best[0]):
            continue
        masks = np.arange(1 << len(cand))
        bits = (masks[:, None] >> np.arange(len(cand))[None, :]) & 1
        profit = bits @ ji.profits[cand] if len(cand) else np.zeros(1)
        order = np.argsort(-profit, kind="stable")
        blocked: list[int] = []
        for mask in order:
            mask = int(mask)
            obj = float(profit[mask])
            if not _better(obj, cost, best[0], best[1]):
                break
            if monotone and any(mask & b == b for b in blocked):
                continue
            z = np.zeros(ji.n_tps, dtype=int)
            z[cand[bits[mask] == 1]] = 1
            plan = JammingPlan(z, y)
            verdict = audit_robust(plan, ji, mb, scope)
            if verdict.robust:
                best = (obj, cost, plan)
                break
            blocked.append(1 << int(np.flatnonzero(cand == verdict.witness[0])[0]))
    return best[0], best[2]
