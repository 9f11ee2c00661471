"""Best-bound branch-and-bound over binaries with a lazy-constraint callback.

Every integral relaxation solution is offered to ``on_incumbent``.  A callback
that returns one or more rows rejects the candidate: the rows are appended to
the model globally and the node is solved again.  Returning ``None`` accepts
the candidate.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from ..model import MAXIMIZE, MilpModel, Row
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, LpSolution, solve_lp

log = logging.getLogger(__name__)

INT_TOL = 1e-6

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_LIMIT = "budget-limit"


class SolverFailure(RuntimeError):
    """Raised when a relaxation cannot be solved reliably."""


@dataclass
class Limits:
    node_limit: int | None = None
    time_limit: float | None = None
    # relative optimality gap; 0 means prove optimality
    rel_gap: float = 0.0


@dataclass
class MilpSolution:
    status: str
    x: np.ndarray | None
    objective: float
    best_bound: float
    nodes: int
    cuts_added: int
    lp_iterations: int = 0
    model: MilpModel | None = field(default=None, repr=False)

    @property
    def has_incumbent(self) -> bool:
        return self.x is not None

    def value(self, *tag) -> float:
        return float(self.x[self.model.by_tag(*tag)])


Callback = Callable[[np.ndarray], "Row | Iterable[Row] | None"]


def _as_rows(res) -> list[Row]:
    if res is None:
        return []
    if isinstance(res, Row):
        return [res]
    return list(res)


def bb_solve(model: MilpModel, on_incumbent: Callback | None = None,
             limits: Limits | None = None,
             initial: np.ndarray | None = None, plunge: bool = True,
             heuristic: Callable[[np.ndarray], list[np.ndarray]] | None = None
             ) -> MilpSolution:
    """Solve ``model`` exactly (or up to ``limits``) by LP-based branch-and-bound.

    Nodes are explored best-bound first, deeper nodes first on ties, then in
    creation order; with ``plunge`` the 1-branch of every node is processed
    right away, diving until a leaf.  Branching picks the most fractional
    binary.  ``heuristic`` maps a fractional relaxation point to integral
    points, each offered like any other candidate when it is feasible and
    improves on the incumbent.  ``initial``
    is an optional feasible point offered to the callback before the search.
    The model is copied; lazily added rows live on ``solution.model``.
    """
    limits = limits or Limits()
    model = model.copy()
    sign = 1.0 if model.sense == MAXIMIZE else -1.0
    is_bin = model.binary_mask()
    _, _, _, _, lb0, ub0, _ = model.arrays()
    lb0, ub0 = lb0.copy(), ub0.copy()

    start = time.monotonic()
    counter = itertools.count()
    incumbent: np.ndarray | None = None
    inc_val = -np.inf  # in maximisation terms
    cuts = 0
    nodes = 0
    lp_iters = 0

    # nodes fathomed by the incumbent's value; reopened if a cut removes it
    fathomed: list[tuple] = []

    def offer(x: np.ndarray) -> bool:
        """Run the callback on an integral point; True when it was accepted."""
        nonlocal incumbent, inc_val, cuts
        rows = _as_rows(on_incumbent(x)) if on_incumbent else []
        if rows:
            for row in rows:
                if row.slack(x) >= -1e-9 * max(1.0, abs(row.rhs)):
                    raise ValueError(f"callback cut {row.name!r} does not exclude the candidate")
                model.append(row)
                cuts += 1
            if incumbent is not None and any(
                    row.slack(incumbent) < -1e-9 * max(1.0, abs(row.rhs)) for row in rows):
                log.debug("cut removed the incumbent; reopening %d nodes", len(fathomed))
                incumbent, inc_val = None, -np.inf
                for entry in fathomed:
                    heapq.heappush(heap, entry)
                fathomed.clear()
            return False
        val = sign * model.objective_value(x)
        if val > inc_val:
            incumbent, inc_val = x.copy(), val
        return True

    heap: list[tuple] = []
    if initial is not None:
        x0 = np.asarray(initial, dtype=float).copy()
        x0[is_bin] = np.round(x0[is_bin])
        if not model.is_feasible(x0):
            raise ValueError("initial point is infeasible")
        offer(x0)

    # with integer coefficients on binaries only, objective values are integral
    c0 = model.arrays()[0]
    integral_obj = bool(np.all(is_bin | (c0 == 0)) and np.all(c0 == np.round(c0)))

    def gap_closed(bound: float) -> bool:
        if incumbent is None:
            return False
        if integral_obj and np.isfinite(bound):
            bound = np.floor(bound + 1e-6)
        tol = limits.rel_gap * max(abs(inc_val), 1e-12) + 1e-9 * max(1.0, abs(inc_val))
        return bound <= inc_val + tol

    # heap entries: (-bound, -depth, seq, lb, ub)
    heap.append((-np.inf, 0, next(counter), lb0, ub0))
    status = STATUS_OPTIMAL
    plunge_node = None
    while heap or plunge_node is not None:
        if limits.node_limit is not None and nodes >= limits.node_limit:
            status = STATUS_LIMIT
            break
        if limits.time_limit is not None and time.monotonic() - start > limits.time_limit:
            status = STATUS_LIMIT
            break
        if plunge_node is not None:
            neg_bound, neg_depth, _, lb, ub = plunge_node
            plunge_node = None
            if gap_closed(-neg_bound):
                fathomed.append((neg_bound, neg_depth, next(counter), lb, ub))
                continue
        else:
            neg_bound, neg_depth, _, lb, ub = heap[0]
            if gap_closed(-neg_bound):
                fathomed.extend(heap)
                heap.clear()
                break
            heapq.heappop(heap)
        nodes += 1

        while True:
            c, A, senses, b, _, _, _ = model.arrays()
            lp = solve_lp(c, A, senses, b, lb, ub, maximize=model.sense == MAXIMIZE)
            lp_iters += lp.iterations
            if lp.status == INFEASIBLE:
                break
            if lp.status == UNBOUNDED:
                raise SolverFailure("unbounded relaxation (bounded variables expected)")
            if lp.status != OPTIMAL:
                raise SolverFailure(f"relaxation failed: {lp.status}")
            bound = sign * lp.objective
            if gap_closed(bound):
                fathomed.append((-bound, neg_depth, next(counter), lb, ub))
                break
            frac = np.abs(lp.x - np.round(lp.x))
            frac[~is_bin] = 0.0
            if frac.max() <= INT_TOL:
                x = lp.x.copy()
                x[is_bin] = np.round(x[is_bin])
                if offer(x):
                    break
                continue  # cut added: re-solve this node
            if heuristic is not None:
                for xh in heuristic(lp.x):
                    if sign * model.objective_value(xh) > inc_val and model.is_feasible(xh):
                        offer(np.asarray(xh, dtype=float))
            j = _most_fractional(lp.x, is_bin)
            depth = -neg_depth + 1
            children = []
            for val in (1.0, 0.0):
                clb, cub = lb.copy(), ub.copy()
                clb[j] = cub[j] = val
                children.append((-bound, -depth, next(counter), clb, cub))
            if plunge:
                # dive towards the nearer integer
                first = 0 if lp.x[j] >= 0.5 else 1
                plunge_node = children[first]
                heapq.heappush(heap, children[1 - first])
            else:
                for child in children:
                    heapq.heappush(heap, child)
            break
    if plunge_node is not None:
        heapq.heappush(heap, plunge_node)

    if status == STATUS_LIMIT:
        open_bound = max((-e[0] for e in heap), default=-np.inf)
        best_bound = max(open_bound, inc_val)
    else:
        best_bound = inc_val
    if incumbent is None and status == STATUS_OPTIMAL:
        status = STATUS_INFEASIBLE
    objective = sign * inc_val if incumbent is not None else float("nan")
    log.debug("bb_solve %s: status=%s obj=%s nodes=%d cuts=%d", model.name, status,
              objective, nodes, cuts)
    return MilpSolution(status, incumbent, objective, sign * best_bound, nodes, cuts,
                        lp_iters, model)


def _most_fractional(x: np.ndarray, is_bin: np.ndarray) -> int:
    dist = np.where(is_bin, np.abs(x - np.floor(x) - 0.5), np.inf)
    return int(np.argmin(dist))
