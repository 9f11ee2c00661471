"""Bounded-variable revised primal simplex.

Rows are brought to the form ``A x + s = b`` with one logical (slack) column
per row whose bounds encode the row sense.  Phase 1 drives artificial columns
to zero, phase 2 optimises the (internally minimised) objective.  Rows are
equilibrated before solving; reported values are in the caller's units.  The
basis is held as an explicit dense inverse for small row counts and as a
sparse LU with product-form updates above ``DENSE_LIMIT`` rows.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from ..model import EQ, GE, LE, MAXIMIZE, MilpModel

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL = "numerical-failure"

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9

_AT_LB, _AT_UB, _BASIC, _FREE = 0, 1, 2, 3


class SimplexError(RuntimeError):
    pass


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = float("nan")
    iterations: int = 0
    # row duals and structural reduced costs for the caller's objective sense
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    basis: np.ndarray | None = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _row_scales(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Geometric-mean row equilibration over |coefficients| and |rhs|."""
    mag = np.abs(np.column_stack([A, b]))
    hi = mag.max(axis=1)
    lo = np.where(mag > 0, mag, np.inf).min(axis=1)
    scales = np.ones(A.shape[0])
    ok = hi > 0
    scales[ok] = 1.0 / np.sqrt(hi[ok] * lo[ok])
    return scales


class _DenseInverse:
    """Explicit basis inverse with rank-one updates (small bases)."""

    def __init__(self, B: np.ndarray):
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise SimplexError("singular basis") from exc
        if not np.all(np.isfinite(self.Binv)):
            raise SimplexError("singular basis")
        self.updates = 0

    def ftran(self, v: np.ndarray) -> np.ndarray:
        return self.Binv @ v

    def btran(self, v: np.ndarray) -> np.ndarray:
        return v @ self.Binv

    def update(self, r: int, alpha: np.ndarray) -> None:
        pr = self.Binv[r] / alpha[r]
        self.Binv -= np.outer(alpha, pr)
        self.Binv[r] = pr
        self.updates += 1


class _SparseLU:
    """Sparse LU of the basis plus product-form eta updates (large bases)."""

    def __init__(self, B: sparse.csc_matrix):
        try:
            self.lu = splu(B.tocsc())
        except RuntimeError as exc:
            raise SimplexError("singular basis") from exc
        self.etas: list[tuple[int, np.ndarray]] = []

    @property
    def updates(self) -> int:
        return len(self.etas)

    def ftran(self, v: np.ndarray) -> np.ndarray:
        w = self.lu.solve(np.asarray(v, dtype=float))
        for r, eta in self.etas:
            wr = w[r] / eta[r]
            w -= eta * wr
            w[r] = wr
        return w

    def btran(self, v: np.ndarray) -> np.ndarray:
        u = np.array(v, dtype=float)
        for r, eta in reversed(self.etas):
            u[r] = (u[r] - (u @ eta - u[r] * eta[r])) / eta[r]
        return self.lu.solve(u, trans="T")

    def update(self, r: int, alpha: np.ndarray) -> None:
        self.etas.append((r, alpha.copy()))


# bases with more rows than this use the sparse factorisation
DENSE_LIMIT = 300


class _Revised:
    """Bounded revised simplex state; one instance per LP solve.

    Columns are structurals (``A``), then one slack per row (identity), then
    one artificial per row (signed identity).
    """

    def __init__(self, A, b, lo, hi, slack_lo, slack_hi, max_iter, refactor_every):
        m, n = A.shape
        self.m, self.n = m, n
        self.A = A
        self.large = m > DENSE_LIMIT
        self.max_iter = max_iter
        self.refactor_every = refactor_every
        self.iterations = 0

        self.lo = np.concatenate([lo, slack_lo, np.zeros(m)])
        self.hi = np.concatenate([hi, slack_hi, np.full(m, np.inf)])
        self.b = b
        self.art_sign = np.ones(m)

        self.status = np.full(n + 2 * m, _AT_LB, dtype=np.int8)
        self.x = np.zeros(n + 2 * m)
        self.x[:n] = lo
        self.basis = np.empty(m, dtype=np.int64)
        self.art_used = np.zeros(m, dtype=bool)

        resid = b - A @ lo
        rows = np.arange(m)
        slack_ok = (self.lo[n:n + m] - FEAS_TOL <= resid) & (resid <= self.hi[n:n + m] + FEAS_TOL)
        s_idx, a_idx = n + rows, n + m + rows
        self.basis[:] = np.where(slack_ok, s_idx, a_idx)
        self.status[s_idx[slack_ok]] = _BASIC
        self.x[s_idx[slack_ok]] = resid[slack_ok]
        self.hi[a_idx[slack_ok]] = 0.0
        art = ~slack_ok
        self.art_used[:] = art
        self.art_sign[art] = np.where(resid[art] > 0, 1.0, -1.0)
        if self.large:
            eye = sparse.identity(m, format="csc")
            self.A_sp = sparse.csc_matrix(A)
            self.M_sp = sparse.hstack([self.A_sp, eye, sparse.diags(self.art_sign, format="csc")],
                                      format="csc")
        self.status[a_idx[art]] = _BASIC
        self.x[a_idx[art]] = np.abs(resid[art])
        # slack parked at its finite bound, which is 0 for every sense
        self.status[s_idx[art]] = np.where(self.lo[s_idx[art]] < 0, _AT_UB, _AT_LB)
        self.refactor()

    # columns ------------------------------------------------------------
    def column(self, j: int) -> np.ndarray:
        n, m = self.n, self.m
        if j < n:
            return self.A[:, j].copy()
        v = np.zeros(m)
        if j < n + m:
            v[j - n] = 1.0
        else:
            v[j - n - m] = self.art_sign[j - n - m]
        return v

    def times(self, idx: np.ndarray, vals: np.ndarray) -> np.ndarray:
        """``sum_k col(idx_k) * vals_k``."""
        n, m = self.n, self.m
        if self.large:
            full = np.zeros(n + 2 * m)
            full[idx] = vals
            return self.M_sp @ full
        out = np.zeros(m)
        s = idx < n
        if s.any():
            out += self.A[:, idx[s]] @ vals[s]
        sl = (idx >= n) & (idx < n + m)
        np.add.at(out, idx[sl] - n, vals[sl])
        ar = idx >= n + m
        np.add.at(out, idx[ar] - n - m, vals[ar] * self.art_sign[idx[ar] - n - m])
        return out

    def _basis_matrix(self):
        if self.large:
            return self.M_sp[:, self.basis]
        B = np.zeros((self.m, self.m))
        for k, j in enumerate(self.basis):
            B[:, k] = self.column(int(j))
        return B

    # linear algebra -----------------------------------------------------
    def refactor(self) -> None:
        B = self._basis_matrix()
        self.F = _SparseLU(B) if self.large else _DenseInverse(B)
        self._recompute_basics()

    def _recompute_basics(self) -> None:
        nb = np.flatnonzero(self.status != _BASIC)
        rhs = self.b - self.times(nb, self.x[nb])
        self.x[self.basis] = self.F.ftran(rhs)

    def reduced_costs(self, cost: np.ndarray) -> np.ndarray:
        n, m = self.n, self.m
        y = self.F.btran(cost[self.basis])
        d = cost.copy()
        d[:n] -= (self.A_sp.T @ y) if self.large else (self.A.T @ y)
        d[n:n + m] -= y
        d[n + m:] -= self.art_sign * y
        d[self.basis] = 0.0
        return d

    # main loop ----------------------------------------------------------
    def run(self, cost: np.ndarray) -> str:
        stall = 0
        last_obj = cost @ self.x
        bland = False
        while True:
            if self.iterations >= self.max_iter:
                raise SimplexError("iteration limit")
            d = self.reduced_costs(cost)
            movable = self.lo < self.hi
            cand_up = (self.status == _AT_LB) & movable & (d < -OPT_TOL)
            cand_dn = (self.status == _AT_UB) & movable & (d > OPT_TOL)
            cand = cand_up | cand_dn
            if not cand.any():
                return OPTIMAL
            if bland:
                q = int(np.flatnonzero(cand)[0])
            else:
                score = np.where(cand, np.abs(d), -1.0)
                q = int(np.argmax(score))
            direction = 1.0 if d[q] < 0 else -1.0

            alpha = self.F.ftran(self.column(q))
            delta = -direction * alpha  # change of basic values per unit step
            bl = self.lo[self.basis]
            bu = self.hi[self.basis]
            xb = self.x[self.basis]

            dec = delta < -PIVOT_TOL
            inc = delta > PIVOT_TOL
            # Harris pass 1: relaxed bounds give the admissible step
            with np.errstate(divide="ignore", invalid="ignore"):
                lim1 = np.full(self.m, np.inf)
                lim1[dec] = (xb[dec] - bl[dec] + FEAS_TOL) / -delta[dec]
                lim1[inc] = (bu[inc] - xb[inc] + FEAS_TOL) / delta[inc]
            theta_max = lim1.min() if self.m else np.inf
            span = self.hi[q] - self.lo[q]
            if span <= theta_max and np.isfinite(span):
                # bound flip
                theta = span
                self.x[self.basis] = xb + delta * theta
                self.x[q] += direction * theta
                self.status[q] = _AT_UB if direction > 0 else _AT_LB
                self.iterations += 1
                stall = 0
                continue
            if not np.isfinite(theta_max):
                return UNBOUNDED
            # pass 2: among rows within theta_max choose the largest pivot
            with np.errstate(divide="ignore", invalid="ignore"):
                lim2 = np.full(self.m, np.inf)
                lim2[dec] = (xb[dec] - bl[dec]) / -delta[dec]
                lim2[inc] = (bu[inc] - xb[inc]) / delta[inc]
            elig = (dec | inc) & (lim2 <= theta_max)
            if bland:
                rows = np.flatnonzero(elig)
                r = int(rows[np.argmin(self.basis[rows])]) if rows.size else int(np.argmin(lim1))
            else:
                piv = np.where(elig, np.abs(alpha), -1.0)
                r = int(np.argmax(piv))
            theta = max(lim2[r], 0.0) if np.isfinite(lim2[r]) else 0.0

            leaving = self.basis[r]
            self.x[self.basis] = xb + delta * theta
            self.x[q] += direction * theta
            if delta[r] < 0:
                self.x[leaving] = self.lo[leaving]
                self.status[leaving] = _AT_LB
            else:
                self.x[leaving] = self.hi[leaving]
                self.status[leaving] = _AT_UB
            self.status[q] = _BASIC
            self.basis[r] = q
            self.F.update(r, alpha)
            self.iterations += 1
            if self.F.updates >= self.refactor_every:
                self.refactor()

            obj = cost @ self.x
            if obj < last_obj - 1e-12 * max(1.0, abs(last_obj)):
                stall = 0
                last_obj = obj
                bland = False
            else:
                stall += 1
                if stall > 50:
                    bland = True


def solve_lp(c, A, senses, b, lb, ub, maximize: bool = True,
             max_iter: int = 50_000, duals: bool = False) -> LpSolution:
    """Solve ``opt c.x s.t. A x (senses) b, lb <= x <= ub`` with finite bounds."""
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float).reshape(-1, c.size)
    b = np.asarray(b, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    m, n = A.shape
    if np.any(lb > ub + 1e-12):
        return LpSolution(INFEASIBLE, iterations=0)
    if not (np.all(np.isfinite(lb)) and np.all(np.isfinite(ub))):
        raise ValueError("solve_lp requires finite variable bounds")

    rs = _row_scales(A, b) if m else np.ones(0)
    As = A * rs[:, None]
    bs = b * rs

    # min cost; objective scaled so the largest |c_j| is 1
    csign = -1.0 if maximize else 1.0
    cmax = np.abs(c).max() if n and np.abs(c).max() > 0 else 1.0
    cost_struct = csign * c / cmax

    slo, shi = _slack_bounds(senses, m)
    tab = None
    for attempt in range(2):
        try:
            tab = _Revised(As, bs, lb.copy(), ub.copy(), slo, shi, max_iter,
                           refactor_every=100 if m <= DENSE_LIMIT else 50)
            status = _two_phase(tab, cost_struct)
            break
        except SimplexError as exc:
            log.debug("simplex restart after %s", exc)
            status = NUMERICAL
    if status != OPTIMAL:
        return LpSolution(status, iterations=tab.iterations if tab else 0)

    x = np.clip(tab.x[:n], lb, ub)
    y, red = _duals(tab, A, c, rs, cmax, csign) if duals else (None, None)
    return LpSolution(OPTIMAL, x, float(c @ x), tab.iterations, y, red, tab.basis.copy())


def _slack_bounds(senses, m):
    slo, shi = np.zeros(m), np.zeros(m)
    for i, s in enumerate(senses):
        if s == LE:
            shi[i] = np.inf
        elif s == GE:
            slo[i] = -np.inf
        elif s != EQ:
            raise ValueError(f"unknown row sense {s!r}")
    return slo, shi


def _two_phase(tab: _Revised, cost_struct: np.ndarray) -> str:
    n, m = tab.n, tab.m
    N = n + 2 * m
    if tab.art_used.any():
        cost1 = np.zeros(N)
        cost1[n + m:] = 1.0
        status = tab.run(cost1)
        if status != OPTIMAL:
            raise SimplexError("phase 1 did not converge")
        tab._recompute_basics()
        infeas = tab.x[n + m:].sum()
        if infeas > 1e-7:
            return INFEASIBLE
    # artificials are fixed at zero from now on
    tab.hi[n + m:] = 0.0
    art_nb = (np.arange(N) >= n + m) & (tab.status != _BASIC)
    tab.x[art_nb] = 0.0
    tab.status[art_nb] = _AT_LB

    cost2 = np.zeros(N)
    cost2[:n] = cost_struct
    for _ in range(3):
        status = tab.run(cost2)
        if status != OPTIMAL:
            return status
        tab.refactor()
        if _primal_ok(tab):
            d = tab.reduced_costs(cost2)
            if not _has_improving(tab, d):
                return OPTIMAL
    raise SimplexError("could not reach a clean optimal basis")


def _primal_ok(tab: _Revised) -> bool:
    xb = tab.x[tab.basis]
    lo, hi = tab.lo[tab.basis], tab.hi[tab.basis]
    tol = 1e-7
    return bool(np.all(xb >= lo - tol) and np.all(xb <= hi + tol))


def _has_improving(tab: _Revised, d: np.ndarray) -> bool:
    movable = tab.lo < tab.hi
    up = (tab.status == _AT_LB) & movable & (d < -OPT_TOL)
    dn = (tab.status == _AT_UB) & movable & (d > OPT_TOL)
    return bool((up | dn).any())


def _duals(tab: _Revised, A, c, rs, cmax, csign):
    """Row duals ``y`` and reduced costs ``c - A^T y`` in the caller's units."""
    n = tab.n
    cost = np.zeros(n + 2 * tab.m)
    cost[:n] = c
    try:
        y = tab.F.btran(cost[tab.basis]) * rs
    except (SimplexError, RuntimeError):
        return None, None
    return y, c - A.T @ y


def dual_bound(sol: LpSolution, c, A, senses, b, lb, ub, maximize: bool = True) -> float:
    """Lagrangian bound implied by ``sol.duals``.

    For any multipliers the value bounds the LP optimum (from above when
    maximising); at an optimal basis it coincides with the primal objective.
    Returns +/-inf when the multipliers have the wrong sign for some row.
    """
    sgn = 1.0 if maximize else -1.0
    y = sgn * np.asarray(sol.duals)
    d = sgn * np.asarray(c) - np.asarray(A).T @ y
    for i, s in enumerate(senses):
        if (s == LE and y[i] < -1e-9) or (s == GE and y[i] > 1e-9):
            return sgn * np.inf
    val = y @ np.asarray(b) + np.where(d > 0, d * ub, d * lb).sum()
    return sgn * val


def lp_solve(model: MilpModel, lb: np.ndarray | None = None,
             ub: np.ndarray | None = None) -> LpSolution:
    """Solve the LP relaxation of ``model`` (integrality dropped)."""
    c, A, senses, b, mlb, mub, _ = model.arrays()
    lb = mlb if lb is None else lb
    ub = mub if ub is None else ub
    return solve_lp(c, A, senses, b, lb, ub, maximize=model.sense == MAXIMIZE, duals=True)
