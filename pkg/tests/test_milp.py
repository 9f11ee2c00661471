import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from robjam.lpformat import from_lp, to_lp, write_lp
from robjam.milp import (INFEASIBLE, OPTIMAL, STATUS_INFEASIBLE, STATUS_LIMIT,
                         STATUS_OPTIMAL, Limits, bb_solve, dual_bound, lp_solve, solve_lp)
from robjam.model import (BINARY, CONTINUOUS, EQ, GE, LE, MAXIMIZE, MINIMIZE, MilpModel,
                          make_row)


def model_from(c, rows, kinds, sense=MAXIMIZE, ub=None):
    m = MilpModel("t", sense)
    for i, k in enumerate(kinds):
        m.add_var(f"x{i}", k, 0.0, 1.0 if ub is None else ub[i])
    m.set_objective(dict(enumerate(c)))
    for coefs, s, rhs in rows:
        m.add_row(dict(enumerate(coefs)), s, rhs)
    return m


def random_binary_program(seed, n=None):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(2, 13))
    m_rows = int(rng.integers(1, 5))
    c = rng.integers(-3, 10, n).astype(float)
    rows = []
    for _ in range(m_rows):
        a = rng.integers(0, 8, n).astype(float)
        rows.append((a, LE, float(np.floor(a.sum() * rng.uniform(0.2, 0.8)))))
    if rng.random() < 0.3:
        a = rng.integers(0, 3, n).astype(float)
        rows.append((a, GE, 1.0))
    sense = MAXIMIZE if rng.random() < 0.7 else MINIMIZE
    return model_from(c, rows, [BINARY] * n, sense)


def enumerate_optimum(model):
    c, A, senses, b, _, _, _ = model.arrays()
    best = None
    for bits in itertools.product((0.0, 1.0), repeat=model.n_vars):
        x = np.array(bits)
        if model.is_feasible(x):
            v = float(c @ x)
            if best is None or (v > best if model.sense == MAXIMIZE else v < best):
                best = v
    return best


# LP ------------------------------------------------------------------------

def test_lp_single_bound():
    m = model_from([1.0], [([1.0], LE, 1.0)], [CONTINUOUS], ub=[10.0])
    sol = lp_solve(m)
    assert sol.status == OPTIMAL
    assert sol.x[0] == pytest.approx(1.0) and sol.objective == pytest.approx(1.0)


def test_lp_two_dimensional():
    m = model_from([1.0, 1.0], [([1.0, 1.0], LE, 1.5)], [CONTINUOUS] * 2)
    assert lp_solve(m).objective == pytest.approx(1.5)


def test_lp_infeasible():
    m = model_from([1.0], [([1.0], GE, 2.0), ([1.0], LE, 1.0)], [CONTINUOUS], ub=[10.0])
    assert lp_solve(m).status == INFEASIBLE


def test_lp_equality_and_minimize():
    m = model_from([1.0, 2.0], [([1.0, 1.0], EQ, 1.2)], [CONTINUOUS] * 2, MINIMIZE)
    sol = lp_solve(m)
    assert sol.objective == pytest.approx(1.4)


@pytest.mark.parametrize("seed", range(60))
def test_lp_matches_highs_and_duality(seed):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(2, 12)), int(rng.integers(1, 10))
    c = rng.normal(size=n)
    A = rng.normal(size=(m, n)) * (rng.random((m, n)) < 0.7)
    x0 = rng.uniform(0, 1, n)
    senses = rng.choice([LE, GE, EQ], size=m, p=[0.5, 0.35, 0.15])
    act = A @ x0
    b = np.where(senses == LE, act + rng.uniform(0, 1, m),
                 np.where(senses == GE, act - rng.uniform(0, 1, m), act))
    if rng.random() < 0.2:
        b[0] += 50.0 if senses[0] == GE else -50.0
    lb, ub = np.zeros(n), rng.uniform(0.5, 3, n)
    maximize = bool(rng.random() < 0.5)
    sol = solve_lp(c, A, list(senses), b, lb, ub, maximize=maximize, duals=True)

    sg = -1.0 if maximize else 1.0
    A_ub = np.vstack([A[senses == LE], -A[senses == GE]])
    b_ub = np.concatenate([b[senses == LE], -b[senses == GE]])
    ref = linprog(sg * c, A_ub=A_ub if len(A_ub) else None, b_ub=b_ub if len(b_ub) else None,
                  A_eq=A[senses == EQ] if (senses == EQ).any() else None,
                  b_eq=b[senses == EQ] if (senses == EQ).any() else None,
                  bounds=list(zip(lb, ub)), method="highs")
    if ref.status == 2:
        assert sol.status == INFEASIBLE
        return
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(sg * ref.fun, abs=1e-7)
    assert np.all(sol.x >= lb - 1e-9) and np.all(sol.x <= ub + 1e-9)
    slack = A @ sol.x - b
    assert np.all(slack[senses == LE] <= 1e-7) and np.all(slack[senses == GE] >= -1e-7)
    assert np.all(np.abs(slack[senses == EQ]) <= 1e-7)
    bound = dual_bound(sol, c, A, list(senses), b, lb, ub, maximize)
    assert bound == pytest.approx(sol.objective, abs=1e-6)


# branch-and-bound ----------------------------------------------------------

def test_knapsack():
    m = model_from([3.0, 2.0], [([2.0, 2.0], LE, 3.0)], [BINARY] * 2)
    sol = bb_solve(m)
    assert sol.status == STATUS_OPTIMAL
    assert sol.objective == pytest.approx(3.0)
    assert list(sol.x) == [1.0, 0.0]


def test_infeasible_program():
    m = model_from([1.0, 1.0], [([1.0, 1.0], GE, 3.0)], [BINARY] * 2)
    assert bb_solve(m).status == STATUS_INFEASIBLE


@pytest.mark.parametrize("seed", range(200))
def test_bb_matches_enumeration(seed):
    m = random_binary_program(seed)
    sol = bb_solve(m)
    best = enumerate_optimum(m)
    if best is None:
        assert sol.status == STATUS_INFEASIBLE
        return
    assert sol.status == STATUS_OPTIMAL
    assert sol.objective == pytest.approx(best, abs=1e-9)
    assert m.is_feasible(sol.x)
    if m.sense == MAXIMIZE:
        assert sol.objective <= sol.best_bound + 1e-6


def test_mixed_program():
    # max 2b + y, y <= 1.5 b, y continuous in [0, 4], b binary, y + b <= 2
    m = model_from([2.0, 1.0], [([-1.5, 1.0], LE, 0.0), ([1.0, 1.0], LE, 2.0)],
                   [BINARY, CONTINUOUS], ub=[1.0, 4.0])
    assert bb_solve(m).objective == pytest.approx(3.0)


@pytest.mark.parametrize("seed", range(20))
def test_no_cut_callback_is_neutral(seed):
    m = random_binary_program(seed)
    calls = []
    a, b = bb_solve(m), bb_solve(m, lambda x: calls.append(1))
    assert a.status == b.status
    if a.x is not None:
        assert a.objective == pytest.approx(b.objective)
        assert b.cuts_added == 0 and calls


@pytest.mark.parametrize("seed", range(20))
def test_lazy_cuts_respected(seed):
    """A callback forbidding every candidate with x0 = 1 acts like the row x0 <= 0."""
    m = random_binary_program(seed)

    def forbid(x):
        if x[0] > 0.5:
            return make_row({0: 1.0}, LE, 0.0, "x0_off")
        return None

    lazy = bb_solve(m, forbid)
    explicit = m.copy()
    explicit.add_row({0: 1.0}, LE, 0.0)
    ref = bb_solve(explicit)
    assert lazy.status == ref.status
    if ref.x is not None:
        assert lazy.objective == pytest.approx(ref.objective)
        assert lazy.x[0] == 0.0
        assert lazy.model.is_feasible(lazy.x)


@pytest.mark.parametrize("seed", range(20))
def test_adding_rows_never_improves(seed):
    m = random_binary_program(seed)
    base = bb_solve(m)
    if base.x is None or m.sense != MAXIMIZE:
        return
    rng = np.random.default_rng(seed)
    tighter = m.copy()
    tighter.add_row(dict(enumerate(rng.integers(0, 3, m.n_vars).astype(float))), LE, 2.0)
    sol = bb_solve(tighter)
    assert sol.x is None or sol.objective <= base.objective + 1e-9


def test_determinism():
    m = random_binary_program(7, n=12)
    a, b = bb_solve(m), bb_solve(m)
    assert a.nodes == b.nodes and np.array_equal(a.x, b.x) and a.objective == b.objective


def test_node_limit_reports_limit():
    rng = np.random.default_rng(3)
    n = 30
    w = rng.integers(20, 60, n).astype(float)
    m = model_from(w + rng.integers(0, 5, n), [(w, LE, float(w.sum() // 2) + 0.5)],
                   [BINARY] * n)
    sol = bb_solve(m, limits=Limits(node_limit=3), plunge=False)
    assert sol.status == STATUS_LIMIT
    assert sol.x is None or sol.objective <= sol.best_bound + 1e-6


@given(st.integers(0, 10_000))
def test_solution_satisfies_rows(seed):
    m = random_binary_program(seed, n=6)
    sol = bb_solve(m)
    if sol.x is not None:
        assert m.is_feasible(sol.x, tol=1e-7)
        assert np.all(np.abs(sol.x - np.round(sol.x)) <= 1e-6)


# LP text format ------------------------------------------------------------

@pytest.mark.parametrize("seed", range(10))
def test_lp_text_round_trip(seed, tmp_path):
    m = random_binary_program(seed)
    m.add_var("y cont", CONTINUOUS, 0.5, 2.5)
    m.add_row({m.n_vars - 1: 1.0, 0: -0.25}, EQ, 1.0, name="link")
    text = to_lp(m)
    back = from_lp(text)
    for u, v in zip(m.arrays(), back.arrays()):
        assert np.array_equal(np.asarray(u), np.asarray(v))
    assert back.sense == m.sense
    write_lp(m, tmp_path / "m.lp")
    assert (tmp_path / "m.lp").read_text() == text
