"""Abstract linear model shared by the formulation builders and the MILP engine."""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

BINARY = "binary"
CONTINUOUS = "continuous"

LE = "<="
GE = ">="
EQ = "="

MAXIMIZE = "max"
MINIMIZE = "min"


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lb: float
    ub: float
    # domain indices, e.g. ("z", t) or ("y", j, m)
    tag: tuple | None = None


@dataclass(frozen=True)
class Row:
    coefs: tuple[tuple[int, float], ...]
    sense: str
    rhs: float
    name: str = ""

    def activity(self, x: np.ndarray) -> float:
        return float(sum(a * x[i] for i, a in self.coefs))

    def slack(self, x: np.ndarray) -> float:
        """Signed satisfaction margin: nonnegative iff the row holds at ``x``."""
        act = self.activity(x)
        if self.sense == LE:
            return self.rhs - act
        if self.sense == GE:
            return act - self.rhs
        return -abs(act - self.rhs)


class MilpModel:
    """Binary + bounded-continuous linear model.

    Variables and rows are appended through :meth:`add_var` / :meth:`add_row`;
    :meth:`arrays` exposes the dense form consumed by the solver.
    """

    def __init__(self, name: str = "model", sense: str = MAXIMIZE):
        if sense not in (MAXIMIZE, MINIMIZE):
            raise ValueError(f"unknown objective sense {sense!r}")
        self.name = name
        self.sense = sense
        self.variables: list[Variable] = []
        self.rows: list[Row] = []
        self.objective: dict[int, float] = {}
        self._index: dict[str, int] = {}
        self._tags: dict[tuple, int] = {}
        self._arrays = None

    # construction -------------------------------------------------------
    def add_var(self, name: str, kind: str = CONTINUOUS, lb: float = 0.0,
                ub: float = 1.0, tag: tuple | None = None) -> int:
        if name in self._index:
            raise ValueError(f"duplicate variable {name!r}")
        if kind == BINARY:
            lb, ub = 0.0, 1.0
        elif kind != CONTINUOUS:
            raise ValueError(f"unknown variable kind {kind!r}")
        if not (np.isfinite(lb) and np.isfinite(ub)) or lb > ub:
            raise ValueError(f"variable {name!r} needs finite bounds lb <= ub")
        idx = len(self.variables)
        self.variables.append(Variable(name, kind, float(lb), float(ub), tag))
        self._index[name] = idx
        if tag is not None:
            self._tags[tag] = idx
        self._arrays = None
        return idx

    def add_row(self, coefs: Mapping[int, float] | Iterable[tuple[int, float]],
                sense: str, rhs: float, name: str = "") -> int:
        self.rows.append(make_row(coefs, sense, rhs, name, len(self.variables)))
        self._arrays = None
        return len(self.rows) - 1

    def append(self, row: Row) -> int:
        for i, _ in row.coefs:
            if not 0 <= i < len(self.variables):
                raise ValueError(f"row {row.name!r} references undeclared variable {i}")
        self.rows.append(row)
        self._arrays = None
        return len(self.rows) - 1

    def set_objective(self, coefs: Mapping[int, float], sense: str | None = None) -> None:
        if sense is not None:
            if sense not in (MAXIMIZE, MINIMIZE):
                raise ValueError(f"unknown objective sense {sense!r}")
            self.sense = sense
        self.objective = {int(i): float(a) for i, a in coefs.items() if a != 0.0}
        self._arrays = None

    def copy(self) -> "MilpModel":
        out = copy.copy(self)
        out.variables = list(self.variables)
        out.rows = list(self.rows)
        out.objective = dict(self.objective)
        out._index = dict(self._index)
        out._tags = dict(self._tags)
        out._arrays = None
        return out

    # lookup -------------------------------------------------------------
    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def index(self, name: str) -> int:
        return self._index[name]

    def by_tag(self, *tag) -> int:
        return self._tags[tuple(tag)]

    def has_tag(self, *tag) -> bool:
        return tuple(tag) in self._tags

    def binary_mask(self) -> np.ndarray:
        return np.array([v.kind == BINARY for v in self.variables], dtype=bool)

    # dense form ---------------------------------------------------------
    def arrays(self):
        """Return ``(c, A, senses, b, lb, ub, is_binary)`` as numpy arrays."""
        if self._arrays is None:
            n, m = self.n_vars, self.n_rows
            c = np.zeros(n)
            for i, a in self.objective.items():
                c[i] = a
            A = np.zeros((m, n))
            b = np.empty(m)
            senses = np.empty(m, dtype=object)
            for r, row in enumerate(self.rows):
                for i, a in row.coefs:
                    A[r, i] += a
                b[r] = row.rhs
                senses[r] = row.sense
            lb = np.array([v.lb for v in self.variables])
            ub = np.array([v.ub for v in self.variables])
            self._arrays = (c, A, senses, b, lb, ub, self.binary_mask())
        return self._arrays

    def objective_value(self, x: np.ndarray) -> float:
        return float(sum(a * x[i] for i, a in self.objective.items()))

    def violations(self, x: np.ndarray, tol: float = 1e-9) -> list[tuple[int, float]]:
        """Rows violated at ``x`` beyond a relative tolerance, as ``(row, slack)``."""
        bad = []
        for r, row in enumerate(self.rows):
            scale = max([abs(row.rhs)] + [abs(a * x[i]) for i, a in row.coefs] + [1e-300])
            s = row.slack(x)
            if s < -tol * scale:
                bad.append((r, s))
        return bad

    def is_feasible(self, x: np.ndarray, tol: float = 1e-9, int_tol: float = 1e-6) -> bool:
        lb = np.array([v.lb for v in self.variables])
        ub = np.array([v.ub for v in self.variables])
        if np.any(x < lb - 1e-9) or np.any(x > ub + 1e-9):
            return False
        mask = self.binary_mask()
        if np.any(np.abs(x[mask] - np.round(x[mask])) > int_tol):
            return False
        return not self.violations(x, tol)

    def __repr__(self) -> str:
        return (f"MilpModel({self.name!r}, {self.sense}, vars={self.n_vars}, "
                f"rows={self.n_rows})")


def make_row(coefs, sense: str, rhs: float, name: str = "", n_vars: int | None = None) -> Row:
    if sense not in (LE, GE, EQ):
        raise ValueError(f"unknown row sense {sense!r}")
    items = coefs.items() if isinstance(coefs, Mapping) else coefs
    merged: dict[int, float] = {}
    for i, a in items:
        i = int(i)
        if n_vars is not None and not 0 <= i < n_vars:
            raise ValueError(f"row {name!r} references undeclared variable {i}")
        merged[i] = merged.get(i, 0.0) + float(a)
    pairs = tuple((i, a) for i, a in sorted(merged.items()) if a != 0.0)
    if not np.isfinite(rhs):
        raise ValueError(f"row {name!r} has non-finite rhs")
    return Row(pairs, sense, float(rhs), name)
