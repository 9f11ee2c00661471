"""RHS multiband uncertainty sets on the nominal SIR balances."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .netmodel import db_to_linear, linear_to_db

CLAIMED = "claimed"
SERVED = "served"


@dataclass(frozen=True, eq=False)
class MultibandSet:
    """Per-TP deviation thresholds and global per-band cardinality bounds.

    Bands are indexed ``k = k_minus, ..., k_plus`` (``k_minus <= 0 <= k_plus``);
    column ``k - k_minus`` of ``thresholds`` holds ``d_t^k`` in mW, with
    ``d_t^0 = 0``.  ``lower[k - k_minus]`` / ``upper[...]`` bound how many
    balances may deviate in band ``k``.
    """

    k_minus: int
    k_plus: int
    thresholds: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        th = np.array(self.thresholds, dtype=float, copy=True)
        if th.ndim == 1:
            th = th.reshape(1, -1) if th.size else th.reshape(0, self.n_bands)
        lo = np.array(self.lower, dtype=np.int64, copy=True)
        up = np.array(self.upper, dtype=np.int64, copy=True)
        for a in (th, lo, up):
            a.setflags(write=False)
        object.__setattr__(self, "thresholds", th)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)
        self.validate()

    @property
    def n_bands(self) -> int:
        return self.k_plus - self.k_minus + 1

    @property
    def n_tps(self) -> int:
        return self.thresholds.shape[0]

    @property
    def bands(self) -> range:
        return range(self.k_minus, self.k_plus + 1)

    @property
    def zero_column(self) -> int:
        return -self.k_minus

    def col(self, k: int) -> int:
        if not self.k_minus <= k <= self.k_plus:
            raise IndexError(f"band {k} outside [{self.k_minus}, {self.k_plus}]")
        return k - self.k_minus

    def validate(self) -> None:
        if self.k_minus > 0 or self.k_plus < 0:
            raise ValueError("band indices must satisfy k_minus <= 0 <= k_plus")
        n, K = self.n_tps, self.n_bands
        if self.thresholds.shape != (n, K):
            raise ValueError("thresholds must be |T'| x (number of bands)")
        if self.lower.shape != (K,) or self.upper.shape != (K,):
            raise ValueError("one lower/upper bound per band")
        if np.any(self.thresholds[:, self.zero_column] != 0.0):
            raise ValueError("the null band threshold must be 0")
        if K > 1 and np.any(np.diff(self.thresholds, axis=1) <= 0):
            raise ValueError("thresholds must be strictly increasing in the band index")
        if np.any(self.lower < 0) or np.any(self.lower > self.upper) or np.any(self.upper > n):
            raise ValueError("bounds must satisfy 0 <= l_k <= u_k <= |T'|")
        if self.upper[self.zero_column] != n:
            raise ValueError("the null band must be unbounded (u_0 = |T'|)")
        if self.lower.sum() > n:
            raise ValueError("sum of lower bounds exceeds |T'|")

    @property
    def worst_positive(self) -> np.ndarray:
        """``d_t^{K+}`` per TP."""
        return self.thresholds[:, -1]

    @property
    def worst_negative(self) -> np.ndarray:
        """``d_t^{K-}`` per TP."""
        return self.thresholds[:, 0]

    def scope_bounds(self, size: int) -> tuple[np.ndarray, np.ndarray]:
        """Band bounds applied to a population of ``size`` balances.

        Lower bounds are relaxed to ``min(l_k, size)``; upper bounds are capped
        at ``size``.
        """
        return np.minimum(self.lower, size), np.minimum(self.upper, size)

    def is_nominal(self) -> bool:
        """True when no balance may leave the null band."""
        nz = np.ones(self.n_bands, dtype=bool)
        nz[self.zero_column] = False
        return bool(np.all(self.upper[nz] == 0)) or self.n_bands == 1

    def with_bounds(self, lower=None, upper=None) -> "MultibandSet":
        return MultibandSet(self.k_minus, self.k_plus, self.thresholds,
                            self.lower if lower is None else lower,
                            self.upper if upper is None else upper)


def default_bounds(n_tps: int, k_minus: int, k_plus: int) -> tuple[np.ndarray, np.ndarray]:
    """``u_k = ceil(|T'| / (K+ + |K-|))`` off the null band, ``l_k = 0``, ``u_0 = |T'|``."""
    K = k_plus - k_minus + 1
    lower = np.zeros(K, dtype=np.int64)
    n_dev = k_plus - k_minus
    cap = math.ceil(n_tps / n_dev) if n_dev else 0
    upper = np.full(K, min(cap, n_tps), dtype=np.int64)
    upper[-k_minus] = n_tps
    return lower, upper


def make_bands(nominal, fraction: float = 0.2, k_minus: int = -2, k_plus: int = 2,
               lower=None, upper=None, edge_guard: float = 0.0) -> MultibandSet:
    """Bands placed multiplicatively on the decibel value of each nominal balance.

    With ``B`` the balance in dBmW, the positive (negative) edges sit at
    ``B * (1 -/+ i * fraction / K)`` for ``i = 1..K`` on the side that raises
    (lowers) the linear power, so ``-50 dBmW`` with ``fraction = 0.2`` spans
    ``[-60, -40] dBmW``.  Thresholds are the additive mW offsets from ``B``.
    ``edge_guard`` (mW) is taken off the outermost positive threshold: a plan
    whose jamming power lands exactly on the upper edge then still counts as
    jamming at that edge despite the strictness margin.
    """
    nominal = np.asarray(nominal, dtype=float)
    if not 0 < fraction < 1:
        raise ValueError("band fraction must lie in (0, 1)")
    if k_minus > 0 or k_plus < 0:
        raise ValueError("band indices must satisfy k_minus <= 0 <= k_plus")
    if np.any(nominal <= 0):
        raise ValueError("nominal balances must be strictly positive (mW)")
    base_db = linear_to_db(nominal) if nominal.size else nominal
    if np.any(base_db == 0.0):
        raise ValueError("a 0 dBmW balance admits no multiplicative band")
    mag = np.abs(base_db)
    cols = []
    for k in range(k_minus, k_plus + 1):
        if k == 0:
            cols.append(np.zeros_like(nominal))
            continue
        span = k_plus if k > 0 else -k_minus
        edge_db = base_db + np.sign(k) * mag * fraction * abs(k) / span
        cols.append(db_to_linear(edge_db) - nominal)
    thresholds = np.stack(cols, axis=1) if cols else np.zeros((nominal.size, 0))
    if edge_guard < 0:
        raise ValueError("edge guard must be nonnegative")
    if k_plus > 0 and edge_guard > 0:
        thresholds[:, -1] -= edge_guard
    dl, du = default_bounds(nominal.size, k_minus, k_plus)
    return MultibandSet(k_minus, k_plus, thresholds,
                        dl if lower is None else lower, du if upper is None else upper)


NOMINAL_POLICY = "nominal"
DEFAULT_POLICY = "default"


def bands_for(nominal, epsilon: float, fraction: float = 0.2, k_minus: int = -2,
              k_plus: int = 2, policy: str = DEFAULT_POLICY) -> MultibandSet:
    """Bands used by the command line: edge guard ``2 * epsilon``; the
    ``"nominal"`` policy closes every band but the null one (``u_k = 0``)."""
    mb = make_bands(nominal, fraction, k_minus, k_plus, edge_guard=2.0 * epsilon)
    if policy == DEFAULT_POLICY:
        return mb
    if policy == NOMINAL_POLICY:
        upper = np.zeros(mb.n_bands, dtype=np.int64)
        upper[mb.zero_column] = mb.n_tps
        return mb.with_bounds(np.zeros(mb.n_bands, dtype=np.int64), upper)
    raise ValueError(f"unknown bound policy {policy!r}")
