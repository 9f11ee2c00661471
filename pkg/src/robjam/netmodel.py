"""Network and jamming domain types plus the SIR arithmetic on them.

All arithmetic runs in linear scale (mW for powers, plain ratios for fading
and thresholds).  Decibel values only enter or leave through
:func:`db_to_linear` / :func:`linear_to_db`.  File-backed types keep their
decibel fields as the canonical representation so that serialisation is
lossless; the linear views are derived once at construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np


def db_to_linear(v):
    """``10 ** (v / 10)``; works on scalars and arrays (``-inf`` maps to 0)."""
    if np.ndim(v) == 0:
        return 10.0 ** (float(v) / 10.0)
    return np.power(10.0, np.asarray(v, dtype=float) / 10.0)


def linear_to_db(v):
    """``10 * log10(v)``.  Raises ``ValueError`` for nonpositive input."""
    arr = np.asarray(v, dtype=float)
    if np.any(arr <= 0) or np.any(np.isnan(arr)):
        raise ValueError("decibel conversion needs strictly positive values")
    if arr.ndim == 0:
        return 10.0 * np.log10(float(arr))
    return 10.0 * np.log10(arr)


def _frozen(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class NetworkInstance:
    """Testpoints, transceivers and the propagation between them.

    ``fading_db[t, s]`` is the gain (nonpositive dB) from TRX ``s`` to TP ``t``;
    ``-inf`` marks a link with no received power.
    """

    tp_xy: np.ndarray
    revenues: np.ndarray
    trx_xy: np.ndarray
    fading_db: np.ndarray
    noise_dbm: float
    sir_threshold_db: float
    p_trx_max_dbm: float
    fading: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "tp_xy", _frozen(self.tp_xy).reshape(-1, 2))
        object.__setattr__(self, "trx_xy", _frozen(self.trx_xy).reshape(-1, 2))
        object.__setattr__(self, "revenues", _frozen(self.revenues))
        fdb = _frozen(self.fading_db).reshape(len(self.tp_xy), len(self.trx_xy))
        object.__setattr__(self, "fading_db", fdb)
        object.__setattr__(self, "fading", _frozen(db_to_linear(fdb)))
        object.__setattr__(self, "noise_dbm", float(self.noise_dbm))
        object.__setattr__(self, "sir_threshold_db", float(self.sir_threshold_db))
        object.__setattr__(self, "p_trx_max_dbm", float(self.p_trx_max_dbm))
        self.validate()

    @classmethod
    def from_linear(cls, fading, noise: float, sir_threshold: float, p_trx_max: float,
                    revenues=None, tp_xy=None, trx_xy=None) -> "NetworkInstance":
        fading = np.asarray(fading, dtype=float)
        n_t, n_s = fading.shape
        with np.errstate(divide="ignore"):
            fdb = 10.0 * np.log10(fading)
        return cls(
            tp_xy=np.zeros((n_t, 2)) if tp_xy is None else tp_xy,
            revenues=np.ones(n_t) if revenues is None else revenues,
            trx_xy=np.zeros((n_s, 2)) if trx_xy is None else trx_xy,
            fading_db=fdb,
            noise_dbm=linear_to_db(noise),
            sir_threshold_db=linear_to_db(sir_threshold),
            p_trx_max_dbm=linear_to_db(p_trx_max),
        )

    def validate(self) -> None:
        if self.fading.shape != (self.n_tps, self.n_trxs):
            raise ValueError("fading matrix must be |T| x |S|")
        if np.any(self.fading < 0) or np.any(self.fading > 1) or np.any(np.isnan(self.fading)):
            raise ValueError("fading coefficients must lie in [0, 1]")
        if np.any(self.revenues <= 0):
            raise ValueError("revenues must be strictly positive")
        for name in ("noise_dbm", "sir_threshold_db", "p_trx_max_dbm"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def n_tps(self) -> int:
        return len(self.tp_xy)

    @property
    def n_trxs(self) -> int:
        return len(self.trx_xy)

    @property
    def noise(self) -> float:
        return db_to_linear(self.noise_dbm)

    @property
    def sir_threshold(self) -> float:
        return db_to_linear(self.sir_threshold_db)

    @property
    def p_trx_max(self) -> float:
        return db_to_linear(self.p_trx_max_dbm)


@dataclass(frozen=True, eq=False)
class NetworkDesign:
    """A feasible power/assignment configuration of a network.

    ``server[t]`` is the serving TRX of TP ``t`` or -1 when ``t`` is not served.
    """

    powers: np.ndarray
    server: np.ndarray
    balances: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "powers", _frozen(self.powers))
        object.__setattr__(self, "server", _frozen(self.server, dtype=np.int64))

    @classmethod
    def build(cls, net: NetworkInstance, powers, server, tol: float = 1e-9) -> "NetworkDesign":
        d = cls(powers, server)
        d.check(net, tol)
        bal = np.array([compute_delta_sir(t, int(s), d.powers, net) if s >= 0 else np.nan
                        for t, s in enumerate(d.server)])
        object.__setattr__(d, "balances", _frozen(bal))
        return d

    def check(self, net: NetworkInstance, tol: float = 1e-9) -> None:
        if self.powers.shape != (net.n_trxs,) or self.server.shape != (net.n_tps,):
            raise ValueError("design dimensions do not match the instance")
        if np.any(self.powers < 0) or np.any(self.powers > net.p_trx_max * (1 + 1e-12)):
            raise ValueError("TRX powers must lie in [0, P_TRX]")
        if np.any(self.server < -1) or np.any(self.server >= net.n_trxs):
            raise ValueError("server index out of range")
        for t in self.served:
            bal = compute_delta_sir(int(t), int(self.server[t]), self.powers, net)
            if bal < -tol * net.sir_threshold * net.noise:
                raise ValueError(f"TP {t} violates its SIR inequality")

    @property
    def served(self) -> np.ndarray:
        """Indices of the served testpoints (the set T')."""
        return np.flatnonzero(self.server >= 0)

    def assignment(self, n_trxs: int) -> np.ndarray:
        x = np.zeros((len(self.server), n_trxs), dtype=np.int8)
        for t in self.served:
            x[t, self.server[t]] = 1
        return x


@dataclass(frozen=True, eq=False)
class JammingInstance:
    """Jamming problem on the served testpoints of a designed network.

    Rows of ``jam_fading`` / entries of ``profits`` and ``nominal_balances``
    follow ``tp_ids`` (the served TPs, in network indexing).  ``costs[j, m]``
    is the price of installing typology ``m`` at jammer site ``j``.
    """

    tp_ids: np.ndarray
    jammer_xy: np.ndarray
    costs: np.ndarray
    typology_powers: np.ndarray
    jam_fading: np.ndarray
    budget: float
    profits: np.ndarray
    nominal_balances: np.ndarray
    epsilon: float
    sir_threshold: float
    noise: float

    def __post_init__(self):
        object.__setattr__(self, "tp_ids", _frozen(self.tp_ids, dtype=np.int64))
        object.__setattr__(self, "jammer_xy", _frozen(self.jammer_xy).reshape(-1, 2))
        object.__setattr__(self, "costs", _frozen(self.costs).reshape(len(self.jammer_xy), -1))
        object.__setattr__(self, "typology_powers", _frozen(self.typology_powers))
        object.__setattr__(self, "jam_fading",
                           _frozen(self.jam_fading).reshape(len(self.tp_ids), len(self.jammer_xy)))
        object.__setattr__(self, "profits", _frozen(self.profits))
        object.__setattr__(self, "nominal_balances", _frozen(self.nominal_balances))
        for name in ("budget", "epsilon", "sir_threshold", "noise"):
            object.__setattr__(self, name, float(getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        n_t, n_j, n_m = self.n_tps, self.n_jammers, self.n_typologies
        if self.costs.shape != (n_j, n_m):
            raise ValueError("costs must be |J| x |M|")
        if self.profits.shape != (n_t,) or self.nominal_balances.shape != (n_t,):
            raise ValueError("profits / balances must have one entry per served TP")
        if np.any(np.diff(self.typology_powers) <= 0) or np.any(self.typology_powers <= 0):
            raise ValueError("typology powers must be positive and strictly increasing")
        if np.any(self.costs <= 0) or np.any(np.diff(self.costs, axis=1) <= 0):
            raise ValueError("costs must be positive and strictly increasing in the typology")
        if np.any(self.jam_fading < 0) or np.any(self.jam_fading > 1):
            raise ValueError("jammer fading must lie in [0, 1]")
        if not self.budget > 0:
            raise ValueError("budget must be positive")
        if np.any(self.profits <= 0):
            raise ValueError("profits must be strictly positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not (self.sir_threshold > 0 and self.noise > 0):
            raise ValueError("SIR threshold and noise must be positive")

    @property
    def n_tps(self) -> int:
        return len(self.tp_ids)

    @property
    def n_jammers(self) -> int:
        return len(self.jammer_xy)

    @property
    def n_typologies(self) -> int:
        return len(self.typology_powers)

    def contribution(self) -> np.ndarray:
        """``delta * a_tj * P^m`` as a ``|T'| x |J| x |M|`` array (mW)."""
        return (self.sir_threshold * self.jam_fading[:, :, None]
                * self.typology_powers[None, None, :])

    def plan_cost(self, y: Mapping[int, int]) -> float:
        return float(sum(self.costs[j, m] for j, m in y.items()))

    def with_epsilon(self, epsilon: float) -> "JammingInstance":
        return _replace(self, epsilon=epsilon)

    def with_budget(self, budget: float) -> "JammingInstance":
        return _replace(self, budget=budget)


def _replace(obj, **changes):
    import dataclasses
    return dataclasses.replace(obj, **changes)


def default_epsilon(nominal_balances, sir_threshold: float, noise: float) -> float:
    """Strictness margin: 1e-3 of the smallest ``max(balance, delta N)``, floored."""
    vals = np.maximum(np.asarray(nominal_balances, dtype=float), sir_threshold * noise)
    if vals.size == 0:
        return 1e-12
    return max(1e-3 * float(vals.min()), 1e-12)


# signal arithmetic --------------------------------------------------------

def _check_index(i: int, n: int, what: str) -> None:
    if not 0 <= i < n:
        raise IndexError(f"{what} index {i} out of range [0, {n})")


def received_interference(t: int, s: int, p, net: NetworkInstance) -> float:
    """Power received at ``t`` from every TRX except ``s`` (mW, no noise)."""
    row = net.fading[t] * np.asarray(p, dtype=float)
    return float(row.sum() - row[s])


def compute_sir(t: int, s: int, p, net: NetworkInstance) -> float:
    """Signal-to-interference ratio of TP ``t`` when served by TRX ``s``."""
    _check_index(t, net.n_tps, "testpoint")
    _check_index(s, net.n_trxs, "TRX")
    p = np.asarray(p, dtype=float)
    signal = net.fading[t, s] * p[s]
    return float(signal / (net.noise + received_interference(t, s, p, net)))


def compute_delta_sir(t: int, server: int, p, net: NetworkInstance) -> float:
    """SIR balance of ``t``: serving power minus the delta-weighted interference
    and noise.  Nonnegative exactly when the SIR requirement holds."""
    _check_index(t, net.n_tps, "testpoint")
    _check_index(server, net.n_trxs, "TRX")
    p = np.asarray(p, dtype=float)
    delta = net.sir_threshold
    return float(net.fading[t, server] * p[server]
                 - delta * received_interference(t, server, p, net)
                 - delta * net.noise)


def jam_power(t: int, y: Mapping[int, int], ji: JammingInstance) -> float:
    """Delta-weighted jamming power received by served TP ``t`` (local index).

    ``y`` maps an activated jammer to its typology index.
    """
    _check_index(t, ji.n_tps, "testpoint")
    total = 0.0
    for j, m in y.items():
        total += ji.jam_fading[t, j] * ji.typology_powers[m]
    return float(ji.sir_threshold * total)


def jam_powers(y: Mapping[int, int], ji: JammingInstance) -> np.ndarray:
    """:func:`jam_power` for every served TP at once."""
    total = np.zeros(ji.n_tps)
    for j, m in y.items():
        total += ji.jam_fading[:, j] * ji.typology_powers[m]
    return ji.sir_threshold * total


def is_jammed(t: int, y: Mapping[int, int], balance: float, ji: JammingInstance) -> bool:
    """Jamming condition with the strict inequality realised through epsilon."""
    return jam_power(t, y, ji) >= balance + ji.epsilon


@dataclass(frozen=True, eq=False)
class JammingPlan:
    """Jammer activations ``y`` (site -> typology) and claimed TPs ``z``."""

    z: np.ndarray
    y: Mapping[int, int]

    def __post_init__(self):
        object.__setattr__(self, "z", _frozen(np.round(self.z), dtype=np.int8))
        object.__setattr__(self, "y", dict(sorted((int(j), int(m)) for j, m in self.y.items())))

    @property
    def claimed(self) -> np.ndarray:
        return np.flatnonzero(self.z == 1)

    @property
    def n_jammed(self) -> int:
        return int(self.z.sum())

    def profit(self, ji: JammingInstance) -> float:
        return float(ji.profits @ self.z)

    def cost(self, ji: JammingInstance) -> float:
        return ji.plan_cost(self.y)

    def is_feasible(self, ji: JammingInstance) -> bool:
        """Budget respected and every claimed TP jammed at its nominal balance."""
        if self.cost(ji) > ji.budget * (1 + 1e-12):
            return False
        jam = jam_powers(self.y, ji)
        return bool(np.all(jam[self.claimed] >= ji.nominal_balances[self.claimed] + ji.epsilon))
