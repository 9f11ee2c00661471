"""Seeded synthetic instances: TP grid, random sites, log-distance fading and a
log-normal population field driving revenues, profits and jammer costs."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .netmodel import (JammingInstance, NetworkDesign, NetworkInstance, db_to_linear,
                       default_epsilon, linear_to_db)

MIN_DISTANCE_M = 1.0


@dataclass
class GenParams:
    n_tps: int = 100
    n_trxs: int = 6
    n_jammers: int = 15
    area_m: float = 1500.0
    seed: int = 0
    ref_loss_db: float = 40.0
    path_loss_exp: float = 3.5
    noise_dbm: float = -114.0
    sir_threshold_db: float = 10.0
    p_trx_dbm: float = 40.0
    typology_dbm: tuple[float, ...] = (20.0, 27.0, 33.0)
    typology_base_cost: tuple[float, ...] = (1.0, 2.0, 4.0)
    budget_fraction: float = 0.3
    pop_sigma: float = 0.8
    revenue_scale: float = 1.0
    profit_scale: float = 1.0
    # relative spread of the dB-multiplicative noise on the balance estimates
    estimate_spread: float = 0.05

    def validate(self) -> None:
        if self.n_tps < 1 or self.n_trxs < 1 or self.n_jammers < 1:
            raise ValueError("instance dimensions must be positive")
        if not 2.0 <= self.path_loss_exp <= 5.0:
            raise ValueError("path-loss exponent must lie in [2, 5]")
        if self.area_m <= 0:
            raise ValueError("area side must be positive")
        if len(self.typology_dbm) != len(self.typology_base_cost) or not self.typology_dbm:
            raise ValueError("one base cost per jammer typology")
        if np.any(np.diff(self.typology_dbm) <= 0):
            raise ValueError("typology powers must be strictly increasing")
        if np.any(np.diff(self.typology_base_cost) <= 0) or min(self.typology_base_cost) <= 0:
            raise ValueError("typology base costs must be positive and increasing")
        if not 0 < self.budget_fraction <= 1:
            raise ValueError("budget fraction must lie in (0, 1]")
        if not 0 <= self.estimate_spread < 1:
            raise ValueError("estimate spread must lie in [0, 1)")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["typology_dbm"] = list(self.typology_dbm)
        d["typology_base_cost"] = list(self.typology_base_cost)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GenParams":
        d = dict(d)
        for k in ("typology_dbm", "typology_base_cost"):
            if k in d:
                d[k] = tuple(float(v) for v in d[k])
        return cls(**d)


@dataclass(frozen=True, eq=False)
class JammerSkeleton:
    """Jammer-side data defined on every TP, before the served set is known."""

    jammer_xy: np.ndarray
    costs: np.ndarray
    typology_dbm: np.ndarray
    jam_fading_db: np.ndarray
    budget: float
    profits: np.ndarray
    population: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("jammer_xy", "costs", "typology_dbm", "jam_fading_db", "profits",
                     "population"):
            a = np.array(getattr(self, name), dtype=float, copy=True)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        object.__setattr__(self, "jammer_xy", self.jammer_xy.reshape(-1, 2))
        object.__setattr__(self, "budget", float(self.budget))

    def instantiate(self, net: NetworkInstance, design: NetworkDesign,
                    estimates: np.ndarray, epsilon: float | None = None) -> JammingInstance:
        """Jamming instance on the served TPs of ``design``.

        ``estimates`` are the nominal balances (mW) of the served TPs, in the
        order of ``design.served``.
        """
        served = design.served
        est = np.asarray(estimates, dtype=float)
        if est.shape != served.shape:
            raise ValueError("one balance estimate per served TP")
        eps = default_epsilon(est, net.sir_threshold, net.noise) if epsilon is None else epsilon
        return JammingInstance(
            tp_ids=served, jammer_xy=self.jammer_xy, costs=self.costs,
            typology_powers=db_to_linear(self.typology_dbm),
            jam_fading=db_to_linear(self.jam_fading_db[served]), budget=self.budget,
            profits=self.profits[served], nominal_balances=est, epsilon=eps,
            sir_threshold=net.sir_threshold, noise=net.noise)


def path_loss_db(distance, ref_loss_db: float = 40.0, exponent: float = 3.5):
    """Log-distance gain ``-(L0 + 10 * gamma * log10(d))`` in dB, clamped at 0 dB."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    gain = -(ref_loss_db + 10.0 * exponent * np.log10(d))
    gain = np.minimum(gain, 0.0)
    return float(gain) if gain.ndim == 0 else gain


def grid_points(n: int, area_m: float) -> np.ndarray:
    """Centres of ``n`` equal square cells filling a near-square grid row by row."""
    cols = math.ceil(math.sqrt(n))
    rows = math.ceil(n / cols)
    side = area_m / max(cols, rows)
    idx = np.arange(n)
    return np.stack([(idx % cols + 0.5) * side, (idx // cols + 0.5) * side], axis=1)


def _distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
    return np.maximum(d, MIN_DISTANCE_M)


def population_field(n: int, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Log-normal weights rescaled to ``[0.1, 1]``."""
    raw = rng.lognormal(0.0, sigma, size=n)
    span = raw.max() - raw.min()
    if span <= 0:
        return np.ones(n)
    return 0.1 + 0.9 * (raw - raw.min()) / span


def generate(params: GenParams) -> tuple[NetworkInstance, JammerSkeleton]:
    """Network instance plus jammer skeleton; identical output for equal params."""
    params.validate()
    rng = np.random.default_rng(params.seed)
    tp_xy = grid_points(params.n_tps, params.area_m)
    trx_xy = rng.uniform(0.0, params.area_m, size=(params.n_trxs, 2))
    jam_xy = rng.uniform(0.0, params.area_m, size=(params.n_jammers, 2))
    pop = population_field(params.n_tps, params.pop_sigma, rng)

    fading_db = path_loss_db(_distances(tp_xy, trx_xy), params.ref_loss_db,
                             params.path_loss_exp)
    net = NetworkInstance(tp_xy=tp_xy, revenues=params.revenue_scale * pop, trx_xy=trx_xy,
                          fading_db=fading_db, noise_dbm=params.noise_dbm,
                          sir_threshold_db=params.sir_threshold_db,
                          p_trx_max_dbm=params.p_trx_dbm)

    jam_db = path_loss_db(_distances(tp_xy, jam_xy), params.ref_loss_db, params.path_loss_exp)
    nearest = np.argmin(_distances(jam_xy, tp_xy), axis=1)
    base = np.asarray(params.typology_base_cost, dtype=float)
    costs = base[None, :] * (1.0 + pop[nearest])[:, None]
    budget = params.budget_fraction * costs[:, 0].sum()
    skel = JammerSkeleton(jammer_xy=jam_xy, costs=costs,
                          typology_dbm=np.asarray(params.typology_dbm, dtype=float),
                          jam_fading_db=jam_db, budget=budget,
                          profits=params.profit_scale * pop, population=pop)
    return net, skel


def estimate_balances(true_balances, spread: float, seed: int) -> np.ndarray:
    """Perturb positive balances multiplicatively in dB: ``B_dB * (1 + u)``,
    ``u ~ U(-spread, spread)``."""
    bal = np.asarray(true_balances, dtype=float)
    rng = np.random.default_rng([int(seed), 0x5EED])
    u = rng.uniform(-spread, spread, size=bal.shape)
    return db_to_linear(linear_to_db(bal) * (1.0 + u)) if bal.size else bal.copy()


def random_jamming_instance(seed: int, n_tps: int = 6, n_jammers: int = 4,
                            n_typologies: int = 2, budget_fraction: float | None = None
                            ) -> JammingInstance:
    """Small self-contained jamming instance for oracle comparisons.

    Balances, fading and costs are drawn so that single devices sit near the
    balances and band edges, which keeps the robust and nominal optima apart.
    """
    rng = np.random.default_rng([int(seed), 0xA11CE])
    delta = db_to_linear(10.0)
    noise = db_to_linear(-114.0)
    bal_db = rng.uniform(-70.0, -40.0, size=n_tps)
    powers_db = np.array([20.0, 27.0, 33.0][:n_typologies])
    # jammer contribution delta*a*P in dB lands within about +/-15 dB of the balance
    fade_db = (bal_db[:, None] - 10.0 - powers_db[0]
               + rng.uniform(-12.0, 12.0, size=(n_tps, n_jammers)))
    fade_db = np.minimum(fade_db, 0.0)
    # a few links are out of range entirely
    fade = db_to_linear(fade_db) * (rng.random((n_tps, n_jammers)) > 0.15)
    base = np.array([1.0, 2.0, 4.0][:n_typologies])
    costs = base[None, :] * (1.0 + rng.uniform(0.0, 1.0, size=(n_jammers, 1)))
    frac = rng.uniform(0.2, 0.7) if budget_fraction is None else budget_fraction
    budget = frac * costs[:, -1].sum()
    nominal = db_to_linear(bal_db)
    return JammingInstance(
        tp_ids=np.arange(n_tps), jammer_xy=rng.uniform(0, 100, size=(n_jammers, 2)),
        costs=costs, typology_powers=db_to_linear(powers_db), jam_fading=fade,
        budget=budget, profits=rng.uniform(0.1, 1.0, size=n_tps),
        nominal_balances=nominal, epsilon=default_epsilon(nominal, delta, noise),
        sir_threshold=delta, noise=noise)
