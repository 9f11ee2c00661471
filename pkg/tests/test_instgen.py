import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robjam.bands import bands_for, make_bands
from robjam.instgen import (GenParams, estimate_balances, generate, path_loss_db,
                            random_jamming_instance)
from robjam.netmodel import db_to_linear, linear_to_db


def test_path_loss_values():
    assert path_loss_db(1.0, 30.0, 3.0) == pytest.approx(-30.0)
    assert path_loss_db(10.0, 30.0, 3.0) == pytest.approx(-60.0)
    with pytest.raises(ValueError):
        path_loss_db(0.0)


@given(st.floats(1e-3, 1e6), st.floats(-50, 80), st.floats(2, 5))
def test_path_loss_clamped(d, l0, g):
    lin = db_to_linear(path_loss_db(d, l0, g))
    assert 0.0 <= lin <= 1.0


def test_fading_monotone_in_distance():
    d = np.linspace(1, 5000, 200)
    assert np.all(np.diff(path_loss_db(d)) <= 0)


def test_generate_deterministic():
    a_net, a_sk = generate(GenParams(n_tps=16, n_trxs=3, n_jammers=4, seed=42))
    b_net, b_sk = generate(GenParams(n_tps=16, n_trxs=3, n_jammers=4, seed=42))
    assert np.array_equal(a_net.fading_db, b_net.fading_db)
    assert np.array_equal(a_sk.jam_fading_db, b_sk.jam_fading_db)
    assert np.array_equal(a_sk.costs, b_sk.costs)
    assert a_sk.budget == b_sk.budget


def test_generate_dimensions_i1():
    net, sk = generate(GenParams(n_tps=100, n_trxs=6, n_jammers=15, seed=1))
    assert net.fading.shape == (100, 6)
    assert sk.jam_fading_db.shape == (100, 15)
    assert sk.costs.shape == (15, 3)


def test_generate_minimal():
    net, sk = generate(GenParams(n_tps=1, n_trxs=1, n_jammers=1))
    assert net.fading.shape == (1, 1)


@given(st.integers(0, 2**63 - 1))
def test_generated_values_positive(seed):
    net, sk = generate(GenParams(n_tps=9, n_trxs=2, n_jammers=3, seed=seed))
    assert np.all(net.revenues > 0) and np.all(sk.profits > 0)
    assert np.all(sk.costs > 0) and sk.budget > 0
    assert np.all((net.fading >= 0) & (net.fading <= 1))
    assert np.all(np.diff(sk.costs, axis=1) > 0)


def test_invalid_params():
    with pytest.raises(ValueError):
        generate(GenParams(n_tps=0))
    with pytest.raises(ValueError):
        generate(GenParams(path_loss_exp=6.0))
    with pytest.raises(ValueError):
        generate(GenParams(typology_dbm=(20.0, 19.0, 33.0)))


def test_estimates_stay_near_truth():
    true = db_to_linear(np.array([-50.0, -70.0]))
    est = estimate_balances(true, 0.05, seed=3)
    rel = linear_to_db(est) / linear_to_db(true) - 1
    assert np.all(np.abs(rel) <= 0.05)
    assert np.array_equal(est, estimate_balances(true, 0.05, seed=3))


def test_random_jamming_instance_valid():
    ji = random_jamming_instance(7, 5, 3, 2)
    ji.validate()
    assert ji.jam_fading.shape == (5, 3)


# bands ---------------------------------------------------------------------

def test_single_tp_band_interval():
    mb = make_bands([db_to_linear(-50.0)], 0.2)
    lo = linear_to_db(db_to_linear(-50.0) + mb.thresholds[0, 0])
    hi = linear_to_db(db_to_linear(-50.0) + mb.thresholds[0, -1])
    assert lo == pytest.approx(-60.0, abs=1e-9)
    assert hi == pytest.approx(-40.0, abs=1e-9)


@given(st.lists(st.floats(-120, -1), min_size=1, max_size=6), st.floats(0.01, 0.9))
def test_band_thresholds_ordered(bal_db, f):
    mb = make_bands(db_to_linear(np.array(bal_db)), f)
    assert np.all(np.diff(mb.thresholds, axis=1) > 0)
    assert np.all(mb.thresholds[:, mb.zero_column] == 0)


def test_bands_collapse_with_small_fraction():
    mb = make_bands([db_to_linear(-50.0)], 1e-9)
    assert np.all(np.abs(mb.thresholds) < 1e-12)


def test_default_bounds():
    mb = make_bands(db_to_linear(np.full(9, -60.0)), 0.2)
    assert list(mb.upper) == [3, 3, 9, 3, 3]
    assert list(mb.lower) == [0] * 5


def test_band_errors():
    with pytest.raises(ValueError):
        make_bands([0.0], 0.2)
    with pytest.raises(ValueError):
        make_bands([1e-5], 1.5)


def test_nominal_policy_closes_bands():
    mb = bands_for(db_to_linear(np.full(4, -60.0)), 1e-10, policy="nominal")
    assert mb.is_nominal()
    assert list(mb.upper) == [0, 0, 4, 0, 0]
