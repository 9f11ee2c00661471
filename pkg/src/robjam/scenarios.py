"""Hand-built micro instances used by tests, docs and the CLI ``--example`` flag."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bands import MultibandSet, bands_for
from .netmodel import (JammingInstance, NetworkDesign, NetworkInstance, db_to_linear,
                       default_epsilon, linear_to_db)

NOISE_DBM = -114.0
SIR_THRESHOLD_DB = 10.0
SERVING_DBM = -48.0
INTERFERENCE_PLUS_NOISE_DBM = -61.0
P_TRX_DBM = 30.0
NOMINAL_BALANCE_DBM = -50.0
JAMMER_FADING_DB = -77.0
TYPOLOGY_DBM = (20.0, 27.0)


@dataclass(frozen=True)
class SingleTpScenario:
    net: NetworkInstance
    design: NetworkDesign
    ji: JammingInstance
    bands: MultibandSet


def single_tp_scenario(band_fraction: float = 0.2) -> SingleTpScenario:
    """One served TP, one jammer site with a 20 dBmW and a 27 dBmW device.

    The TP receives -48 dBmW from its server and -61 dBmW of interference plus
    noise (N = -114 dBmW, threshold 10 dB).  The jamming stage works from the
    estimate -50 dBmW with +/-``band_fraction`` deviations in dB.  At the
    upper edge (-40 dBmW) the 27 dBmW device delivers exactly the balance; the
    edge guard of the bands resolves that tie in favour of the stronger device.
    """
    interf_only = db_to_linear(INTERFERENCE_PLUS_NOISE_DBM) - db_to_linear(NOISE_DBM)
    fading_db = np.array([[SERVING_DBM - P_TRX_DBM, linear_to_db(interf_only) - P_TRX_DBM]])
    net = NetworkInstance(
        tp_xy=[[0.0, 0.0]], revenues=[1.0], trx_xy=[[0.0, 0.0], [0.0, 0.0]],
        fading_db=fading_db, noise_dbm=NOISE_DBM, sir_threshold_db=SIR_THRESHOLD_DB,
        p_trx_max_dbm=P_TRX_DBM)
    p = np.full(2, net.p_trx_max)
    design = NetworkDesign.build(net, p, [0])
    nominal = np.array([db_to_linear(NOMINAL_BALANCE_DBM)])
    eps = default_epsilon(nominal, net.sir_threshold, net.noise)
    ji = JammingInstance(
        tp_ids=[0], jammer_xy=[[0.0, 0.0]], costs=[[1.0, 2.0]],
        typology_powers=db_to_linear(np.array(TYPOLOGY_DBM)),
        jam_fading=[[db_to_linear(JAMMER_FADING_DB)]], budget=2.0, profits=[1.0],
        nominal_balances=nominal, epsilon=eps, sir_threshold=net.sir_threshold,
        noise=net.noise)
    mb = bands_for(nominal, eps, band_fraction)
    return SingleTpScenario(net, design, ji, mb)
