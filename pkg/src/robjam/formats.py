"""Versioned JSON documents for instances, designs and plans, plus the CSV report.

Every document is an object with ``"format"`` and ``"version"`` keys; loaders
reject any other format name or version.  Power and gain fields are written in
decibels as ``{"unit": ..., "values": ...}`` blocks, with ``null`` standing
for zero power / no link (``-inf`` dB).  Floats are written with full
precision, so decibel fields round-trip exactly.

``robjam/instance`` v1::

    params        generator parameters or null
    network       tp_xy, revenues, trx_xy,
                  fading {unit "dB", values |T| x |S|},
                  noise {unit "dBmW", value}, sir_threshold {unit "dB", value},
                  p_trx_max {unit "dBmW", value}
    jammers       xy, costs |J| x |M|, typology_power {unit "dBmW", values},
                  fading {unit "dB", values |T| x |J|}, budget, profits, population

``robjam/design`` v1::

    powers        {unit "dBmW", values |S|}
    server        |T| ints, -1 = not served
    served        the set T' (TP ids)
    balances      {unit "dBmW", values}  true SIR balances of T'
    estimates     {unit "dBmW", values}  perturbed balances used for jamming
    status, objective, best_bound, nodes      design solve summary
    estimate_spread, estimate_seed

``robjam/plan`` v1::

    mode          "nominal" | "robust"
    tp_ids        T' in instance numbering
    activations   [{"jammer": j, "typology": m}, ...]
    jammed        claimed TP ids (instance numbering)
    profit, cost, status, best_bound, cuts, nodes, wall_seconds
    bands         null or {fraction, k_minus, k_plus, lower, upper, scope}
    audit         null or {robust, method, witness}
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np

from .instgen import GenParams, JammerSkeleton
from .netmodel import NetworkDesign, NetworkInstance, db_to_linear, linear_to_db

VERSION = 1
INSTANCE = "robjam/instance"
DESIGN = "robjam/design"
PLAN = "robjam/plan"

REPORT_HEADER = ["ID", "|T|", "|S|", "|T*|", "|J|", "#JAM(Nom)", "#JAM(Rob)", "PoR%",
                 "#Cuts", "wall-seconds"]


class SchemaError(ValueError):
    """A document does not match its published layout."""


# helpers -------------------------------------------------------------------

def _db_list(v):
    """Nested list of dB values with ``None`` for ``-inf``."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        return None if np.isneginf(arr) else float(arr)
    return [_db_list(x) for x in arr]


def _from_db_list(v) -> np.ndarray:
    def conv(x):
        if isinstance(x, list):
            return [conv(y) for y in x]
        return -np.inf if x is None else float(x)
    return np.array(conv(v), dtype=float)


def _mw_to_db(v):
    arr = np.asarray(v, dtype=float)
    out = np.full(arr.shape, -np.inf)
    pos = arr > 0
    out[pos] = linear_to_db(arr[pos]) if pos.any() else out[pos]
    return _db_list(out)


def _db_to_mw(v) -> np.ndarray:
    return db_to_linear(_from_db_list(v))


def _unit(block: dict, unit: str, key: str = "values"):
    if not isinstance(block, dict) or block.get("unit") != unit or key not in block:
        raise SchemaError(f"expected a {{unit: {unit!r}, {key}: ...}} block")
    return block[key]


def _check_header(doc: Any, fmt: str) -> dict:
    if not isinstance(doc, dict):
        raise SchemaError("document must be a JSON object")
    if doc.get("format") != fmt:
        raise SchemaError(f"expected format {fmt!r}, found {doc.get('format')!r}")
    if doc.get("version") != VERSION:
        raise SchemaError(f"unsupported {fmt} version {doc.get('version')!r}")
    return doc


def _get(doc: dict, key: str):
    try:
        return doc[key]
    except (KeyError, TypeError):
        raise SchemaError(f"missing field {key!r}") from None


def write_atomic(path: str | Path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump(doc: dict) -> str:
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


def read_json(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc


# instance ------------------------------------------------------------------

def instance_doc(net: NetworkInstance, skel: JammerSkeleton,
                 params: GenParams | None = None) -> dict:
    return {
        "format": INSTANCE, "version": VERSION,
        "params": params.to_dict() if params is not None else None,
        "network": {
            "tp_xy": net.tp_xy.tolist(), "revenues": net.revenues.tolist(),
            "trx_xy": net.trx_xy.tolist(),
            "fading": {"unit": "dB", "values": _db_list(net.fading_db)},
            "noise": {"unit": "dBmW", "value": net.noise_dbm},
            "sir_threshold": {"unit": "dB", "value": net.sir_threshold_db},
            "p_trx_max": {"unit": "dBmW", "value": net.p_trx_max_dbm},
        },
        "jammers": {
            "xy": skel.jammer_xy.tolist(), "costs": skel.costs.tolist(),
            "typology_power": {"unit": "dBmW", "values": _db_list(skel.typology_dbm)},
            "fading": {"unit": "dB", "values": _db_list(skel.jam_fading_db)},
            "budget": skel.budget, "profits": skel.profits.tolist(),
            "population": skel.population.tolist(),
        },
    }


def parse_instance(doc: Any) -> tuple[NetworkInstance, JammerSkeleton, GenParams | None]:
    _check_header(doc, INSTANCE)
    try:
        nw, jm = _get(doc, "network"), _get(doc, "jammers")
        net = NetworkInstance(
            tp_xy=_get(nw, "tp_xy"), revenues=_get(nw, "revenues"),
            trx_xy=_get(nw, "trx_xy"),
            fading_db=_from_db_list(_unit(_get(nw, "fading"), "dB")),
            noise_dbm=_unit(_get(nw, "noise"), "dBmW", "value"),
            sir_threshold_db=_unit(_get(nw, "sir_threshold"), "dB", "value"),
            p_trx_max_dbm=_unit(_get(nw, "p_trx_max"), "dBmW", "value"))
        skel = JammerSkeleton(
            jammer_xy=_get(jm, "xy"), costs=_get(jm, "costs"),
            typology_dbm=_from_db_list(_unit(_get(jm, "typology_power"), "dBmW")),
            jam_fading_db=_from_db_list(_unit(_get(jm, "fading"), "dB")),
            budget=_get(jm, "budget"), profits=_get(jm, "profits"),
            population=_get(jm, "population"))
        params = GenParams.from_dict(doc["params"]) if doc.get("params") else None
    except SchemaError:
        raise
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"invalid instance: {exc}") from exc
    if skel.jam_fading_db.shape != (net.n_tps, len(skel.jammer_xy)):
        raise SchemaError("jammer fading must be |T| x |J|")
    if skel.costs.shape != (len(skel.jammer_xy), len(skel.typology_dbm)):
        raise SchemaError("jammer costs must be |J| x |M|")
    if skel.profits.shape != (net.n_tps,):
        raise SchemaError("one profit per TP")
    return net, skel, params


# design --------------------------------------------------------------------

def design_doc(design: NetworkDesign, estimates: np.ndarray, summary: dict | None = None,
               estimate_spread: float | None = None, estimate_seed: int | None = None) -> dict:
    served = design.served
    return {
        "format": DESIGN, "version": VERSION,
        "powers": {"unit": "dBmW", "values": _mw_to_db(design.powers)},
        "server": [int(s) for s in design.server],
        "served": [int(t) for t in served],
        "balances": {"unit": "dBmW", "values": _mw_to_db(design.balances[served])},
        "estimates": {"unit": "dBmW", "values": _mw_to_db(estimates)},
        **(summary or {}),
        "estimate_spread": estimate_spread, "estimate_seed": estimate_seed,
    }


def parse_design(doc: Any, net: NetworkInstance) -> tuple[NetworkDesign, np.ndarray]:
    _check_header(doc, DESIGN)
    try:
        powers = _db_to_mw(_unit(_get(doc, "powers"), "dBmW"))
        # dB round-off may put a full-power TRX a few ulps above the cap
        powers = np.minimum(powers, net.p_trx_max)
        design = NetworkDesign.build(net, powers, _get(doc, "server"), tol=1e-6)
        estimates = _db_to_mw(_unit(_get(doc, "estimates"), "dBmW"))
    except SchemaError:
        raise
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"invalid design: {exc}") from exc
    if [int(t) for t in design.served] != list(_get(doc, "served")):
        raise SchemaError("served list disagrees with the server array")
    if estimates.shape != design.served.shape or np.any(estimates <= 0):
        raise SchemaError("one positive estimate per served TP")
    return design, estimates


# plan ----------------------------------------------------------------------

def plan_doc(mode: str, tp_ids, activations: dict[int, int], jammed, **fields) -> dict:
    return {
        "format": PLAN, "version": VERSION, "mode": mode,
        "tp_ids": [int(t) for t in tp_ids],
        "activations": [{"jammer": int(j), "typology": int(m)}
                        for j, m in sorted(activations.items())],
        "jammed": [int(t) for t in jammed],
        **fields,
    }


def parse_plan(doc: Any) -> dict:
    _check_header(doc, PLAN)
    for key in ("mode", "tp_ids", "activations", "jammed"):
        _get(doc, key)
    if doc["mode"] not in ("nominal", "robust"):
        raise SchemaError(f"unknown plan mode {doc['mode']!r}")
    try:
        acts = {int(a["jammer"]): int(a["typology"]) for a in doc["activations"]}
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"invalid activation list: {exc}") from exc
    out = dict(doc)
    out["activations"] = acts
    return out


# report --------------------------------------------------------------------

def report_row(run_id: str, n_tps: int, n_trxs: int, n_served: int, n_jammers: int,
               jam_nom: int | None, jam_rob: int | None, por: float | None,
               cuts: int | None, wall: float) -> list[str]:
    def fmt(v, spec="{}"):
        return "" if v is None else spec.format(v)
    return [run_id, str(n_tps), str(n_trxs), str(n_served), str(n_jammers), fmt(jam_nom),
            fmt(jam_rob), fmt(por, "{:.2f}"), fmt(cuts), f"{wall:.2f}"]


def report_csv(rows: list[list[str]], mean_por: float | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    w.writerows(rows)
    if mean_por is not None:
        w.writerow(["mean", "", "", "", "", "", "", f"{mean_por:.2f}", "", ""])
    return buf.getvalue()
