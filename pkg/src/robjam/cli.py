"""Command line: ``robjam {generate,design,jam,batch,audit}``.

Exit codes: 0 success, 1 audit found a non-robust plan, 2 validation error,
3 a solve stopped at its node/time limit (outputs are still written),
4 solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import formats
from .bands import CLAIMED, DEFAULT_POLICY, NOMINAL_POLICY, bands_for
from .design import design_network
from .instgen import GenParams, estimate_balances, generate
from .milp import Limits, SolverFailure
from .netmodel import JammingInstance, JammingPlan
from .robust import (RobustRunReport, audit_robust, price_of_robustness, solve_nominal,
                     solve_robust)
from .scenarios import single_tp_scenario

log = logging.getLogger("robjam")

EXIT_OK, EXIT_NOT_ROBUST, EXIT_INVALID, EXIT_LIMIT, EXIT_SOLVER = 0, 1, 2, 3, 4

TYPOLOGY_DBM = (20.0, 27.0, 33.0, 40.0)
TYPOLOGY_COST = (1.0, 2.0, 4.0, 8.0)

# benchmark dimensions: (ID, |T|, |S|, |J|)
BENCHMARK_DIMS = [
    ("I1", 100, 6, 15), ("I2", 100, 9, 15), ("I3", 100, 12, 15), ("I4", 150, 6, 15),
    ("I5", 150, 9, 15), ("I6", 150, 12, 20), ("I7", 169, 12, 20), ("I8", 169, 16, 20),
    ("I9", 169, 20, 20), ("I10", 196, 12, 20), ("I11", 196, 16, 25), ("I12", 196, 20, 25),
    ("I13", 224, 15, 25), ("I14", 224, 20, 25), ("I15", 224, 25, 25),
]


def parse_bands(text: str) -> tuple[int, int]:
    """``"a+b"`` -> ``(-a, b)``: ``a`` bands below and ``b`` above the null band."""
    try:
        lo, hi = text.split("+")
        a, b = int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bands must look like 2+2, got {text!r}") from None
    if a < 0 or b < 0:
        raise argparse.ArgumentTypeError("band counts must be nonnegative")
    return -a, b


def gen_params(args) -> GenParams:
    k = args.typologies
    if not 1 <= k <= len(TYPOLOGY_DBM):
        raise ValueError(f"--typologies must lie in 1..{len(TYPOLOGY_DBM)}")
    return GenParams(n_tps=args.tps, n_trxs=args.trxs, n_jammers=args.jammers,
                     seed=args.seed, typology_dbm=TYPOLOGY_DBM[:k],
                     typology_base_cost=TYPOLOGY_COST[:k], budget_fraction=args.budget_frac)


def limits_from(args) -> Limits:
    return Limits(node_limit=args.node_limit, time_limit=args.time_limit,
                  rel_gap=getattr(args, "gap", 0.0) or 0.0)


def load_instance(path):
    return formats.parse_instance(formats.read_json(path))


def jamming_instance(net, skel, design, estimates) -> JammingInstance:
    return skel.instantiate(net, design, estimates)


# pipeline steps ------------------------------------------------------------

@dataclass
class JamOutcome:
    ji: JammingInstance
    nominal_plan: JammingPlan | None
    robust: RobustRunReport | None
    nominal_status: str
    wall: float
    limit: bool


def run_design(net, params: GenParams | None, limits: Limits, seed: int):
    res = design_network(net, limits)
    d = res.design
    spread = params.estimate_spread if params is not None else GenParams.estimate_spread
    est = estimate_balances(d.balances[d.served], spread, seed)
    summary = {"status": res.status, "objective": res.objective,
               "best_bound": res.best_bound, "nodes": res.nodes}
    doc = formats.design_doc(d, est, summary, spread, seed)
    return res, est, doc


def run_jam(ji: JammingInstance, mode: str, band_frac: float, bands: tuple[int, int],
            policy: str, limits: Limits) -> JamOutcome:
    t0 = time.monotonic()
    nominal = solve_nominal(ji, limits)
    limit = nominal.status == "budget-limit"
    report = None
    if mode == "robust":
        mb = bands_for(ji.nominal_balances, ji.epsilon, band_frac, bands[0], bands[1], policy)
        report = solve_robust(ji, mb, limits, nominal=nominal)
        limit = limit or report.limit_reached
    wall = time.monotonic() - t0
    return JamOutcome(ji, nominal.plan, report, nominal.status, wall, limit)


def plan_document(out: JamOutcome, mode: str, band_frac: float, bands, policy) -> dict:
    ji = out.ji
    tp = ji.tp_ids
    if mode == "robust" and out.robust is not None:
        r = out.robust
        plan = r.plan
        extra = {"status": r.status, "best_bound": r.best_bound, "cuts": r.cuts,
                 "nodes": r.nodes, "wall_seconds": round(r.wall_seconds, 3),
                 "bands": {"fraction": band_frac, "k_minus": bands[0], "k_plus": bands[1],
                           "policy": policy, "scope": r.scope},
                 "audit": None if r.audit is None else {
                     "robust": r.audit.robust, "method": r.audit.method,
                     "witness": None if r.audit.witness is None else
                     [int(ji.tp_ids[r.audit.witness[0]]), int(r.audit.witness[1])]}}
    else:
        plan = out.nominal_plan
        extra = {"status": out.nominal_status, "cuts": 0, "bands": None, "audit": None,
                 "wall_seconds": round(out.wall, 3)}
    if plan is None:
        return formats.plan_doc(mode, tp, {}, [], profit=None, cost=None, **extra)
    return formats.plan_doc(mode, tp, plan.y, tp[plan.claimed], profit=plan.profit(ji),
                            cost=plan.cost(ji), **extra)


def report_for(run_id: str, net, ji: JammingInstance, out: JamOutcome) -> list[str]:
    nom = out.nominal_plan.n_jammed if out.nominal_plan is not None else None
    rob = por = cuts = None
    if out.robust is not None and out.robust.plan is not None:
        rob = out.robust.n_jammed_robust
        cuts = out.robust.cuts
        por = price_of_robustness(nom, rob) if nom else 0.0
    return formats.report_row(run_id, net.n_tps, net.n_trxs, ji.n_tps, ji.n_jammers, nom,
                              rob, por, cuts, out.wall)


# commands ------------------------------------------------------------------

def cmd_generate(args) -> int:
    out = Path(args.out)
    if args.example:
        sc = single_tp_scenario(args.band_frac)
        inst = formats.instance_doc(sc.net, _example_skeleton(sc), None)
        formats.write_atomic(out, formats.dump(inst))
        dpath = out.with_name(out.stem + ".design.json")
        ddoc = formats.design_doc(sc.design, sc.ji.nominal_balances,
                                  {"status": "fixed", "objective": None,
                                   "best_bound": None, "nodes": 0})
        formats.write_atomic(dpath, formats.dump(ddoc))
        print(f"wrote {out} and {dpath}")
        return EXIT_OK
    params = gen_params(args)
    net, skel = generate(params)
    formats.write_atomic(out, formats.dump(formats.instance_doc(net, skel, params)))
    print(f"wrote {out}: |T|={net.n_tps} |S|={net.n_trxs} |J|={len(skel.jammer_xy)}")
    return EXIT_OK


def _example_skeleton(sc):
    from .instgen import JammerSkeleton
    from .netmodel import linear_to_db
    ji = sc.ji
    return JammerSkeleton(jammer_xy=ji.jammer_xy, costs=ji.costs,
                          typology_dbm=linear_to_db(ji.typology_powers),
                          jam_fading_db=linear_to_db(ji.jam_fading), budget=ji.budget,
                          profits=ji.profits, population=np.ones(ji.n_tps))


def cmd_design(args) -> int:
    net, _, params = load_instance(args.instance)
    res, _, doc = run_design(net, params, limits_from(args), args.seed)
    formats.write_atomic(args.out, formats.dump(doc))
    print(f"|T*| = {res.n_served}  (status {res.status})")
    return EXIT_LIMIT if res.limit_reached else EXIT_OK


def cmd_jam(args) -> int:
    net, skel, _ = load_instance(args.instance)
    design, est = formats.parse_design(formats.read_json(args.design), net)
    ji = jamming_instance(net, skel, design, est)
    out = run_jam(ji, args.mode, args.band_frac, args.bands, args.policy, limits_from(args))
    doc = plan_document(out, args.mode, args.band_frac, args.bands, args.policy)
    formats.write_atomic(args.out, formats.dump(doc))
    row = report_for(args.id, net, ji, out)
    csv_text = formats.report_csv([row])
    if args.report:
        formats.write_atomic(args.report, csv_text)
    sys.stdout.write(csv_text)
    return EXIT_LIMIT if out.limit else EXIT_OK


def cmd_audit(args) -> int:
    net, skel, _ = load_instance(args.instance)
    design, est = formats.parse_design(formats.read_json(args.design), net)
    ji = jamming_instance(net, skel, design, est)
    plan_d = formats.parse_plan(formats.read_json(args.plan))
    pos = {int(t): i for i, t in enumerate(ji.tp_ids)}
    if list(plan_d["tp_ids"]) != [int(t) for t in ji.tp_ids]:
        raise formats.SchemaError("plan does not belong to this design")
    z = np.zeros(ji.n_tps)
    z[[pos[int(t)] for t in plan_d["jammed"]]] = 1
    plan = JammingPlan(z, plan_d["activations"])
    if not plan.is_feasible(ji):
        print("plan is not nominally feasible")
        return EXIT_NOT_ROBUST
    mb = bands_for(ji.nominal_balances, ji.epsilon, args.band_frac, args.bands[0],
                   args.bands[1], args.policy)
    verdict = audit_robust(plan, ji, mb, CLAIMED)
    if verdict.robust:
        print(f"robust ({verdict.method})")
        return EXIT_OK
    t, k = verdict.witness
    print(f"not robust ({verdict.method}): TP {int(ji.tp_ids[t])} is denied by a "
          f"deviation in band {k}")
    return EXIT_NOT_ROBUST


def benchmark_spec(seed: int = 0, **overrides) -> dict:
    runs = []
    for k, (rid, t, s, j) in enumerate(BENCHMARK_DIMS):
        run = {"id": rid, "params": {"n_tps": t, "n_trxs": s, "n_jammers": j,
                                     "seed": seed + k}}
        run.update(overrides)
        runs.append(run)
    return {"runs": runs}


def load_spec(text: str) -> dict:
    if text == "benchmark":
        return benchmark_spec()
    spec = formats.read_json(text)
    runs = spec.get("runs") if isinstance(spec, dict) else None
    if not isinstance(runs, list) or not runs:
        raise formats.SchemaError("experiment spec needs a nonempty 'runs' list")
    seeds = [GenParams.from_dict(r.get("params", {})).seed for r in runs]
    if len(set(seeds)) != len(seeds):
        raise formats.SchemaError("seeds must be unique per run")
    return spec


def batch_row(run: dict, defaults: argparse.Namespace, out_dir: Path | None):
    """generate -> design -> jam (nominal and robust) for one spec row."""
    params = GenParams.from_dict(run.get("params", {}))
    if "budget_fraction" in run:
        params.budget_fraction = float(run["budget_fraction"])
    lim = run.get("limits", {})
    limits = Limits(node_limit=lim.get("node_limit", defaults.node_limit),
                    time_limit=lim.get("time_limit", defaults.time_limit),
                    rel_gap=lim.get("rel_gap", 0.0))
    band_frac = float(run.get("band_fraction", defaults.band_frac))
    bands = parse_bands(run["bands"]) if "bands" in run else defaults.bands
    policy = run.get("bound_policy", defaults.policy)
    rid = str(run.get("id", f"seed{params.seed}"))
    net, skel = generate(params)
    dres, est, ddoc = run_design(net, params, limits, params.seed)
    ji = jamming_instance(net, skel, dres.design, est)
    out = run_jam(ji, "robust", band_frac, bands, policy, limits)
    if out_dir is not None:
        formats.write_atomic(out_dir / f"{rid}.instance.json",
                             formats.dump(formats.instance_doc(net, skel, params)))
        formats.write_atomic(out_dir / f"{rid}.design.json", formats.dump(ddoc))
        formats.write_atomic(out_dir / f"{rid}.plan.json",
                             formats.dump(plan_document(out, "robust", band_frac, bands,
                                                        policy)))
    status = {"id": rid, "design": dres.status, "nominal": out.nominal_status,
              "robust": out.robust.status if out.robust else None,
              "limit": out.limit or dres.limit_reached}
    return report_for(rid, net, ji, out), out, status


def cmd_batch(args) -> int:
    spec = load_spec(args.spec)
    out_dir = Path(args.out).parent / (Path(args.out).stem + "_runs") if args.keep else None
    rows, pors, statuses, failed = [], [], [], False
    for run in spec["runs"]:
        try:
            row, out, status = batch_row(run, args, out_dir)
        except (ValueError, SolverFailure) as exc:
            log.error("run %s failed: %s", run.get("id"), exc)
            failed = True
            statuses.append({"id": run.get("id"), "error": str(exc)})
            continue
        rows.append(row)
        statuses.append(status)
        if row[7]:
            pors.append(float(row[7]))
    mean = float(np.mean(pors)) if pors else None
    text = formats.report_csv(rows, mean)
    formats.write_atomic(args.out, text)
    formats.write_atomic(Path(args.out).with_suffix(".status.json"),
                         json.dumps({"runs": statuses}, indent=1) + "\n")
    sys.stdout.write(text)
    if mean is not None:
        print(f"mean PoR% = {mean:.2f}")
    if failed:
        return EXIT_SOLVER
    return EXIT_LIMIT if any(s.get("limit") for s in statuses) else EXIT_OK


# parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robjam", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def limits(sp, node_limit=None, time_limit=None):
        sp.add_argument("--node-limit", type=int, default=node_limit)
        sp.add_argument("--time-limit", type=float, default=time_limit)
        sp.add_argument("--gap", type=float, default=0.0, help="relative MIP gap")

    def band_flags(sp):
        sp.add_argument("--band-frac", type=float, default=0.2)
        sp.add_argument("--bands", type=parse_bands, default=(-2, 2))
        sp.add_argument("--policy", choices=[DEFAULT_POLICY, NOMINAL_POLICY],
                        default=DEFAULT_POLICY, help="band cardinality bounds")

    g = sub.add_parser("generate", help="write a synthetic instance")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--tps", type=int, default=100)
    g.add_argument("--trxs", type=int, default=6)
    g.add_argument("--jammers", type=int, default=15)
    g.add_argument("--typologies", type=int, default=3)
    g.add_argument("--budget-frac", type=float, default=0.3)
    g.add_argument("--band-frac", type=float, default=0.2)
    g.add_argument("--example", action="store_true",
                   help="write the single-TP worked example (instance + design)")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("design", help="solve the power/assignment model")
    d.add_argument("instance")
    d.add_argument("--seed", type=int, default=0, help="seed of the balance estimates")
    limits(d, node_limit=200, time_limit=120.0)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_design)

    j = sub.add_parser("jam", help="nominal or robust jamming plan")
    j.add_argument("instance")
    j.add_argument("design")
    j.add_argument("--mode", choices=["nominal", "robust"], default="robust")
    band_flags(j)
    limits(j)
    j.add_argument("--id", default="run")
    j.add_argument("--report", help="also write the CSV row here")
    j.add_argument("--out", required=True)
    j.set_defaults(func=cmd_jam)

    b = sub.add_parser("batch", help="run an experiment spec ('benchmark' for the preset)")
    b.add_argument("spec")
    band_flags(b)
    limits(b, node_limit=2000, time_limit=600.0)
    b.add_argument("--keep", action="store_true", help="keep per-run documents")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_batch)

    a = sub.add_parser("audit", help="check a plan against every band assignment")
    a.add_argument("instance")
    a.add_argument("design")
    a.add_argument("plan")
    band_flags(a)
    a.set_defaults(func=cmd_audit)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (formats.SchemaError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
