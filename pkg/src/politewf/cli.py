"""Command line front end.

Verbs: ``solve`` one scenario, ``batch`` many seeds, ``region`` a rate-region
boundary sweep, ``check`` the stationarity of a saved solution.  All rates
are bits/channel use at this level; powers are printed linear and in dB.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .scenario import (
    PRESETS,
    SOLVERS,
    RunRecord,
    Scenario,
    batch,
    build_network,
    generate_scenario,
    pairs_to_matrix,
    region,
    run,
    trace_csv,
)
from .solvers import Targets, check_optimality


def _add_scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=sorted(PRESETS), help="named scenario preset")
    p.add_argument("--config", type=Path, help="scenario JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--solver", choices=SOLVERS, help="solver to run")
    p.add_argument("--targets", help="comma-separated per-link targets in bits")
    p.add_argument("--rs", type=float, help="total rate in bits for presets with target splits")
    p.add_argument("--pt", type=float, help="total power budget (feasibility solvers)")
    p.add_argument("--order-opt", action="store_true", help="improve DPC/SIC orders first")
    p.add_argument("--multistart", type=int, default=1, metavar="N")
    p.add_argument("--rounds", type=float, default=3.5, help="training rounds for prd (x.5 steps)")
    p.add_argument("--beta", type=float, default=1.0, help="target inflation for prd")
    p.add_argument("--pmax", type=float, help="per-transmitter power cap for prd")
    p.add_argument("--out", type=Path, help="output directory")


def _scenario_from_args(args) -> Scenario:
    kwargs = {"seed": args.seed}
    if args.targets:
        kwargs["targets_bits"] = [float(v) for v in args.targets.split(",")]
    if args.rs is not None:
        kwargs["rs_bits"] = args.rs
    if args.config:
        sc = generate_scenario(config=json.loads(args.config.read_text()))
        if args.seed:
            sc = dataclasses.replace(sc, seed=args.seed)
        if "targets_bits" in kwargs:
            sc = dataclasses.replace(sc, targets_bits=tuple(kwargs["targets_bits"]))
    elif args.preset:
        sc = generate_scenario(preset=args.preset, **kwargs)
    else:
        raise SystemExit("need --preset or --config")
    options = dict(sc.options)
    if args.multistart > 1:
        options["multistart"] = args.multistart
    if args.order_opt:
        options["order_opt"] = True
    if sc.solver == "prd" or (args.solver == "prd"):
        options["rounds"] = args.rounds
        options["beta"] = args.beta
        if args.pmax is not None:
            options["pmax"] = args.pmax
    sc = dataclasses.replace(sc, options=options)
    if args.solver:
        sc = dataclasses.replace(sc, solver=args.solver)
    if args.pt is not None:
        sc = dataclasses.replace(sc, p_total=args.pt)
    return sc


def _emit_record(record: RunRecord, sc: Scenario, out: Path | None) -> None:
    summary = dict(json.loads(record.to_json()))
    summary["scenario"] = sc.to_dict()
    text = json.dumps(summary, sort_keys=True, separators=(",", ":"))
    if out:
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.json").write_text(text)
        (out / "trace.csv").write_text(trace_csv(record))
        print(f"wrote {out / 'summary.json'} and {out / 'trace.csv'}")
        s = record.summary
        print(f"status={s['status']} sum_power={s['sum_power']:.6g} "
              f"({_fmt_db(s['sum_power_db'])}) rates_bits={np.round(s['rate_bits'], 4).tolist()}")
    else:
        print(text)


def _fmt_db(v) -> str:
    return "-inf dB" if v is None else f"{v:.3f} dB"


def cmd_solve(args) -> int:
    sc = _scenario_from_args(args)
    record = run(sc)
    _emit_record(record, sc, args.out)
    return 0


def cmd_batch(args) -> int:
    sc = _scenario_from_args(args)
    result = batch(sc, args.seeds, jobs=args.jobs)
    out = args.out
    summary = result["summary"]
    if out:
        out.mkdir(parents=True, exist_ok=True)
        (out / "batch_summary.json").write_text(json.dumps(summary, sort_keys=True, separators=(",", ":")))
        rows = ["seed,status,sum_power,targets_met"]
        for rec in result["records"]:
            s = rec.summary
            rows.append(f"{rec.seed},{s['status']},{s['sum_power']!r},{int(s['targets_met'])}")
        (out / "batch_records.csv").write_text("\n".join(rows) + "\n")
        print(f"wrote {out / 'batch_summary.json'} and {out / 'batch_records.csv'}")
    print(json.dumps(summary, sort_keys=True, separators=(",", ":")))
    return 0


def cmd_region(args) -> int:
    from .scenario import _csv_cell

    sc = _scenario_from_args(args)
    rows = region(sc, n_rays=args.rays)
    cols = list(rows[0].keys()) if rows else []
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(_csv_cell(row[c]) for c in cols))
    text = "\n".join(lines) + "\n"
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "region.csv").write_text(text)
        print(f"wrote {args.out / 'region.csv'}")
    else:
        print(text, end="")
    return 0


def cmd_check(args) -> int:
    payload = json.loads(args.solution.read_text())
    sc = Scenario.from_dict(payload["scenario"])
    net, _ = build_network(sc)
    sigma = [pairs_to_matrix(m) for m in payload["summary"]["sigma"]]
    targets = Targets.from_bits(sc.targets_bits)
    mode = "fop" if sc.solver in ("a", "fop-pr1") else "spmp"
    rep = check_optimality(net, sigma, targets, mode=mode, p_total=sc.p_total)
    out = {
        "mode": mode,
        "max_pwf_residual": rep.max_residual,
        "pwf_residuals": rep.residuals.tolist(),
        "alpha": rep.alpha,
        "max_rate_error_nats": rep.max_rate_error,
        "power_gap": rep.power_gap,
    }
    print(json.dumps(out, sort_keys=True, separators=(",", ":")))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="politewf",
                                     description="Transmit covariance optimization for "
                                                 "MIMO interference networks")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_solve = sub.add_parser("solve", help="run one scenario")
    _add_scenario_args(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_batch = sub.add_parser("batch", help="run many seeds of a scenario")
    _add_scenario_args(p_batch)
    p_batch.add_argument("--seeds", type=int, default=100, metavar="N")
    p_batch.add_argument("--jobs", type=int, default=1, metavar="N")
    p_batch.set_defaults(func=cmd_batch)

    p_region = sub.add_parser("region", help="trace a rate-region boundary")
    _add_scenario_args(p_region)
    p_region.add_argument("--rays", type=int, default=11, metavar="N")
    p_region.set_defaults(func=cmd_region)

    p_check = sub.add_parser("check", help="check stationarity of a saved solution")
    p_check.add_argument("--solution", type=Path, required=True, help="summary.json from solve --out")
    p_check.set_defaults(func=cmd_check)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
