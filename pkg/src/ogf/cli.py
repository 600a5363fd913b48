"""Command-line entry point.

Subcommands mirror the processing pipeline: `import` normalizes network
data to the canonical JSON schema, `build` emits an optimization model,
`solve` runs the embedded solver, `verify` scores a solution against the
nonlinear physics, `sweep-resistor` reproduces the resistor model error
experiment, and `batch` runs a directory of nominations.

Exit codes: 0 success, 1 infeasible, 2 time limit, 3 input error,
4 internal error.  Set OGF_LOG to control log verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import eos, ingest, verify
from .formulation import FormulationOptions, Nomination, NominationInjection, build
from .network import validate
from .optmodel import export, load_model_json
from .solver import SolveOptions, outer_approx_misoc, solve_milp

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_TIME_LIMIT = 2
EXIT_INPUT = 3
EXIT_INTERNAL = 4

SOLUTION_SCHEMA = "ogf-solution/1"


class InputError(ValueError):
    pass


def _setup_logging():
    level = os.environ.get("OGF_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _write(path: str, text: str):
    Path(path).write_text(text)


def _load_network(path: str):
    net = ingest.network_from_json(_read(path))
    report = validate(net)
    for v in report.warnings:
        logging.getLogger("ogf.cli").warning("%s: %s", v.component, v.message)
    if not report.ok:
        msgs = "; ".join(f"{v.component}: {v.message}" for v in report.errors)
        raise InputError(f"network {path} is invalid: {msgs}")
    return net


def _nomination_from_meta(meta: dict) -> Nomination | None:
    data = meta.get("nomination_data")
    if not data:
        return None
    return Nomination(
        meta.get("nomination") or "nomination",
        withdrawals={k: float(v) for k, v in data.get("withdrawals", {}).items()},
        injections={k: NominationInjection(float(v["s_max"]), float(v["cost"]))
                    for k, v in data.get("injections", {}).items()},
        seed=meta.get("seed"),
        feasible_objective=data.get("feasible_objective"),
    )


def _context_from_meta(network, meta: dict):
    c = meta.get("context", {})
    return eos.build_context(network, l0=c.get("l0", 1000.0),
                             p0=c.get("p0", 5e6), v0=c.get("v0", 1.0),
                             rho0=c.get("rho0"),
                             ideal_eos=bool(meta.get("ideal_eos", False)))


# -- subcommands -----------------------------------------------------------


def cmd_import(args) -> int:
    net = ingest.parse_network(_read(args.net), args.format)
    if args.groups:
        groups = ingest.parse_decision_groups(_read(args.groups), net)
        net = type(net)(
            nodes=net.nodes, pipes=net.pipes, short_pipes=net.short_pipes,
            resistors=net.resistors, loss_resistors=net.loss_resistors,
            compressors=net.compressors, valves=net.valves,
            control_valves=net.control_valves, injections=net.injections,
            withdrawals=net.withdrawals, decision_groups=groups,
            gas=net.gas, name=net.name)
    _write(args.out, ingest.network_to_json(net))
    print(f"wrote {args.out}: {len(net.nodes)} nodes, "
          f"{len(list(net.arcs()))} arcs, {len(net.decision_groups)} groups")
    return EXIT_OK


def cmd_build(args) -> int:
    net = _load_network(args.net)
    nom = None
    if args.nomination:
        nom = ingest.parse_nomination(_read(args.nomination), net,
                                      cost_seed=args.cost_seed)
    options = FormulationOptions(relaxation=args.model, refine_rounds=args.refine,
                                 ideal_eos=args.ideal_eos)
    ctx = eos.build_context(net, ideal_eos=args.ideal_eos)
    model = build(net, nom, ctx, options)
    suffix = Path(args.out).suffix.lower()
    fmt = {".mps": "mps", ".cbf": "cbf", ".json": "model-json"}.get(suffix)
    if fmt is None:
        raise InputError(f"cannot infer export format from {args.out!r}; "
                         "use a .json, .mps or .cbf extension")
    _write(args.out, export(model, fmt))
    print(f"wrote {args.out}: {len(model.variables)} variables, "
          f"{len(model.constraints)} rows, {len(model.cones)} cones")
    return EXIT_OK


def cmd_solve(args) -> int:
    model = load_model_json(_read(args.model))
    if model.nonlinear:
        raise InputError("model carries nonlinear rows; export it for an "
                         "external global solver instead")
    options = SolveOptions(time_limit=args.time_limit, abs_gap=args.gap,
                           rel_gap=args.gap, seed=args.seed)
    sol = (outer_approx_misoc(model, options) if model.cones
           else solve_milp(model, options))
    doc = {
        "schema": SOLUTION_SCHEMA,
        "status": sol.status,
        "objective": sol.objective,
        "bound": sol.bound,
        "values": sol.values,
        "stats": {k: v for k, v in sol.stats.items() if k != "bound_history"},
        "meta": model.meta,
    }
    _write(args.out, json.dumps(doc, indent=1))
    print(f"status={sol.status} objective={sol.objective} bound={sol.bound}")
    if sol.status == "infeasible":
        return EXIT_INFEASIBLE
    if sol.status == "time-limit":
        return EXIT_TIME_LIMIT
    if sol.status in ("unbounded", "error"):
        print(sol.stats.get("message", ""), file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def cmd_verify(args) -> int:
    net = _load_network(args.net)
    doc = json.loads(_read(args.solution))
    if doc.get("schema") != SOLUTION_SCHEMA:
        raise InputError(f"expected {SOLUTION_SCHEMA!r} solution file")
    meta = doc.get("meta", {})
    ctx = _context_from_meta(net, meta)
    nom = _nomination_from_meta(meta)
    report = verify.residuals(net, ctx, doc.get("values", {}), tolerance=args.tol,
                              nomination=nom)
    if nom and nom.feasible_objective is not None and doc.get("objective") is not None:
        report.relative_gap_pct = verify.relative_gap(doc["objective"],
                                                      nom.feasible_objective)
    _write(args.out, report.to_json())
    print(f"max residual {report.max_abs_residual:.3e} "
          f"-> {'feasible' if report.feasible else 'infeasible'} at {args.tol:g}")
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


def cmd_sweep(args) -> int:
    net = _load_network(args.net)
    rows = verify.resistor_error_sweep(net, args.arc, points=args.points)
    _write(args.out, verify.sweep_to_csv(rows))
    print(f"wrote {args.out}: {len(rows)} rows")
    return EXIT_OK


def cmd_batch(args) -> int:
    net = _load_network(args.net)
    nom_dir = Path(args.nominations)
    if not nom_dir.is_dir():
        raise InputError(f"{args.nominations} is not a directory")
    noms = []
    for path in sorted(nom_dir.iterdir()):
        if path.suffix.lower() in (".json", ".scn", ".xml"):
            noms.append(ingest.parse_nomination(path.read_text(), net,
                                                cost_seed=args.cost_seed,
                                                nomination_id=path.stem))
    if not noms:
        raise InputError(f"no nomination files found in {args.nominations}")
    ctx = eos.build_context(net, ideal_eos=args.ideal_eos)
    options = FormulationOptions(relaxation=args.model, refine_rounds=args.refine,
                                 ideal_eos=args.ideal_eos)
    result = verify.run_batch(net, noms, ctx, options,
                              SolveOptions(time_limit=args.time_limit),
                              workers=args.workers)
    _write(args.out, result.to_csv())
    counts: dict[str, int] = {}
    for row in result.rows:
        counts[row.status] = counts.get(row.status, 0) + 1
    print(f"wrote {args.out}: " + ", ".join(f"{v} {k}" for k, v in sorted(counts.items())))
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ogf", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("import", help="normalize network data to canonical JSON")
    p.add_argument("--net", required=True)
    p.add_argument("--format", required=True, choices=["gaslib-xml", "json"])
    p.add_argument("--groups", help="decision-group file (XML or JSON)")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_import)

    p = sub.add_parser("build", help="build an optimization model")
    p.add_argument("--net", required=True)
    p.add_argument("--nomination")
    p.add_argument("--model", required=True, choices=["minlp", "lr", "misoc"])
    p.add_argument("--refine", type=int, default=0)
    p.add_argument("--ideal-eos", action="store_true")
    p.add_argument("--cost-seed", type=int, default=0)
    p.add_argument("--out", required=True,
                   help="model file; .json, .mps or .cbf extension")
    p.set_defaults(fn=cmd_build)

    p = sub.add_parser("solve", help="solve a model with the embedded solver")
    p.add_argument("--model", required=True)
    p.add_argument("--time-limit", type=float, default=1000.0)
    p.add_argument("--gap", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("verify", help="check a solution against the physics")
    p.add_argument("--net", required=True)
    p.add_argument("--solution", required=True)
    p.add_argument("--tol", type=float, default=verify.DEFAULT_TOLERANCE)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("sweep-resistor",
                       help="outlet-pressure error sweep for one resistor")
    p.add_argument("--net", required=True)
    p.add_argument("--arc", required=True)
    p.add_argument("--points", type=int, default=500)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("batch", help="solve every nomination in a directory")
    p.add_argument("--net", required=True)
    p.add_argument("--nominations", required=True)
    p.add_argument("--model", default="lr", choices=["lr", "misoc"])
    p.add_argument("--refine", type=int, default=0)
    p.add_argument("--ideal-eos", action="store_true")
    p.add_argument("--cost-seed", type=int, default=0)
    p.add_argument("--time-limit", type=float, default=1000.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_batch)
    return ap


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = make_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (InputError, ingest.ParseError, ValueError, KeyError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - defensive
        logging.getLogger("ogf.cli").exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
