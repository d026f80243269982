"""Command-line entry point: solve, qswap, vqe, export, validate.

Exit codes: 0 success, 1 infeasible or failed optimization, 2 usage or I/O error.
Every JSON/CSV artifact embeds the seed and the full run configuration and no
wall-clock data, so re-running the embedded config reproduces it byte for byte.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _lambdas(items) -> dict:
    out = {}
    for item in items or ():
        fam, sep, val = item.partition("=")
        if not sep or not fam:
            raise UsageError(f"--lambda expects family=value, got {item!r}")
        try:
            num = float(val)
        except ValueError as exc:
            raise UsageError(f"--lambda value {val!r} is not a number") from exc
        out[fam] = int(num) if num.is_integer() else num
    return out


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _run_config(args) -> dict:
    """Everything that determines the outputs; the seed is always present."""
    skip = {"func", "out"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    cfg["seed"] = int(args.seed)
    return cfg


def _load_mission(path):
    from .instance import InstanceError, load_instance

    try:
        return load_instance(path)
    except FileNotFoundError as exc:
        raise UsageError(f"instance file not found: {path}") from exc
    except (InstanceError, OSError) as exc:
        raise UsageError(f"cannot load instance {path}: {exc}") from exc


def _load_tsp(args):
    from .instance import InstanceError, TspInstance, load_tsp

    if args.instance:
        try:
            return load_tsp(args.instance)
        except FileNotFoundError as exc:
            raise UsageError(f"instance file not found: {args.instance}") from exc
        except (InstanceError, OSError) as exc:
            raise UsageError(f"cannot load instance {args.instance}: {exc}") from exc
    if args.n is None:
        raise UsageError("give --instance or --n")
    if not 2 <= args.n <= 8:
        raise UsageError(f"--n must be between 2 and 8, got {args.n}")
    rng = np.random.default_rng(args.seed)
    return TspInstance.from_coordinates(np.round(rng.uniform(0, 10, (args.n, 2)), 3))


# ---------------------------------------------------------------- commands


def cmd_solve(args) -> int:
    from .milp.routes import validate_routes
    from .plots import route_map
    from .solvers.pipeline import PipelineConfig, PipelineError, solve_pipeline

    inst = _load_mission(args.instance)
    out = _out_dir(args)
    cfg = PipelineConfig(
        restarts=args.restarts,
        sweeps=args.sweeps,
        seed=args.seed,
        recharge_copies=args.recharge_copies,
        objective=args.objective,
        lambdas=_lambdas(args.lambda_) or None,
        split=args.split,
        budget_ms=args.budget_ms,
    )
    meta = {"run": _run_config(args), "pipeline": cfg.to_json()}
    try:
        res = solve_pipeline(inst, cfg)
    except PipelineError as exc:
        _dump({**meta, "valid": False, "violations": [{"tag": "pipeline", "message": str(exc)}]},
              out / "validation.json")
        print(f"solve failed at {exc}", file=sys.stderr)
        return EXIT_FAIL
    report = validate_routes(res.instance, res.routes)
    _dump({**meta, **res.routes.to_json(res.instance), "log": res.log}, out / "routes.json")
    _dump({**meta, **report.to_json()}, out / "validation.json")
    route_map(res.instance, res.routes, out / "routes.svg")
    print(f"makespan {res.makespan}  valid {report.ok}  -> {out}")
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_validate(args) -> int:
    from .milp.build import rewrite_bases
    from .milp.routes import RouteSet, validate_routes

    inst = _load_mission(args.instance)
    try:
        data = json.loads(Path(args.routes).read_text())
        routes = RouteSet.from_json(data)
    except FileNotFoundError as exc:
        raise UsageError(f"routes file not found: {args.routes}") from exc
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read routes {args.routes}: {exc}") from exc
    copies = args.recharge_copies
    if copies is None:
        copies = data.get("pipeline", {}).get("recharge_copies", 2)
    report = validate_routes(rewrite_bases(inst, copies), routes)
    body = {"run": _run_config(args), **report.to_json()}
    if args.out:
        _dump(body, _out_dir(args) / "validation.json")
    print(json.dumps(report.to_json(), indent=2))
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_export(args) -> int:
    from .milp.build import FormulationOptions, build_milp, rewrite_bases
    from .milp.lpfile import save_lp
    from .milp.model import ModelError
    from .qubo import auto_lambda, milp_to_qubo, save_qubo

    inst = _load_mission(args.instance)
    out = _out_dir(args)
    try:
        model = build_milp(rewrite_bases(inst, args.recharge_copies),
                           FormulationOptions(objective=args.objective, crash=not args.no_crash))
    except ModelError as exc:
        print(f"model build failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    lam = {**auto_lambda(model), **_lambdas(args.lambda_)}
    q = milp_to_qubo(model, lam)
    save_lp(model, out / "model.lp")
    save_qubo(q, out / "model.qubo", out / "model.qubo.decode.json")
    _dump({"run": _run_config(args), "variables": model.n_vars, "constraints": len(model.constraints),
           "qubo_bits": q.n, "lambdas": q.lambdas}, out / "export.json")
    print(f"{model.n_vars} variables, {len(model.constraints)} rows, {q.n} QUBO bits -> {out}")
    return EXIT_OK


def _tour_json(H, labels, perm) -> dict:
    from .quantum.state import canonical_tour

    tour = canonical_tour(perm)
    return {"tour": [labels[i] for i in tour], "tour_index": list(map(int, tour)),
            "cost": float(H.tour_cost(tour))}


def cmd_qswap(args) -> int:
    from .plots import line_chart
    from .quantum.qswap import run_qswap
    from .quantum.state import TspHamiltonian

    tsp = _load_tsp(args)
    if args.steps < 0:
        raise UsageError("--steps must be non-negative")
    out = _out_dir(args)
    H = TspHamiltonian.build(tsp.d, fix_first=args.fix_first)
    run = run_qswap(H, args.steps, args.strategy, args.seed, samples=args.samples, rounds=args.rounds,
                    shots=args.shots, patience=args.patience)
    run.config.update({"instance": args.instance, "n": H.n})
    stem = f"qswap_{args.strategy}"
    run.write_csv(out / f"{stem}.csv")
    p = run.state.probabilities()
    k = int(np.argmax(p))
    best = {
        "run": _run_config(args),
        "final_ar": run.ar_trace[-1],
        "steps_done": len(run.rows) - 1,
        "h_min": H.h_min,
        "h_max": H.h_max,
        "most_likely": {**_tour_json(H, tsp.labels, H.space.perms[k]), "probability": float(p[k])},
        "optimal": _tour_json(H, tsp.labels, H.space.perms[int(np.argmin(H.costs))]),
    }
    _dump(best, out / f"{stem}_best.json")
    line_chart({args.strategy: [(r["step"], r["AR"]) for r in run.rows]}, out / f"{stem}.svg",
               title=f"Q-SWAP {args.strategy}, n={H.n}")
    print(f"final AR {run.ar_trace[-1]:.6f} after {len(run.rows) - 1} steps -> {out}")
    return EXIT_OK


def cmd_vqe(args) -> int:
    from .plots import line_chart
    from .quantum.state import TspHamiltonian
    from .quantum.vqe import VqeConfig, minimal_sorting_network, vqe_apply, vqe_optimize

    tsp = _load_tsp(args)
    if tsp.n < 2:
        raise UsageError(f"VQE needs at least 2 nodes, got {tsp.n}")
    out = _out_dir(args)
    net = minimal_sorting_network(tsp.n)
    print(f"sorting network: {net.n_params} parameters")
    H = TspHamiltonian.build(tsp.d)
    cfg = VqeConfig(restarts=args.restarts, method=args.method, maxiter=args.maxiter)
    res = vqe_optimize(net, H, cfg, np.random.default_rng(args.seed))
    with open(out / "vqe_trace.csv", "w", newline="") as fh:
        for k, v in sorted(_run_config(args).items()):
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh)
        w.writerow(["evaluation", "AR"])
        for i, ar in enumerate(res.trace):
            w.writerow([i, f"{ar:.12g}"])
    state = vqe_apply(net, res.params)
    p = state.probabilities()
    k = int(np.argmax(p))
    _dump({
        "run": _run_config(args),
        "n_params": net.n_params,
        "comparators": [list(c) for c in net.comparators],
        "best_ar": res.ar,
        "restart_ars": res.restart_ars,
        "params": [float(x) for x in res.params],
        "most_likely": {**_tour_json(H, tsp.labels, state.space.perms[k]), "probability": float(p[k])},
        "optimal": _tour_json(H, tsp.labels, H.space.perms[int(np.argmin(H.costs))]),
    }, out / "vqe_best.json")
    line_chart({"VQE": list(enumerate(res.trace))}, out / "vqe_trace.svg", xlabel="evaluation",
               title=f"VQE n={H.n}")
    print(f"best AR {res.ar:.8f} over {args.restarts} restarts -> {out}")
    return EXIT_OK if res.ar <= 1.01 else EXIT_FAIL


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="droneq", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, instance_required=True):
        sp.add_argument("--instance", required=instance_required, help="instance JSON file")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--budget-ms", type=int, default=None, help="wall-clock cap (breaks byte-identity)")
        sp.add_argument("--lambda", dest="lambda_", action="append", metavar="FAMILY=VALUE",
                        help="penalty weight override for one constraint family (repeatable)")
        sp.add_argument("--strategy", choices=["1swap", "both", "mutations"], default="mutations")
        sp.add_argument("--steps", type=int, default=50)
        sp.add_argument("--restarts", type=int, default=None)
        sp.add_argument("--shots", type=int, default=None, help="finite-shot estimates (default exact)")

    s = sub.add_parser("solve", help="MILP -> QUBO -> annealing pipeline")
    common(s)
    s.add_argument("--sweeps", type=int, default=1000)
    s.add_argument("--recharge-copies", type=int, default=2)
    s.add_argument("--objective", choices=["makespan", "energy"], default="makespan")
    s.add_argument("--split", type=float, default=0.5, help="share of remaining restarts per outer iteration")
    s.set_defaults(func=cmd_solve, restarts_default=1000)

    s = sub.add_parser("export", help="write LP and QUBO files")
    common(s)
    s.add_argument("--recharge-copies", type=int, default=2)
    s.add_argument("--objective", choices=["makespan", "energy"], default="makespan")
    s.add_argument("--no-crash", action="store_true")
    s.set_defaults(func=cmd_export, restarts_default=None)

    s = sub.add_parser("validate", help="check a routes JSON against an instance")
    common(s)
    s.add_argument("--routes", required=True)
    s.add_argument("--recharge-copies", type=int, default=None)
    s.set_defaults(func=cmd_validate, out=None, restarts_default=None)

    s = sub.add_parser("qswap", help="Q-SWAP on a TSP instance")
    common(s, instance_required=False)
    s.add_argument("--n", type=int, default=None, help="random instance size when no --instance")
    s.add_argument("--samples", type=int, default=10)
    s.add_argument("--rounds", type=int, default=3)
    s.add_argument("--patience", type=int, default=5)
    s.add_argument("--fix-first", action="store_true", help="pin node 0 at time 0")
    s.set_defaults(func=cmd_qswap, restarts_default=None)

    s = sub.add_parser("vqe", help="sorting-network VQE on a TSP instance")
    common(s, instance_required=False)
    s.add_argument("--n", type=int, default=None, help="random instance size when no --instance")
    s.add_argument("--method", choices=["nelder-mead", "gd"], default="nelder-mead")
    s.add_argument("--maxiter", type=int, default=4000)
    s.set_defaults(func=cmd_vqe, restarts_default=10)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.restarts is None:
        args.restarts = args.restarts_default
    del args.restarts_default
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
