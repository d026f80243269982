"""Solve the bundled toy mission over several seeds and report makespan, hits and timing."""
import argparse
import json
import time

from droneq import data_path
from droneq.instance import load_instance
from droneq.milp import rewrite_bases
from droneq.milp.enumerate import best_makespan
from droneq.solvers import PipelineConfig, PipelineError, solve_pipeline


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--restarts", type=int, default=1000)
    ap.add_argument("--recharge-copies", type=int, default=1)
    args = ap.parse_args()

    toy = load_instance(data_path("toy_mission.json"))
    opt = best_makespan(rewrite_bases(toy, args.recharge_copies))
    print(f"brute-force optimum: {opt}")
    rows = []
    for seed in range(args.seeds):
        t0 = time.perf_counter()
        try:
            res = solve_pipeline(toy, PipelineConfig(restarts=args.restarts, seed=seed,
                                                     recharge_copies=args.recharge_copies))
            span, battery = res.makespan, res.routes.routes[0].battery[-1]
        except PipelineError as err:
            span, battery = None, None
            print(f"seed {seed}: {err}")
        dt = time.perf_counter() - t0
        rows.append({"seed": seed, "makespan": span, "final_battery": battery, "seconds": round(dt, 2)})
        print(json.dumps(rows[-1]))
    hits = sum(r["makespan"] == opt for r in rows)
    print(f"optimal in {hits}/{len(rows)} seeds")


if __name__ == "__main__":
    main()
