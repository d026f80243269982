"""Final AR of mutations vs random 1-swap on the 6-node instance across step budgets."""
import argparse
import os

from droneq import data_path
from droneq.instance import load_tsp
from droneq.plots import line_chart
from droneq.quantum import TspHamiltonian, run_qswap


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--budgets", default="30,50,75,100,150")
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--samples", type=int, default=10)
    ap.add_argument("--out", default="out")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    H = TspHamiltonian.build(load_tsp(data_path("tsp6.json")).d)
    print("steps  mutations_wins  mean_AR_mut  mean_AR_1swap")
    for steps in map(int, args.budgets.split(",")):
        wins, am, a1 = 0, 0.0, 0.0
        for seed in range(args.seeds):
            m = run_qswap(H, steps, "mutations", seed=seed, patience=steps + 1).ar_trace[-1]
            o = run_qswap(H, steps, "1swap", seed=seed, samples=args.samples, patience=steps + 1).ar_trace[-1]
            wins += m <= o
            am += m / args.seeds
            a1 += o / args.seeds
        print(f"{steps:5d}  {wins:4d}/{args.seeds:<9d} {am:11.4f}  {a1:13.4f}")

    # AR curves for one seed, all three strategies
    series = {}
    for name in ("1swap", "both", "mutations"):
        run = run_qswap(H, 100, name, seed=0, samples=args.samples, patience=101)
        series[name] = list(enumerate(run.ar_trace))
    path = os.path.join(args.out, "strategies.svg")
    line_chart(series, path, title="Q-SWAP on 6 nodes")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
