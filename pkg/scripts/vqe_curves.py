"""VQE restarts on the 6-node instance: AR per restart and the best convergence curve."""
import argparse
import os

import numpy as np

from droneq import data_path
from droneq.instance import load_tsp
from droneq.plots import line_chart
from droneq.quantum import TspHamiltonian, VqeConfig, minimal_sorting_network, vqe_optimize


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--restarts", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--method", default="nelder-mead")
    ap.add_argument("--out", default="out")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    H = TspHamiltonian.build(load_tsp(data_path("tsp6.json")).d)
    net = minimal_sorting_network(6)
    print(f"sorting network: {net.n_params} parameters")
    series = {}
    for k in range(args.restarts):
        res = vqe_optimize(net, H, VqeConfig(restarts=1, method=args.method), np.random.default_rng(args.seed + k))
        print(f"restart {k}: AR {res.ar:.6f} after {len(res.trace)} evaluations")
        best = np.minimum.accumulate(res.trace)
        series[f"r{k}"] = list(enumerate(best.tolist()))
    path = os.path.join(args.out, "vqe_curves.svg")
    line_chart(series, path, xlabel="evaluation", title="VQE on 6 nodes")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
