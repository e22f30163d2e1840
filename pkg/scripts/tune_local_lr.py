"""Learning-rate sweep behind the Gaussian k-local presets.

Trains every window width k (and the global cost) at n = 4 on held-out seeds
100-108 for each learning rate in the grid. For each it prints the area under
the bootstrapped median reverse-KL curve (its mean over all epochs), the
plateau (mean of the last 50 epochs, bootstrapped) and the early-descent score
(mean of the median curve over epochs 0-50). The presets take, per k, the rate
with the smallest area.

    python scripts/tune_local_lr.py [--lrs 0.05 0.1 0.2 0.4] [--epochs 500] [--out tune.json]
"""
import argparse
import json
import time
from dataclasses import replace

import numpy as np

from qcbm_fdiv.cli import get_preset, make_target
from qcbm_fdiv.sim import AnsatzSpec
from qcbm_fdiv.train import bootstrap_summary, run_training

SEEDS = tuple(range(100, 109))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--lrs", type=float, nargs="+", default=[0.05, 0.1, 0.2, 0.4])
    ap.add_argument("--epochs", type=int, default=500)
    ap.add_argument("--out", default=None, help="optional JSON file for the raw curves")
    args = ap.parse_args()
    names = [f"gaussian_n{args.n}_k{k}" for k in range(1, args.n)] + [f"gaussian_n{args.n}_global"]
    curves = {}
    start = time.perf_counter()
    print("preset\tlr\tarea\tplateau_median\tplateau_p5\tplateau_p95\tearly50")
    for name in names:
        cfg = get_preset(name)
        target = make_target(cfg.target, cfg.n_qubits)
        ansatz = AnsatzSpec(cfg.n_qubits, cfg.model_depth)
        for lr in args.lrs:
            train = replace(cfg.train, lr=lr, epochs=args.epochs)
            c = np.array([run_training(replace(train, seed=s), target, ansatz).kl_rev for s in SEEDS])
            curves[f"{name}@{lr}"] = c.tolist()
            band = bootstrap_summary(c[:, -50:].mean(axis=1)[:, None])
            med = bootstrap_summary(c).median
            area, early = med.mean(), med[:51].mean()
            print(f"{name}\t{lr}\t{area:.4f}\t{band.median[0]:.4f}\t{band.p5[0]:.4f}\t{band.p95[0]:.4f}\t{early:.4f}", flush=True)
    print(f"# {time.perf_counter() - start:.0f} s")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(curves, fh)


if __name__ == "__main__":
    main()
