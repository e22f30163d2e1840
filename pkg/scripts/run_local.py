"""k-local versus global reverse-KL training on the Gaussian target.

Runs the ``gaussian_n{n}_k{k}`` and ``gaussian_n{n}_global`` presets and prints
the plateau (median of the last 50 epochs of the bootstrapped median curve)
and the early-descent score for each window width.

    python scripts/run_local.py [--n 4] [--out results] [--charts]
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from qcbm_fdiv.cli import get_preset, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4, choices=[4, 5, 6])
    ap.add_argument("--out", default="results")
    ap.add_argument("--charts", action="store_true")
    args = ap.parse_args()
    names = [f"gaussian_n{args.n}_k{k}" for k in range(1, args.n)] + [f"gaussian_n{args.n}_global"]
    print("preset\tlr\tplateau\tearly50")
    for name in names:
        cfg = get_preset(name)
        out = Path(args.out) / name
        run_experiment(cfg, out, charts=args.charts)
        with open(out / "summary.csv") as fh:
            med = np.array([float(r["kl_rev_median"]) for r in csv.DictReader(fh)])
        print(f"{name}\t{cfg.train.lr}\t{med[-50:].mean():.4g}\t{med[:51].mean():.4g}", flush=True)


if __name__ == "__main__":
    main()
