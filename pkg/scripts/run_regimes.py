"""f-switch versus TV-only training in every three-qubit parameterisation regime.

Runs the ``<regime>_f_switch`` and ``<regime>_tv`` presets through the CLI
runner (9 seeds, 500 epochs, exact classifier) and prints the bootstrapped
median of the final exact TV and KL for each.

    python scripts/run_regimes.py [--regimes OO O E U UU] [--out results] [--charts]
"""
import argparse
import csv
from pathlib import Path

from qcbm_fdiv.cli import REGIMES, get_preset, run_experiment


def final_row(summary_csv: Path) -> dict:
    with open(summary_csv) as fh:
        rows = list(csv.DictReader(fh))
    return rows[-1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--regimes", nargs="+", default=list(REGIMES), choices=list(REGIMES))
    ap.add_argument("--out", default="results")
    ap.add_argument("--charts", action="store_true")
    args = ap.parse_args()
    print("regime\ttraining\tfinal_tv_median\tfinal_tv_p5\tfinal_tv_p95\tfinal_kl_median")
    for code in args.regimes:
        for training in ("f_switch", "tv"):
            cfg = get_preset(f"{code.lower()}_{training}")
            out = Path(args.out) / cfg.name
            manifest = run_experiment(cfg, out, charts=args.charts)
            last = final_row(out / "summary.csv")
            print(f"{manifest['regime']}\t{training}\t{float(last['tv_median']):.3g}\t{float(last['tv_p5']):.3g}\t"
                  f"{float(last['tv_p95']):.3g}\t{float(last['kl_median']):.3g}", flush=True)


if __name__ == "__main__":
    main()
