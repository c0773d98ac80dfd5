"""Welded-tree sweep: closed forms against the solver, ET and kappa(B) per depth.

    python scripts/welded_sweep.py --seeds 5 --max-n 7
"""
import argparse
import csv
import sys

import numpy as np

from qlswalk import numerics
from qlswalk.instances import make_welded_tree, welded_tree_ground_truth
from qlswalk.system import compute_metrics


def rows(max_n, seeds):
    for bottleneck in (False, True):
        for seed in range(seeds):
            prev = None
            for n in range(2, max_n + 1):
                t = make_welded_tree(n, seed, bottleneck)
                m = compute_metrics(t.system())
                gt = welded_tree_ground_truth(t)
                k = numerics.condition_number(t.incidence())
                yield {
                    "cycle": "bottleneck" if bottleneck else "random",
                    "seed": seed,
                    "n": n,
                    "resistance_err": abs(m.y_norm_sq - gt.resistance),
                    "potential_err": float(np.max(np.abs(m.p - gt.potentials))),
                    "p_norm_sq": float(m.p @ m.p),
                    "ET": m.et,
                    "kappa_B": k,
                    "kappa_step": k / prev if prev else float("nan"),
                }
                prev = k


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--max-n", type=int, default=7)
    args = ap.parse_args()
    w = None
    for r in rows(args.max_n, args.seeds):
        if w is None:
            w = csv.DictWriter(sys.stdout, fieldnames=list(r))
            w.writeheader()
        w.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in r.items()})


if __name__ == "__main__":
    main()
