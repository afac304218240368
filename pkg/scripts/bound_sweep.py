"""Monte Carlo few-shot error against every certificate on a Gaussian pair.

Reproduces the qualitative bound-vs-error picture at desk scale: the
optimized certificate tracks the simulated error as shots grow, the prior
average-CDNV baseline stays vacuous, and the Cantelli asymptote marks the
known-centroid floor.

Example:
    python3 scripts/bound_sweep.py --dim 16 --gap 6 --out sweep.csv
"""

import argparse

from dircollapse import GaussianPairModel, GaussianPairSpec, bound_vs_error_sweep
from dircollapse.report import write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=16)
    ap.add_argument("--gap", type=float, default=6.0)
    ap.add_argument("--axis-var", type=float, default=1.0,
                    help="class variance along the decision axis")
    ap.add_argument("--m", default="10,20,50,100,200,500,1000")
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--test-per-class", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", help="optional CSV path")
    args = ap.parse_args()

    import numpy as np

    diag = np.ones(args.dim)
    diag[0] = args.axis_var
    model = GaussianPairModel(
        GaussianPairSpec(dim=args.dim, gap=args.gap, cov_a=diag, cov_b=diag)
    )
    pg = model.pair_geometry(0, 1)
    print(f"geometry: d={pg.d:g}  V={pg.cdnv:.4f}  dirV={pg.dir_cdnv:.4f}")

    sweep = bound_vs_error_sweep(
        model,
        class_subset=(0, 1),
        m_values=[int(x) for x in args.m.split(",")],
        trials=args.trials,
        seed=args.seed,
        test_per_class=args.test_per_class,
    )
    header = ["m", "mc_error", "mc_stderr", "bound_optimized", "bound_equal",
              "bound_cantelli", "bound_prior"]
    print(f"{'m':>6} {'mc_error':>10} {'optimized':>10} {'equal':>10} "
          f"{'cantelli':>10} {'prior':>10}")
    for r in sweep.rows:
        print(f"{r.m:>6} {r.mc_error:>10.5f} {r.bound_optimized:>10.5f} "
              f"{r.bound_equal:>10.5f} {r.bound_cantelli:>10.5f} {r.bound_prior:>10.5f}")
    if args.out:
        rows = [[r.m, r.mc_error, r.mc_stderr, r.bound_optimized, r.bound_equal,
                 r.bound_cantelli, r.bound_prior] for r in sweep.rows]
        write_csv(args.out, header, rows)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
