"""Command-line surface: stats | certify | fewshot | synth | ortho | decompose.

Structured results go to JSON (--out-json), plot-ready tables to CSV
(--out-csv). Exit codes: 0 success (including hypothesis-violation reports),
2 usage/validation error, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .bounds import (
    NonpositiveMarginError,
    baseline_bound_prior,
    multiclass_bound,
    pairwise_bound_equal,
    pairwise_bound_generic,
    pairwise_bound_optimized,
)
from .dataset import DatasetError, load_embeddings, validate_dataset, write_embeddings
from .fewshot import bound_vs_error_sweep
from .geometry import (
    CdnvAverages,
    DegeneratePairError,
    cdnv_averages,
    class_stats,
    pair_geometry,
    variance_decomposition,
)
from .ortho import verify_proposition
from .report import RunManifest, file_digest, jsonable, write_csv, write_json
from .synthetic import (
    FactorModel,
    FactorModelSpec,
    GaussianPairModel,
    GaussianPairSpec,
    sample_factor_model,
    sample_gaussian_pair,
)


class UsageError(Exception):
    pass


def _parse_int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip() != ""]


def _parse_pairs(text: str) -> list[tuple[int, int]]:
    pairs = []
    for chunk in text.split(";"):
        i, j = chunk.split(",")
        pairs.append((int(i), int(j)))
    return pairs


def _load_spec(path):
    with open(path) as fh:
        doc = json.load(fh)
    kind = doc.pop("kind", None)
    if kind == "gaussian_pair":
        return GaussianPairSpec(
            dim=doc["dim"],
            gap=doc["gap"],
            cov_a=doc.get("cov_a", 1.0),
            cov_b=doc.get("cov_b", 1.0),
        )
    if kind == "factor_model":
        return FactorModelSpec(
            dim=doc["dim"],
            num_tasks=doc["num_tasks"],
            deltas=tuple(np.atleast_1d(doc.get("deltas", 1.0)).tolist()),
            eta_variance=doc.get("eta_variance", 0.0),
            xi_covariance=doc.get("xi_covariance", 0.0),
            frame_seed=doc.get("frame_seed", 0),
        )
    raise UsageError(f"unknown spec kind {kind!r} in {path}")


def _load_dataset(args):
    if args.input is None:
        raise UsageError("--input is required")
    return load_embeddings(args.input, format=args.format)


def _manifest(args, subcommand, exclude=("out_json", "out_csv", "threads", "func")):
    params = {
        k: v for k, v in sorted(vars(args).items())
        if k not in exclude and k != "seed" and v is not None
    }
    digests = {}
    for key in ("input", "spec"):
        path = getattr(args, key, None)
        if path is not None:
            digests[key] = file_digest(path)
    return RunManifest(
        subcommand=subcommand,
        params={k: jsonable(v) for k, v in params.items()},
        seed=getattr(args, "seed", None),
        input_digests=digests,
    )


def _emit(args, manifest, payload, csv_header=None, csv_rows=None):
    if args.out_json:
        write_json(args.out_json, manifest, payload)
    if args.out_csv:
        if csv_header is None:
            raise UsageError("this subcommand has no CSV output")
        write_csv(args.out_csv, csv_header, csv_rows)
    if not args.out_json and not args.out_csv:
        print(json.dumps({"manifest": jsonable(manifest), "report": jsonable(payload)},
                         sort_keys=True, indent=2))


def _classes_for(ds, labeling, args):
    lab = ds.labeling(labeling)
    if getattr(args, "classes", None):
        return _parse_int_list(args.classes)
    return list(range(lab.num_classes))


def cmd_stats(args) -> int:
    ds = _load_dataset(args)
    report = validate_dataset(ds)
    if not report.ok:
        raise DatasetError("; ".join(report.violations))
    classes = _classes_for(ds, args.labeling, args)
    pairs = (
        _parse_pairs(args.pairs)
        if args.pairs
        else [(i, j) for i in classes for j in classes if i != j]
    )
    per_class = [class_stats(ds, args.labeling, c) for c in classes]
    per_pair = [pair_geometry(ds, args.labeling, i, j) for i, j in pairs]
    averages = cdnv_averages(ds, args.labeling, classes) if len(classes) >= 2 else None
    payload = {
        "labeling": args.labeling,
        "classes": classes,
        "class_stats": per_class,
        "pair_geometry": per_pair,
        "cdnv_averages": averages,
        "validation_warnings": report.warnings,
    }
    header = ["i", "j", "d", "cdnv", "dir_cdnv", "theta"]
    rows = [[pg.i, pg.j, pg.d, pg.cdnv, pg.dir_cdnv, pg.theta] for pg in per_pair]
    _emit(args, _manifest(args, "stats"), payload, header, rows)
    return 0


def _certify_source(args):
    """(pair geometries, C', averages) from a dataset or a synthetic spec."""
    if args.spec:
        spec = _load_spec(args.spec)
        if isinstance(spec, GaussianPairSpec):
            model = GaussianPairModel(spec)
            classes = [0, 1]
            pgs = [model.pair_geometry(i, j) for i in classes for j in classes if i != j]
        else:
            raise UsageError("certify supports gaussian_pair specs; sample factor models with synth")
    else:
        ds = _load_dataset(args)
        if args.labeling is None:
            raise UsageError("--labeling is required for dataset inputs")
        classes = _classes_for(ds, args.labeling, args)
        pgs = [pair_geometry(ds, args.labeling, i, j) for i in classes for j in classes if i != j]
    dirs = [pg.dir_cdnv for pg in pgs]
    cdnvs = [pg.cdnv for pg in pgs]
    averages = CdnvAverages(
        avg_dir=float(np.mean(dirs)),
        avg_cdnv=float(np.mean(cdnvs)),
        avg_sqrt_cdnv=float(np.mean(np.sqrt(cdnvs))),
    )
    return pgs, len(classes), averages


def cmd_certify(args) -> int:
    m_values = _parse_int_list(args.m)
    if any(m < 1 for m in m_values):
        raise UsageError("m must be >= 1")
    variants = ["generic", "equal", "optimized", "prior"] if args.variant == "all" else [args.variant]
    lambdas = tuple(float(x) for x in args.lambdas.split(","))
    pgs, c_prime, averages = _certify_source(args)
    results = []
    for m in m_values:
        entry = {"m": m, "variants": {}}
        for variant in variants:
            if variant == "prior":
                entry["variants"]["prior"] = {"total": baseline_bound_prior(averages, c_prime, m)}
                continue
            per_pair, errors, total = [], [], 0.0
            for pg in pgs:
                try:
                    if variant == "generic":
                        bv = pairwise_bound_generic(pg, m, lambdas)
                    elif variant == "equal":
                        bv = pairwise_bound_equal(pg, m)
                    else:
                        bv = pairwise_bound_optimized(pg, m)
                    per_pair.append(bv)
                    total += bv.total
                except NonpositiveMarginError as exc:
                    errors.append({"pair": [pg.i, pg.j], "error": str(exc)})
            entry["variants"][variant] = {
                "total": total / c_prime if not errors else None,
                "per_pair": per_pair,
                "errors": errors,
            }
        results.append(entry)
    payload = {"c_prime": c_prime, "cdnv_averages": averages, "bounds": results}
    header = ["m"] + [f"bound_{v}" for v in variants]
    rows = [
        [entry["m"]] + [entry["variants"][v]["total"] for v in variants]
        for entry in results
    ]
    _emit(args, _manifest(args, "certify"), payload, header, rows)
    return 0


def cmd_fewshot(args) -> int:
    if args.seed is None:
        raise UsageError("--seed is required for stochastic subcommands")
    m_values = _parse_int_list(args.m)
    if any(m < 1 for m in m_values):
        raise UsageError("m must be >= 1")
    if args.trials == 1:
        print("warning: trials=1, standard error will be null", file=sys.stderr)
    if args.spec:
        spec = _load_spec(args.spec)
        if not isinstance(spec, GaussianPairSpec):
            raise UsageError("fewshot supports gaussian_pair specs or datasets")
        source, labeling, classes = GaussianPairModel(spec), None, (0, 1)
    else:
        source = _load_dataset(args)
        if args.labeling is None:
            raise UsageError("--labeling is required for dataset inputs")
        labeling = args.labeling
        classes = tuple(_classes_for(source, labeling, args))
    sweep = bound_vs_error_sweep(
        source,
        classes,
        m_values,
        trials=args.trials,
        seed=args.seed,
        labeling=labeling,
        test_fraction=args.test_fraction,
        test_per_class=args.test_per_class,
        workers=args.threads,
    )
    header = ["m", "mc_error", "mc_stderr", "bound_optimized", "bound_equal",
              "bound_cantelli", "bound_prior"]
    rows = [
        [r.m, r.mc_error, r.mc_stderr, r.bound_optimized, r.bound_equal,
         r.bound_cantelli, r.bound_prior]
        for r in sweep.rows
    ]
    _emit(args, _manifest(args, "fewshot"), sweep, header, rows)
    return 0


def cmd_synth(args) -> int:
    if args.seed is None:
        raise UsageError("--seed is required for stochastic subcommands")
    spec = _load_spec(args.spec)
    if isinstance(spec, FactorModelSpec):
        ds = sample_factor_model(spec, args.n, args.seed)
        analytics = FactorModel(spec).analytics()
    else:
        ds = sample_gaussian_pair(spec, args.n, args.seed)
        model = GaussianPairModel(spec)
        pg = model.pair_geometry(0, 1)
        analytics = {
            "per_pair": [
                {"pair": [0, 1], "dir_cdnv": pg.dir_cdnv, "cdnv": pg.cdnv, "theta": pg.theta}
            ]
        }
    write_embeddings(ds, args.out)
    sidecar = args.sidecar or (str(args.out) + ".analytics.json")
    write_json(sidecar, _manifest(args, "synth"), analytics)
    return 0


def cmd_ortho(args) -> int:
    if args.labeling_a == args.labeling_b:
        raise UsageError("distinct labelings required")
    ds = _load_dataset(args)
    report = verify_proposition(
        ds,
        args.labeling_a,
        args.labeling_b,
        balance_tolerance=args.balance_tolerance,
        slack_coeff=args.slack_coeff,
    )
    header = ["task_a", "pair_a", "task_b", "pair_b", "abs_cos", "bound", "satisfied"]
    rows = [
        [report.labeling_a, f"{e.pair_a[0]}-{e.pair_a[1]}",
         report.labeling_b, f"{e.pair_b[0]}-{e.pair_b[1]}",
         e.abs_cos, e.bound, e.satisfied]
        for e in report.entries
    ]
    _emit(args, _manifest(args, "ortho"), report, header, rows)
    return 0


def cmd_decompose(args) -> int:
    ds = _load_dataset(args)
    k_list = _parse_int_list(args.k)
    classes = _classes_for(ds, args.labeling, args)
    if args.pairs:
        pairs = _parse_pairs(args.pairs)
    elif args.random_pairs:
        if args.seed is None:
            raise UsageError("--seed is required with --random-pairs")
        rng = np.random.default_rng(args.seed)
        all_pairs = [(i, j) for i in classes for j in classes if i < j]
        idx = rng.choice(len(all_pairs), size=min(args.random_pairs, len(all_pairs)), replace=False)
        pairs = [all_pairs[i] for i in sorted(idx)]
    else:
        pairs = [(i, j) for i in classes for j in classes if i < j]
    reports = [variance_decomposition(ds, args.labeling, i, j, k_list) for i, j in pairs]
    header = (
        ["i", "j", "axis_variance"]
        + [f"ortho_top_{k}" for k in k_list]
        + ["ortho_total", "conservation_residual"]
    )
    rows = []
    for rep, (i, j) in zip(reports, pairs):
        si = class_stats(ds, args.labeling, i)
        sj = class_stats(ds, args.labeling, j)
        n_i, n_j = si.n, sj.n
        trace = (n_i * si.v + n_j * sj.v) / (n_i + n_j)
        rows.append(
            [i, j, rep.axis_variance]
            + [rep.ortho_cumulative[k] for k in k_list]
            + [rep.ortho_total, rep.axis_variance + rep.ortho_total - trace]
        )
    avg = ["avg", "avg"] + [
        float(np.mean([row[c] for row in rows])) for c in range(2, len(header))
    ]
    payload = {"pairs": reports, "k_list": k_list}
    _emit(args, _manifest(args, "decompose"), payload, header, rows + [avg])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dircollapse",
        description="Directional-collapse geometry, NCC error certificates, "
                    "and seeded few-shot verification",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, needs_input=True):
        if needs_input:
            p.add_argument("--input", help="dataset file (EMB1 or CSV)")
            p.add_argument("--format", choices=["emb1", "csv"], default="emb1")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out-json")
        p.add_argument("--out-csv")

    p = sub.add_parser("stats", help="per-class moments and pair geometry")
    common(p)
    p.add_argument("--labeling", required=True)
    p.add_argument("--classes", help="comma-separated class subset")
    p.add_argument("--pairs", help='ordered pair list, e.g. "0,1;1,3"')
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("certify", help="evaluate error certificates")
    common(p)
    p.add_argument("--spec", help="synthetic spec JSON instead of --input")
    p.add_argument("--labeling")
    p.add_argument("--classes")
    p.add_argument("--m", required=True, help="comma-separated shot counts")
    p.add_argument("--variant", choices=["generic", "equal", "optimized", "prior", "all"],
                   default="optimized")
    p.add_argument("--lambdas", default="1,1,1")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("fewshot", help="Monte Carlo error vs certificates sweep")
    common(p)
    p.add_argument("--spec")
    p.add_argument("--labeling")
    p.add_argument("--classes")
    p.add_argument("--m", required=True)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--test-fraction", type=float, default=0.5)
    p.add_argument("--test-per-class", type=int, default=50)
    p.set_defaults(func=cmd_fewshot)

    p = sub.add_parser("synth", help="sample a synthetic spec to EMB1 + sidecar")
    common(p, needs_input=False)
    p.add_argument("--spec", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sidecar")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ortho", help="cross-task decision-axis alignment")
    common(p)
    p.add_argument("--labeling-a", required=True)
    p.add_argument("--labeling-b", required=True)
    p.add_argument("--balance-tolerance", type=float, default=0.05)
    p.add_argument("--slack-coeff", type=float, default=5.0)
    p.set_defaults(func=cmd_ortho)

    p = sub.add_parser("decompose", help="axis / orthogonal variance decomposition")
    common(p)
    p.add_argument("--labeling", required=True)
    p.add_argument("--classes")
    p.add_argument("--pairs")
    p.add_argument("--random-pairs", type=int)
    p.add_argument("--k", default="1", help="comma-separated top-k counts")
    p.set_defaults(func=cmd_decompose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DatasetError, DegeneratePairError, NonpositiveMarginError,
            KeyError, ValueError, FileNotFoundError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal error
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
