"""Command-line front end.

Subcommands: synth, train, predict, evaluate, oracle, theory,
label-admissions. Every command honors --seed for end-to-end determinism;
the evaluate repeats loop parallelizes across processes when the
CLUSTCLASS_THREADS environment variable allows more than one worker
(output stays ordered by seed either way).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .acc import AccConfig, acc_train, ct_baseline
from .cohort import (DEFAULT_ALPHA, cumulative_flagged_fraction,
                     flag_admission_types)
from .data import (Dataset, column_means, fit_quantizer, fit_standardizer,
                   impute_missing, load_csv, load_features_csv,
                   load_quantization_config, paper_count_scheme, save_csv,
                   split_train_test)
from .errors import ClustclassError
from .evaluate import roc_curve, save_roc_csv
from .jcc import load_instance, solve_exact
from .klrt import fit_lrt
from .logreg import train_lr
from .persist import (archive_predictions, archive_scores, load_model,
                      make_archive, save_model)
from .svm import SvmConstrainedParams, SvmPenalizedParams, train_penalized
from .synth import SynthConfig, generate_planted
from .theory import generalization_gap, min_sample_size, vc_bound

MODEL_KINDS = ("slsvm", "lsvm", "logreg", "klrt", "acc", "ct-slsvm", "ct-lsvm")


def worker_count(n_jobs: int) -> int:
    cap = os.environ.get("CLUSTCLASS_THREADS", "1")
    try:
        cap = max(1, int(cap))
    except ValueError:
        cap = 1
    return max(1, min(cap, n_jobs))


def _hyperparams(args) -> dict:
    return {
        "C": args.C, "rho": args.rho, "lambda": args.lam, "K": args.K,
        "smoothing": args.smoothing, "L": args.L, "T": args.T,
        "lambda_plus": args.lambda_plus, "lambda_minus": args.lambda_minus,
        "restarts": args.restarts, "quantization": args.quantization,
    }


def fit_archive(train: Dataset, kind: str, hp: dict, seed: int):
    """Impute, preprocess and fit one model kind; returns a ModelArchive."""
    kind = kind.replace("-", "_")
    means = column_means(train)
    imputed = impute_missing(train)
    config = {k: v for k, v in hp.items() if v is not None}
    config["seed"] = seed
    if kind == "klrt":
        scheme = (load_quantization_config(hp["quantization"])
                  if hp.get("quantization") else paper_count_scheme())
        quantizer = fit_quantizer(imputed, scheme)
        model = fit_lrt(quantizer.transform(imputed), smoothing=hp["smoothing"])
        return make_archive("klrt", model, feature_names=train.feature_names,
                            imputation_means=means, quantizer=quantizer,
                            training_config=config)
    std = fit_standardizer(imputed)
    strain = std.transform(imputed)
    if kind in ("slsvm", "lsvm"):
        rho = hp["rho"] if kind == "slsvm" else 0.0
        sol = train_penalized(strain, SvmPenalizedParams(C=hp["C"], rho=rho))
        model = sol.model
    elif kind == "logreg":
        model = train_lr(strain, lam=hp["lambda"])
    else:
        params = SvmConstrainedParams(hp["lambda_plus"], hp["lambda_minus"], hp["T"])
        pos, neg = strain.positives(), strain.negatives()
        if kind == "acc":
            cfg = AccConfig(L=hp["L"], params=params, seed=seed,
                            restarts=hp["restarts"])
            model = acc_train(pos, neg, cfg)
        elif kind in ("ct_slsvm", "ct_lsvm"):
            model = ct_baseline(pos, neg, hp["L"], kind == "ct_slsvm", params,
                                seed=seed)
        else:
            raise ClustclassError(f"unknown model kind {kind!r}")
    return make_archive(kind, model, feature_names=train.feature_names,
                        imputation_means=means, standardizer=std,
                        training_config=config)


def cmd_synth(args) -> int:
    cfg = SynthConfig(D=args.d, L_true=args.l_true, support_size=args.support_size,
                      N=args.n, positive_ratio=args.positive_ratio,
                      separation=args.separation, noise_sd=args.noise_sd,
                      seed=args.seed, family=args.family,
                      cluster_skew=tuple(args.skew) if args.skew else ())
    dataset, truth = generate_planted(cfg)
    save_csv(dataset, args.out, label_column=args.label_column)
    print(f"wrote {dataset.n_rows} rows x {dataset.n_features} features to {args.out}")
    if args.truth_out:
        with open(args.truth_out, "w") as fh:
            json.dump({"assignment": truth.assignment.tolist(),
                       "supports": [list(s) for s in truth.supports]}, fh, indent=1)
        print(f"wrote planted ground truth to {args.truth_out}")
    return 0


def cmd_train(args) -> int:
    dataset = load_csv(args.input, args.label_column)
    archive = fit_archive(dataset, args.model, _hyperparams(args), args.seed)
    save_model(archive, args.out)
    print(f"trained {args.model} on {dataset.n_rows} rows; archive at {args.out}")
    L = args.L if args.model in ("acc", "ct-slsvm", "ct-lsvm") else 1
    V = vc_bound(L, dataset.n_features)
    gap = generalization_gap(dataset.n_rows, V, args.rho_conf)
    print(f"capacity bound V_ACC(L={L}, D={dataset.n_features}) = {V:.1f}; "
          f"generalization gap <= {gap:.4f} at confidence {1 - args.rho_conf:.2f}")
    return 0


def cmd_predict(args) -> int:
    archive = load_model(args.model_file)
    X, names = load_features_csv(args.input, exclude=(args.label_column,))
    rows = archive_predictions(archive, X, feature_names=names)
    out = args.out or "-"
    fh = sys.stdout if out == "-" else open(out, "w", newline="")
    try:
        writer = csv.writer(fh)
        writer.writerow(["cluster", "score", "label"])
        for cluster, score, label in rows:
            writer.writerow(["" if cluster is None else cluster, repr(score), label])
    finally:
        if fh is not sys.stdout:
            fh.close()
            print(f"wrote {len(rows)} predictions to {out}")
    return 0


def _evaluate_one(packed):
    dataset, kind, hp, train_fraction, seed = packed
    train, test = split_train_test(dataset, train_fraction, seed)
    archive = fit_archive(train, kind, hp, seed)
    scores = archive_scores(archive, test.features, feature_names=test.feature_names)
    return seed, roc_curve(scores, test.labels)


def cmd_evaluate(args) -> int:
    dataset = load_csv(args.input, args.label_column)
    hp = _hyperparams(args)
    seeds = list(range(args.seed, args.seed + args.repeats))
    jobs = [(dataset, args.model, hp, args.train_fraction, s) for s in seeds]
    workers = worker_count(len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            curves = dict(pool.map(_evaluate_one, jobs))
    else:
        curves = dict(map(_evaluate_one, jobs))
    aucs = np.array([curves[s].auc for s in seeds])
    mean = float(aucs.mean())
    std = float(aucs.std(ddof=1)) if len(aucs) > 1 else 0.0
    for s in seeds:
        print(f"seed {s}: AUC {curves[s].auc:.4f}")
    print(f"{args.model}: mean AUC {mean * 100:.2f}% +/- {std * 100:.2f}% "
          f"over {args.repeats} splits")
    if args.roc_out:
        save_roc_csv(curves[seeds[0]], args.roc_out)
        print(f"wrote seed-{seeds[0]} ROC points to {args.roc_out}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["model", "seed", "auc"])
            for s in seeds:
                writer.writerow([args.model, s, repr(curves[s].auc)])
            writer.writerow([args.model, "mean", repr(mean)])
            writer.writerow([args.model, "std", repr(std)])
        print(f"wrote per-seed table to {args.out}")
    return 0


def cmd_oracle(args) -> int:
    inst = load_instance(args.input)
    exact = solve_exact(inst)
    cfg = AccConfig(L=inst.L, params=inst.params, seed=args.seed,
                    restarts=args.restarts)
    acc = acc_train(inst.positives, inst.negatives, cfg,
                    cluster_features=np.arange(inst.positives.shape[1]))
    gap = acc.objective - exact.objective
    rel = gap / exact.objective if exact.objective > 0 else 0.0
    print(f"exact optimum Z* = {exact.objective:.8f}  assignment {exact.assignment.tolist()}")
    print(f"alternating  Z  = {acc.objective:.8f}  assignment {acc.final_assignment.tolist()}")
    print(f"optimality gap  = {gap:.3e} ({rel * 100:.3f}% relative, "
          f"{args.restarts} restarts)")
    return 0


def cmd_theory(args) -> int:
    V = vc_bound(args.L, args.d)
    print(f"V_ACC(L={args.L}, D={args.d}) = {V:.4f}")
    if args.n:
        gap = generalization_gap(args.n, V, args.rho_conf)
        print(f"generalization gap at N={args.n}, confidence {1 - args.rho_conf:.2f}: "
              f"{gap:.6f}")
    if args.Q is not None:
        n_min = min_sample_size(args.Q, args.d, args.epsilon, args.delta)
        print(f"minimum sample size (Q={args.Q}, D={args.d}, eps={args.epsilon}, "
              f"delta={args.delta}): {n_min}")
    return 0


def cmd_label_admissions(args) -> int:
    counts = {}
    with open(args.input, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"type", "k1", "k2"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ClustclassError(
                f"admission counts file needs columns {sorted(required)}")
        for row in reader:
            counts[row["type"]] = (int(row["k1"]), int(row["k2"]))
    results = flag_admission_types(counts, args.n1, args.n2, alpha=args.alpha)
    flagged = [r for r in results if r.flagged]
    print(f"{len(flagged)} of {len(results)} admission types flagged at "
          f"alpha={args.alpha}")
    for r in flagged:
        print(f"  {r.type_id}: z={r.z:.3f} p={r.p_value:.3e}")
    coverage = cumulative_flagged_fraction(results, args.n1)
    if coverage:
        print(f"flagged set covers {coverage[-1][1]:.1%} of the first "
              f"population's admissions")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["type", "z", "p_value", "flagged"])
            for r in results:
                writer.writerow([r.type_id, repr(r.z), repr(r.p_value), int(r.flagged)])
        print(f"wrote full table to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clustclass",
        description="Sparse linear classifiers with joint clustering of the "
                    "positive class")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common_model_flags(p):
        p.add_argument("--model", choices=MODEL_KINDS, required=True)
        p.add_argument("--C", type=float, default=1.0, help="hinge weight (slsvm/lsvm)")
        p.add_argument("--rho", type=float, default=0.1, help="l1 penalty weight (slsvm)")
        p.add_argument("--lambda", dest="lam", type=float, default=1.0,
                       help="l1 penalty weight (logreg)")
        p.add_argument("--K", type=int, default=4, help="features kept by klrt")
        p.add_argument("--smoothing", type=float, default=1.0,
                       help="additive smoothing for klrt tables")
        p.add_argument("--L", type=int, default=2, help="cluster count")
        p.add_argument("--T", type=float, default=5.0, help="l1 budget per cluster")
        p.add_argument("--lambda-plus", type=float, default=1.0)
        p.add_argument("--lambda-minus", type=float, default=1.0)
        p.add_argument("--restarts", type=int, default=5)
        p.add_argument("--quantization", help="JSON quantization config (klrt)")
        p.add_argument("--rho-conf", type=float, default=0.05,
                       help="confidence level for the reported bounds")

    p = sub.add_parser("synth", help="generate a planted-cluster dataset CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--label-column", default="label")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--l-true", type=int, default=2)
    p.add_argument("--support-size", type=int, default=2)
    p.add_argument("--positive-ratio", type=float, default=0.1697)
    p.add_argument("--separation", type=float, default=4.0)
    p.add_argument("--noise-sd", type=float, default=1.0)
    p.add_argument("--family", choices=("gaussian", "poisson"), default="gaussian")
    p.add_argument("--skew", type=float, nargs="*", default=None,
                   help="relative cluster sizes, one weight per planted cluster")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truth-out", help="also write the planted assignment as JSON")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="fit a model and save its archive")
    p.add_argument("--input", required=True)
    p.add_argument("--label-column", default="label")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    add_common_model_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score rows with a saved model")
    p.add_argument("--model-file", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--label-column", default="label",
                   help="column to exclude from the features")
    p.add_argument("--out", help="output CSV (default: stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate",
                       help="mean/std AUC over repeated random splits")
    p.add_argument("--input", required=True)
    p.add_argument("--label-column", default="label")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--train-fraction", type=float, default=0.6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="per-seed AUC table CSV")
    p.add_argument("--roc-out", help="export the first seed's ROC points as CSV")
    add_common_model_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("oracle",
                       help="exact enumeration optimum vs the alternating trainer")
    p.add_argument("--input", required=True, help="instance JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=5)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("theory", help="print the finite-sample bound values")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--D", dest="d", type=int, required=True)
    p.add_argument("--n", type=int, help="training set size for the gap bound")
    p.add_argument("--rho-conf", type=float, default=0.05)
    p.add_argument("--Q", type=int, help="sparse support size for the sample bound")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.05)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("label-admissions",
                       help="flag admission types attributable to the cohort")
    p.add_argument("--input", required=True, help="CSV with columns type,k1,k2")
    p.add_argument("--n1", type=int, default=47352)
    p.add_argument("--n2", type=int, default=116934)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--out", help="full result table CSV")
    p.set_defaults(func=cmd_label_admissions)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ClustclassError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
