"""Command-line interface.

Exit codes: 0 success, 1 runtime or verification failure, 2 usage or
validation error.  ``--format json`` prints a schema-versioned document that
embeds the run manifest; ``--manifest PATH`` also writes the manifest to a
file (commands that write artifacts put it next to them by default).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DatasetParseError, RocketLabError, ValidationError
from .kernels import FeatureMatrix, TransformConfig, generate_kernels, transform
from .reports import SCHEMA_VERSION, build_manifest, dumps, format_table, to_jsonable
from .series import Dataset, dump_dataset, load_dataset

THREADS_ENV = "ROCKETLAB_THREADS"


@dataclass
class Outcome:
    payload: dict
    text: str
    ok: bool = True
    config: dict = field(default_factory=dict)
    inputs: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)


def _floats(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


# -- configuration ---------------------------------------------------------


def _config_file(args) -> dict:
    if not getattr(args, "config", None):
        return {}
    try:
        with open(args.config) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config file {args.config}: {exc}") from None


def _transform_config(args) -> TransformConfig:
    """Defaults, then the config file, then explicit flags."""
    merged = TransformConfig().to_dict()
    file_cfg = _config_file(args)
    merged.update(file_cfg.get("transform", {}))
    if "seed" in file_cfg:
        merged["seed"] = file_cfg["seed"]
    flags = {
        "num_kernels": args.kernels,
        "kernel_lengths": args.kernel_lengths,
        "padding_policy": args.padding,
        "weight_law": args.weight_law,
        "standardize_inputs": args.standardize,
        "seed": args.seed,
    }
    if args.dilation is not None:
        if args.dilation == "exponential_random":
            flags["dilation_policy"] = "exponential_random"
        else:
            try:
                flags["dilation"] = int(args.dilation)
            except ValueError:
                raise ValidationError(f"--dilation must be an integer or 'exponential_random'") from None
            flags["dilation_policy"] = "fixed"
    merged.update({k: v for k, v in flags.items() if v is not None})
    return TransformConfig.from_dict(merged)


def _seed(args, default=0) -> int:
    if args.seed is not None:
        return args.seed
    return int(_config_file(args).get("seed", default))


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    return max(1, int(os.environ.get(THREADS_ENV, "1")))


# -- pipeline commands ------------------------------------------------------


def cmd_transform(args) -> Outcome:
    cfg = _transform_config(args)
    ds = load_dataset(args.data, args.data_format)
    fm = transform(ds, cfg, threads=_threads(args))
    out = Path(args.out)
    if out.suffix == ".json":
        out.write_text(json.dumps(fm.to_json_dict()))
    else:
        fm.to_csv(out)
    payload = {
        "instances": fm.shape[0],
        "features": fm.shape[1],
        "kernel_set_id": fm.kernel_set_id,
        "output": str(out),
    }
    text = (
        f"transformed {fm.shape[0]} series with {fm.shape[1]} kernels "
        f"(kernel set {fm.kernel_set_id}) -> {out}"
    )
    return Outcome(payload, text, config=cfg.to_dict(), inputs=[args.data], artifacts=[out])


def _load_features(path) -> FeatureMatrix:
    path = Path(path)
    if path.suffix == ".json":
        return FeatureMatrix.from_json_dict(json.loads(path.read_text()))
    return FeatureMatrix.from_csv(path)


def cmd_classify(args) -> Outcome:
    from .ridge import confusion_matrix, fit_ridge, predict

    if args.train_features:
        if not args.test_features:
            raise ValidationError("--train-features requires --test-features")
        train_fm = _load_features(args.train_features)
        test_fm = _load_features(args.test_features)
        if train_fm.labels is None or test_fm.labels is None:
            raise ValidationError("feature files must carry labels")
        config = {}
        inputs = [args.train_features, args.test_features]
    else:
        if not (args.train and args.test):
            raise ValidationError("give --train and --test datasets (or feature files)")
        cfg = _transform_config(args)
        train = load_dataset(args.train, args.data_format)
        test = load_dataset(args.test, args.data_format)
        n_min = int(min(train.lengths.min(), test.lengths.min()))
        kernels = generate_kernels(cfg, n_min)
        train_fm = transform(train, cfg, kernels, threads=_threads(args))
        test_fm = transform(test, cfg, kernels, threads=_threads(args))
        config = cfg.to_dict()
        inputs = [args.train, args.test]

    grid = args.lambda_grid if args.lambda_grid else None
    kwargs = {"folds": args.folds, "seed": _seed(args)}
    if grid is not None:
        kwargs["lambda_grid"] = grid
    model = fit_ridge(train_fm, **kwargs)
    pred = predict(model, test_fm)
    truth = np.array(test_fm.labels, dtype=object)
    accuracy = float(np.mean(pred == truth))
    classes = list(model.classes)
    extra = sorted(set(truth) - set(classes))
    classes_all = classes + extra
    cm = confusion_matrix(classes_all, truth, pred)
    artifacts = []
    if args.model_out:
        model.save(args.model_out)
        artifacts.append(Path(args.model_out))

    payload = {
        "accuracy": accuracy,
        "lambda": model.lam,
        "cv_scores": model.cv_scores,
        "classes": classes_all,
        "confusion": cm.tolist(),
        "train_instances": train_fm.shape[0],
        "test_instances": test_fm.shape[0],
        "features": train_fm.shape[1],
    }
    table = format_table(
        ["true \\ predicted", *classes_all],
        [[c, *row] for c, row in zip(classes_all, cm.tolist())],
    )
    text = (
        f"accuracy {accuracy:.4f} on {test_fm.shape[0]} test series "
        f"(lambda={model.lam:g}, {train_fm.shape[1]} features)\n{table}"
    )
    config = {**config, "lambda_grid": grid, "folds": args.folds}
    return Outcome(payload, text, config=config, inputs=inputs, artifacts=artifacts)


def cmd_synth(args) -> Outcome:
    from .synthetic import template_dataset

    seed = _seed(args)
    train, test = template_dataset(args.train_size, args.test_size, args.length,
                                   args.classes, args.noise, seed)
    dump_dataset(train, args.out_train)
    dump_dataset(test, args.out_test)
    payload = {"train": args.out_train, "test": args.out_test, "length": args.length}
    text = f"wrote {len(train)} train series to {args.out_train} and {len(test)} test series to {args.out_test}"
    config = {"train_size": args.train_size, "test_size": args.test_size, "length": args.length,
              "classes": args.classes, "noise": args.noise}
    return Outcome(payload, text, config=config,
                   artifacts=[Path(args.out_train), Path(args.out_test)])


# -- audits -----------------------------------------------------------------


def _vacuous_tag(bound):
    return "VACUOUS" if bound >= 1.0 else ""


def audit_coherence_bound(args) -> Outcome:
    from .sensing import verify_bound_monte_carlo

    seed = _seed(args)
    reports = []
    for n in args.n:
        for k in args.k:
            for alpha in args.alpha:
                reports.append(verify_bound_monte_carlo(n, k, alpha, args.trials, seed, args.axis))
    rows = [
        [r.n, r.k, r.alpha, r.bound_value, r.empirical_exceed_rate, 3 * r.standard_error,
         "pass" if r.passed else "FAIL", _vacuous_tag(r.bound_value)]
        for r in reports
    ]
    text = format_table(
        ["N", "K", "alpha", "bound", "empirical", "3SE", "result", "note"], rows
    )
    ok = all(r.passed for r in reports)
    config = {"n": args.n, "k": args.k, "alpha": args.alpha, "trials": args.trials, "axis": args.axis}
    return Outcome({"cells": reports, "passed": ok}, text, ok, config)


def audit_coherence(args) -> Outcome:
    from .kernels import KernelSpec
    from .sensing import build_toeplitz, coherence, raw_overlap_max

    weights = args.weights
    k = KernelSpec(weights, dilation=args.d)
    view = build_toeplitz(k, args.n)
    if view.rows is None:
        raise ValidationError("matrix too large to materialize for normalized coherence")
    mu, pair = coherence(view.rows, args.axis)
    raw = raw_overlap_max(k, args.n, args.axis)
    payload = {"normalized_coherence": mu, "arg_pair": pair, "raw_overlap": raw, "axis": args.axis,
               "shape": view.shape}
    text = format_table(["axis", "normalized_coherence", "pair", "raw_overlap"],
                        [[args.axis, mu, f"{pair[0]},{pair[1]}", raw]])
    return Outcome(payload, text, config={"weights": weights, "d": args.d, "n": args.n})


def audit_variance(args) -> Outcome:
    from .sensing import t01_variance, t01_variance_monte_carlo

    seed = _seed(args)
    rows, cells = [], []
    ok = True
    for k in args.k:
        exact = t01_variance(k)
        mc = t01_variance_monte_carlo(k, args.samples, seed)
        rel = abs(mc - exact) / exact
        passed = rel <= args.tolerance
        ok &= passed
        cells.append({"k": k, "formula": exact, "monte_carlo": mc, "relative_error": rel, "passed": passed})
        rows.append([k, exact, mc, rel, "pass" if passed else "FAIL"])
    text = format_table(["K", "(K-1)/K^2", "monte_carlo", "rel_err", "result"], rows)
    return Outcome({"cells": cells, "passed": ok}, text, ok,
                   {"k": args.k, "samples": args.samples, "tolerance": args.tolerance})


def audit_overlap(args) -> Outcome:
    from .sensing import overlap_sum

    rows, cells = [], []
    ok = True
    for n in args.n:
        for k in args.k:
            if k > n:
                continue
            total = overlap_sum(n, k)
            expected = n * k * (k - 1) // 2
            ok &= total == expected
            cells.append({"n": n, "k": k, "sum": total, "expected": expected,
                          "linear_sum": overlap_sum(n, k, cyclic=False)})
            rows.append([n, k, total, expected, "pass" if total == expected else "FAIL"])
    text = format_table(["N", "K", "sum theta", "N K(K-1)/2", "result"], rows)
    return Outcome({"cells": cells, "passed": ok}, text, ok, {"n": args.n, "k": args.k})


def audit_recoverability(args) -> Outcome:
    from .sensing import recoverability

    v = recoverability(args.s, args.n, args.k, args.c_s, args.mu)
    text = format_table(
        ["s", "N", "K", "c_s", "K threshold", "rip_ok", "mu", "mu threshold", "coherence_ok"],
        [[v.s, v.n, v.k, v.c_s, v.rip_threshold, v.rip_ok, v.mu_used, v.coherence_threshold, v.coherence_ok]],
    )
    text += "\n(c_s is a free constant; the RIP verdict is heuristic)"
    return Outcome(v.to_dict(), text, config=v.to_dict())


def audit_cross_basis(args) -> Outcome:
    from .sensing import compare_dilation_coherence, cross_basis_coherence, dft_basis

    rows, cells = [], []
    ok = True
    for n in args.n:
        mu = cross_basis_coherence(dft_basis(n), np.eye(n))
        target = 1 / math.sqrt(n)
        passed = abs(mu - target) <= 1e-9
        ok &= passed
        cells.append({"n": n, "dft_vs_identity": mu, "one_over_sqrt_n": target, "passed": passed})
        rows.append([n, mu, target, "pass" if passed else "FAIL"])
    text = format_table(["N", "mu(DFT, I)", "1/sqrt(N)", "result"], rows)
    cmp = compare_dilation_coherence(args.k, args.length, args.dilation, args.pairs, _seed(args))
    ok &= cmp.dilated_lower
    text += "\n\n" + format_table(
        ["K", "N", "pairs", "mean mu (d=1 vs d=1)", f"mean mu (d=1 vs d={cmp.dilation})", "dilated lower"],
        [[cmp.k, cmp.n, cmp.pairs, cmp.mean_undilated, cmp.mean_dilated, cmp.dilated_lower]],
    )
    config = {"n": args.n, "k": args.k, "length": args.length, "dilation": args.dilation, "pairs": args.pairs}
    return Outcome({"dft": cells, "dilation": cmp, "passed": ok}, text, ok, config)


def audit_axioms(args) -> Outcome:
    from .sparsity import axiom_battery

    results = axiom_battery(args.trials, _seed(args), args.p1_trials)
    yes = {"satisfied": "Yes", "violated": "No"}
    rows = [
        [f"{r.axiom} ({r.name})", yes[r.expected], yes[r.observed], r.counterexamples,
         "match" if r.matches_expected else "MISMATCH"]
        for r in results
    ]
    text = format_table(["Property", "Expected", "Observed", "Counterexamples", "Result"], rows)
    ok = all(r.matches_expected for r in results)
    return Outcome({"axioms": results, "passed": ok}, text, ok,
                   {"trials": args.trials, "p1_trials": args.p1_trials})


def audit_sparsity(args) -> Outcome:
    from .sparsity import estimate_sparsity

    ds = load_dataset(args.data, args.data_format)
    reports = [estimate_sparsity(inst.series, args.threshold) for inst in ds]
    rows = [[i, inst.label, r.n, r.positives, r.ppv, r.inv_ppv, r.estimated_s]
            for i, (inst, r) in enumerate(zip(ds, reports))]
    text = format_table(["row", "label", "N", "above", "ppv", "1/ppv", "est_s"], rows)
    artifacts = []
    if args.csv_out:
        with open(args.csv_out, "w") as fh:
            fh.write("row,sample,value,threshold,above\n")
            for i, inst in enumerate(ds):
                for t, v in enumerate(inst.series.values.tolist()):
                    fh.write(f"{i},{t},{v!r},{args.threshold!r},{int(v > args.threshold)}\n")
        artifacts.append(Path(args.csv_out))
    return Outcome({"reports": reports}, text, config={"threshold": args.threshold},
                   inputs=[args.data], artifacts=artifacts)


def _certificate_table(cert) -> str:
    rows = [
        ["L", cert.l], ["N", cert.n], ["alpha", cert.alpha],
        ["chi2 lower quantile", cert.chi2_quantile],
        ["ratio bound (squared norms)", cert.ratio_bound],
        ["norm constant sqrt(bound)", cert.norm_constant],
        ["confidence", cert.confidence],
    ]
    emp = cert.empirical
    if emp is not None:
        rows += [
            ["noise", f"{cert.noise} (sigma={cert.sigma:g})" + ("" if cert.analytic else ", bound approximate")],
            ["trials", emp.trials],
            ["max observed ratio", emp.max_observed_ratio],
            ["mean observed ratio", emp.mean_observed_ratio],
            ["violations", emp.violation_count],
            ["violation rate", emp.violation_rate],
            ["allowed rate", cert.alpha + emp.tolerance],
        ]
    return format_table(["quantity", "value"], rows)


def audit_lipschitz(args) -> Outcome:
    from .robustness import lipschitz_certificate

    cert = lipschitz_certificate(args.l, args.n, args.alpha)
    text = _certificate_table(cert)
    return Outcome(cert.to_dict(), text, config={"l": args.l, "n": args.n, "alpha": args.alpha})


def _pick_series(args):
    ds = load_dataset(args.data, args.data_format)
    if not 0 <= args.index < len(ds):
        raise ValidationError(f"--index {args.index} out of range for {len(ds)} series")
    return ds.instances[args.index].series


def audit_robustness(args) -> Outcome:
    from .robustness import verify_noise_robustness

    cfg = _transform_config(args)
    f = _pick_series(args)
    cert = verify_noise_robustness(f, cfg, args.alpha, args.trials, _seed(args),
                                   args.sigma, args.noise, _threads(args))
    text = _certificate_table(cert) + f"\nresult: {'pass' if cert.passed else 'FAIL'}"
    config = {"transform": cfg.to_dict(), "alpha": args.alpha, "trials": args.trials,
              "sigma": args.sigma, "noise": args.noise, "index": args.index}
    return Outcome(cert.to_dict(), text, bool(cert.passed), config, [args.data])


def audit_shift(args) -> Outcome:
    from .robustness import verify_shift_invariance

    cfg = _transform_config(args)
    f = _pick_series(args)
    report = verify_shift_invariance(f, cfg, args.shifts, _threads(args))
    rows = [[c, m] for c, m in zip(report.shifts_tested, report.mismatched_features)]
    text = format_table(["shift", "mismatched features"], rows)
    text += (f"\npadding={report.padding} max discrepancy={report.max_feature_discrepancy:g} "
             f"exact={'yes' if report.exact else 'no'}")
    ok = report.exact or not report.exactness_claimed
    config = {"transform": cfg.to_dict(), "shifts": list(report.shifts_tested), "index": args.index}
    return Outcome(report.to_dict(), text, ok, config, [args.data])


def audit_pca(args) -> Outcome:
    from .pca import format_summary, pca_effective_dim, summarize_reports

    cfg = _transform_config(args)
    thresholds = tuple(args.thresholds)
    if args.test and len(args.data) != 1:
        raise ValidationError("--test pairs with a single --data training file")
    reports = []
    inputs = list(args.data) + ([args.test] if args.test else [])
    for path in args.data:
        train = load_dataset(path, args.data_format)
        parts = [train]
        if args.test and args.source == "pooled":
            parts.append(load_dataset(args.test, args.data_format))
        pooled = Dataset(tuple(i for p in parts for i in p), name=train.name)
        fm = transform(pooled, cfg, threads=_threads(args))
        reports.append(pca_effective_dim(fm, thresholds, source=args.source))
    rows = [[Path(p).name, r.instances, r.total_features, r.rank, *r.components]
            for p, r in zip(args.data, reports)]
    text = format_table(["dataset", "instances", "features", "rank",
                         *[f"k{t * 100:g}" for t in thresholds]], rows)
    payload = {"reports": reports}
    if len(reports) > 1:
        summary = summarize_reports(reports, thresholds)
        payload["summary"] = summary
        text += "\n\n" + format_summary(summary)
    config = {"transform": cfg.to_dict(), "thresholds": list(thresholds), "source": args.source}
    return Outcome(payload, text, config=config, inputs=inputs)


def cmd_replay(args) -> Outcome:
    raise AssertionError("handled in main")  # pragma: no cover


# -- parser -----------------------------------------------------------------


def _common(parser):
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    parser.add_argument("--format", choices=("text", "json"), default="text")
    parser.add_argument("--threads", type=int, default=None,
                        help=f"worker threads (default ${THREADS_ENV} or 1)")
    parser.add_argument("--config", default=None, help="JSON config file; flags take precedence")
    parser.add_argument("--manifest", default=None, help="write the run manifest here")


def _transform_flags(parser):
    parser.add_argument("--kernels", type=int, default=None, help="number of kernels L")
    parser.add_argument("--kernel-lengths", type=_ints, default=None, help="e.g. 7,9,11")
    parser.add_argument("--dilation", default=None, help="'exponential_random' or a fixed integer")
    parser.add_argument("--padding", default=None,
                        choices=("always_zero", "random_zero_or_none", "circular", "none"))
    parser.add_argument("--weight-law", default=None, choices=("paper", "centered_unit"))
    parser.add_argument("--no-standardize", dest="standardize", action="store_false", default=None)
    parser.add_argument("--data-format", choices=("csv", "tsv"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rocketlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rocketlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="compute PPV features for a dataset")
    _common(p)
    _transform_flags(p)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help=".csv or .json")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("classify", help="transform + ridge classifier, report test accuracy")
    _common(p)
    _transform_flags(p)
    p.add_argument("--train")
    p.add_argument("--test")
    p.add_argument("--train-features")
    p.add_argument("--test-features")
    p.add_argument("--lambda-grid", type=_floats, default=None)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--model-out")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("synth", help="write a synthetic two-class dataset")
    _common(p)
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)
    p.add_argument("--train-size", type=int, default=100)
    p.add_argument("--test-size", type=int, default=100)
    p.add_argument("--length", type=int, default=80)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--noise", type=float, default=0.5)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest_file")
    p.set_defaults(func=cmd_replay)

    audit = sub.add_parser("audit", help="numerical checks").add_subparsers(dest="audit", required=True)

    a = audit.add_parser("coherence-bound", help="Monte-Carlo check of the Toeplitz overlap bound")
    _common(a)
    a.add_argument("--n", type=_ints, default=[80])
    a.add_argument("--k", type=_ints, default=[9])
    a.add_argument("--alpha", type=_floats, default=[2.0])
    a.add_argument("--trials", type=int, default=2000)
    a.add_argument("--axis", choices=("columns", "rows"), default="columns")
    a.set_defaults(func=audit_coherence_bound)

    a = audit.add_parser("coherence", help="coherence of one kernel's Toeplitz matrix")
    _common(a)
    a.add_argument("--weights", type=_floats, required=True)
    a.add_argument("--d", type=int, default=1)
    a.add_argument("--n", type=int, required=True)
    a.add_argument("--axis", choices=("columns", "rows"), default="columns")
    a.set_defaults(func=audit_coherence)

    a = audit.add_parser("variance", help="Monte-Carlo check of Var[T_01] = (K-1)/K^2")
    _common(a)
    a.add_argument("--k", type=_ints, default=[2, 5, 9, 21])
    a.add_argument("--samples", type=int, default=100_000)
    a.add_argument("--tolerance", type=float, default=0.05)
    a.set_defaults(func=audit_variance)

    a = audit.add_parser("overlap", help="sum of overlap counts vs N K(K-1)/2")
    _common(a)
    a.add_argument("--n", type=_ints, default=[80])
    a.add_argument("--k", type=_ints, default=[9])
    a.set_defaults(func=audit_overlap)

    a = audit.add_parser("recoverability", help="RIP and coherence recovery conditions")
    _common(a)
    a.add_argument("--s", type=int, required=True)
    a.add_argument("--n", type=int, required=True)
    a.add_argument("--k", type=int, required=True)
    a.add_argument("--c-s", type=float, default=1.0)
    a.add_argument("--mu", type=float, default=0.0)
    a.set_defaults(func=audit_recoverability)

    a = audit.add_parser("cross-basis", help="DFT/identity coherence and the dilation comparison")
    _common(a)
    a.add_argument("--n", type=_ints, default=[4, 16, 64])
    a.add_argument("--k", type=int, default=9)
    a.add_argument("--length", type=int, default=64)
    a.add_argument("--dilation", type=int, default=4)
    a.add_argument("--pairs", type=int, default=200)
    a.set_defaults(func=audit_cross_basis)

    a = audit.add_parser("axioms", help="sparsity-axiom battery for 1/PPV")
    _common(a)
    a.add_argument("--trials", type=int, default=1000)
    a.add_argument("--p1-trials", type=int, default=20)
    a.set_defaults(func=audit_axioms)

    a = audit.add_parser("sparsity", help="PPV sparsity estimates per series")
    _common(a)
    a.add_argument("--data", required=True)
    a.add_argument("--data-format", choices=("csv", "tsv"), default=None)
    a.add_argument("--threshold", type=float, default=0.0)
    a.add_argument("--csv-out", help="per-sample CSV for thresholding plots")
    a.set_defaults(func=audit_sparsity)

    a = audit.add_parser("lipschitz", help="analytic noise-robustness bound")
    _common(a)
    a.add_argument("--l", type=int, default=10_000)
    a.add_argument("--n", type=int, default=80)
    a.add_argument("--alpha", type=float, default=0.005)
    a.set_defaults(func=audit_lipschitz)

    a = audit.add_parser("robustness", help="empirical noise-robustness certificate")
    _common(a)
    _transform_flags(a)
    a.add_argument("--data", required=True)
    a.add_argument("--index", type=int, default=0)
    a.add_argument("--alpha", type=float, default=0.005)
    a.add_argument("--trials", type=int, default=1000)
    a.add_argument("--sigma", type=float, default=1.0)
    a.add_argument("--noise", choices=("gaussian", "uniform", "laplace"), default="gaussian")
    a.set_defaults(func=audit_robustness)

    a = audit.add_parser("shift", help="circular-shift invariance check")
    _common(a)
    _transform_flags(a)
    a.add_argument("--data", required=True)
    a.add_argument("--index", type=int, default=0)
    a.add_argument("--shifts", type=_ints, default=None)
    a.set_defaults(func=audit_shift)

    a = audit.add_parser("pca", help="principal components needed for 90%%/95%% variance")
    _common(a)
    _transform_flags(a)
    a.add_argument("--data", nargs="+", required=True)
    a.add_argument("--test", default=None)
    a.add_argument("--source", choices=("pooled", "train"), default="pooled")
    a.add_argument("--thresholds", type=_floats, default=[0.90, 0.95])
    a.set_defaults(func=audit_pca)

    return parser


def _command_name(args) -> str:
    return args.command + (f" {args.audit}" if args.command == "audit" else "")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    if args.command == "replay":
        try:
            manifest = json.loads(Path(args.manifest_file).read_text())
            recorded = manifest["argv"]
        except (OSError, ValueError, KeyError) as exc:
            print(f"error: cannot read manifest {args.manifest_file}: {exc}", file=sys.stderr)
            return 2
        return main(recorded)

    try:
        outcome = args.func(args)
    except (ValidationError, DatasetParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RocketLabError, AssertionError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    seed = args.seed if args.seed is not None else outcome.config.get("seed", 0)
    manifest = build_manifest(_command_name(args), argv, outcome.config, seed, outcome.inputs)
    manifest_path = args.manifest
    if manifest_path is None and outcome.artifacts:
        manifest_path = str(outcome.artifacts[0]) + ".manifest.json"
    if manifest_path:
        Path(manifest_path).write_text(dumps(manifest) + "\n")

    if args.format == "json":
        doc = {
            "schema_version": SCHEMA_VERSION,
            "command": _command_name(args),
            "ok": outcome.ok,
            "result": to_jsonable(outcome.payload),
            "manifest": manifest,
        }
        print(dumps(doc))
    else:
        print(outcome.text)
    return 0 if outcome.ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
