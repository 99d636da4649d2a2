"""Command-line interface: train, calibrate, predict, eval, synth.

Every command is deterministic given its full flag set (seeds included);
errors exit non-zero with a message on stderr.
"""

from __future__ import annotations

import argparse
import csv
import sys
from itertools import product

import numpy as np

from .calibration import (
    CalibratedModel,
    apply_map_many,
    calibrate,
    estimate_c,
    pu_adjust,
)
from .data import (
    Dataset,
    SplitSpec,
    load_dense,
    load_sparse,
    split_indices,
    standardize,
)
from .evaluation import (
    EvalOptions,
    EvalReport,
    TieMode,
    auc,
    evaluate,
    mse,
    mse_to_truth,
    profit,
    prop2_bound,
)
from .learners import (
    LinearModel,
    LossKind,
    TrainConfig,
    predict_probability,
    predict_score,
    train,
)
from .model_io import load_model, save_model
from .synthetic import (
    DEFAULT_A_VALUES,
    METHOD_NAMES,
    canonical_methods,
    format_sweep_table,
    sweep,
)

_METHOD_KIND = {
    "logreg": LossKind.LOGISTIC,
    "linreg": LossKind.SQUARED,
    "rank": LossKind.PAIRWISE_LOGISTIC,
    "crr": LossKind.CRR,
}
_DEFAULT_ETA0 = {
    "logreg": 0.5,
    "linreg": 0.05,
    "rank": 0.5,
    "crr": 0.5,
}
_DEFAULT_GRID_LAMBDA = (1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0)
_DEFAULT_GRID_ETA0 = (0.01, 0.1, 1.0)


class CliError(Exception):
    pass


# ---------------------------------------------------------------------------
# data loading helpers


def _read_csv_column(path, column: str) -> np.ndarray:
    """Parse one named CSV column as finite floats."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CliError(f"{path}: file is empty")
        if column not in header:
            raise CliError(f"{path}: column {column!r} not in header")
        pos = header.index(column)
        out = []
        for rownum, record in enumerate(reader, start=1):
            try:
                v = float(record[pos])
            except (ValueError, IndexError):
                raise CliError(
                    f"{path}: row {rownum}, column {column!r}: cannot parse value"
                )
            if not np.isfinite(v):
                raise CliError(
                    f"{path}: row {rownum}, column {column!r}: non-finite value"
                )
            out.append(v)
    return np.array(out)


def _load_dataset(args, dimension: int | None = None) -> Dataset:
    """Load the --data file honoring --format/--label/--features and any
    metric columns that must be excluded from the feature set."""
    if args.format == "svmlight":
        return load_sparse(args.data, dimension=dimension)
    if not getattr(args, "label", None):
        raise CliError("--label is required for csv data")
    exclude = {args.label}
    for attr in ("truth_column", "donation_column"):
        col = getattr(args, attr, None)
        if col:
            exclude.add(col)
    features = None
    if getattr(args, "features", None):
        features = [c.strip() for c in args.features.split(",") if c.strip()]
    elif len(exclude) > 1:
        with open(args.data, newline="", encoding="utf-8") as fh:
            header = [h.strip() for h in next(csv.reader(fh))]
        features = [h for h in header if h not in exclude]
    d = load_dense(args.data, args.label, feature_columns=features)
    if dimension is not None and d.dimension != dimension:
        raise CliError(
            f"dimension mismatch: model expects {dimension} features, "
            f"data has {d.dimension}"
        )
    return d


def _add_data_args(p: argparse.ArgumentParser, with_features: bool = True):
    p.add_argument("--data", required=True, help="input data file")
    p.add_argument(
        "--format", choices=("csv", "svmlight"), default="csv",
        help="data file format (default csv)",
    )
    p.add_argument("--label", help="label column name (csv format)")
    if with_features:
        p.add_argument(
            "--features",
            help="comma-separated feature columns to use (csv format; default all)",
        )


# ---------------------------------------------------------------------------
# report rendering


def _fmt(x) -> str:
    return f"{x:.6f}" if isinstance(x, float) else str(x)


def _report_pairs(r: EvalReport) -> list[tuple[str, object]]:
    pairs: list[tuple[str, object]] = [
        ("n", r.n_pos + r.n_neg),
        ("n_pos", r.n_pos),
        ("n_neg", r.n_neg),
        ("base_rate", r.base_rate),
        ("auc", r.auc),
        ("mse", r.mse),
    ]
    if r.mse_to_truth is not None:
        pairs.append(("mse_to_truth", r.mse_to_truth))
    if r.profit is not None:
        pairs.append(("profit", r.profit))
    pairs.append(("prop2_bound", r.prop2_bound))
    return pairs


def render_report(r: EvalReport) -> str:
    """Aligned text block followed by machine-readable key=value lines."""
    pairs = _report_pairs(r)
    width = max(len(k) for k, _ in pairs)
    lines = [f"{k:<{width}}  {_fmt(v)}" for k, v in pairs]
    lines.append("")
    lines.extend(f"{k}={v!r}" for k, v in pairs)
    return "\n".join(lines) + "\n"


def render_split_summary(reports: list[EvalReport]) -> str:
    """Mean +/- deviation over repeated splits, aligned plus machine lines."""
    keys = ["base_rate", "auc", "mse", "mse_to_truth", "profit", "prop2_bound"]
    rows: list[tuple[str, float, float]] = [("splits", float(len(reports)), 0.0)]
    for key in keys:
        vals = [getattr(r, key) for r in reports]
        if any(v is None for v in vals):
            continue
        arr = np.array(vals, dtype=np.float64)
        dev = float(np.std(arr, ddof=1)) if len(arr) > 1 else 0.0
        rows.append((key, float(np.mean(arr)), dev))
    width = max(len(k) for k, _, _ in rows)
    lines = [f"{rows[0][0]:<{width}}  {int(rows[0][1])}"]
    lines += [f"{k:<{width}}  {m:.6f} ± {s:.6f}" for k, m, s in rows[1:]]
    lines.append("")
    lines.append(f"splits={len(reports)}")
    for k, m, s in rows[1:]:
        lines.append(f"{k}_mean={m!r}")
        lines.append(f"{k}_std={s!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# train


def _probabilities(model, d: Dataset) -> np.ndarray:
    if isinstance(model, CalibratedModel):
        scores = np.array([model.score(r) for r in d.rows])
        return apply_map_many(model.map, scores)
    return np.array([predict_probability(model, r) for r in d.rows])


def _grid_metric(
    model: LinearModel, sub_train: Dataset, val: Dataset, args, val_donations
) -> float:
    """Validation-split score for one grid candidate; larger is better."""
    if args.select_by == "auc":
        scores = [predict_score(model, r) for r in val.rows]
        return auc(scores, val.labels)
    probe = model
    if model.loss_kind is LossKind.PAIRWISE_LOGISTIC:
        probe = calibrate(model, sub_train)
    probs = _probabilities(probe, val)
    if args.select_by == "mse":
        return -mse(probs, val.labels)
    contacted = probs >= 0.5
    return profit(contacted, val_donations, args.cost)


def cmd_train(args) -> int:
    kind = _METHOD_KIND[args.method]
    full = _load_dataset(args)
    if full.n == 0:
        raise CliError("training data is empty")

    eta0_fixed = args.eta0 if args.eta0 is not None else _DEFAULT_ETA0[args.method]
    steps = args.steps if args.steps is not None else max(1000, 10 * full.n)
    lambdas = _parse_grid(args.grid_lambda, _DEFAULT_GRID_LAMBDA) or [args.l2]
    eta0s = _parse_grid(args.grid_eta0, _DEFAULT_GRID_ETA0) or [eta0_fixed]

    chosen_l2, chosen_eta0 = lambdas[0], eta0s[0]
    grid_searched = len(lambdas) > 1 or len(eta0s) > 1
    if grid_searched and args.select_by == "profit":
        if args.format != "csv":
            raise CliError("profit selection needs csv data with a donation column")
        if not args.donation_column or args.cost is None:
            raise CliError("profit selection requires --donation-column and --cost")
    if grid_searched:
        stratified = full.n_pos >= 1 and full.n_neg >= 1
        spec = SplitSpec(1.0 - args.val_fraction, args.seed, stratified)
        train_idx, val_idx = split_indices(full, spec)
        sub_train, val = full.take(train_idx), full.take(val_idx)
        val_donations = None
        if args.select_by == "profit":
            val_donations = _read_csv_column(args.data, args.donation_column)[val_idx]
        sub_scaled, val_scaled, _ = _maybe_standardize(args, sub_train, [val])
        best = None
        for l2, eta0 in product(lambdas, eta0s):
            cfg = TrainConfig(
                l2=l2, steps=steps, eta0=eta0,
                seed=args.seed, crr_alpha=args.crr_alpha,
            )
            model = train(sub_scaled, kind, cfg)
            score = _grid_metric(model, sub_scaled, val_scaled[0], args, val_donations)
            if best is None or score > best[0]:
                best = (score, l2, eta0)
        _, chosen_l2, chosen_eta0 = best

    train_scaled, _, params = _maybe_standardize(args, full, [])
    cfg = TrainConfig(
        l2=chosen_l2, steps=steps, eta0=chosen_eta0,
        seed=args.seed, crr_alpha=args.crr_alpha,
    )
    model = train(train_scaled, kind, cfg)
    if params is not None:
        w, b = params.fold(model.weights, model.bias)
        model = LinearModel(w, b, kind)
    metadata = {
        "method": args.method,
        "seed": args.seed,
        "lambda": chosen_l2,
        "eta0": chosen_eta0,
        "steps": steps,
        "crr_alpha": args.crr_alpha if args.method == "crr" else None,
        "selected_by": args.select_by if grid_searched else None,
        "standardize": args.standardize,
    }
    save_model(args.out, model, metadata)
    return 0


def _maybe_standardize(args, train_set: Dataset, others: list[Dataset]):
    if args.standardize == "none":
        return train_set, others, None
    center = args.standardize == "full"
    scaled_train, scaled_others, params = standardize(train_set, others, center=center)
    return scaled_train, scaled_others, params


def _parse_grid(value, default) -> list[float] | None:
    if value is None:
        return None
    if value == "default":
        return list(default)
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise CliError(f"cannot parse grid {value!r}")


# ---------------------------------------------------------------------------
# calibrate


def cmd_calibrate(args) -> int:
    model, metadata = load_model(args.model)
    if isinstance(model, CalibratedModel):
        raise CliError("model is already calibrated")
    d = _load_dataset(args, dimension=model.dimension)
    if d.n == 0:
        raise CliError("calibration data is empty")
    if args.paper_faithful:
        cal_set = d
    else:
        stratified = d.n_pos >= 1 and d.n_neg >= 1
        spec = SplitSpec(1.0 - args.cal_fraction, args.seed, stratified)
        _, cal_idx = split_indices(d, spec)
        cal_set = d.take(cal_idx)
    calibrated = calibrate(model, cal_set)
    metadata = dict(metadata)
    metadata.update(
        {
            "calibration_mode": "full" if args.paper_faithful else "holdout",
            "calibration_seed": args.seed,
            "calibration_fraction": None if args.paper_faithful else args.cal_fraction,
        }
    )
    save_model(args.out, calibrated, metadata)
    return 0


# ---------------------------------------------------------------------------
# predict


def cmd_predict(args) -> int:
    model, _ = load_model(args.model)
    d = _load_dataset(args, dimension=_model_dimension(model))
    is_rank = (
        isinstance(model, LinearModel)
        and model.loss_kind is LossKind.PAIRWISE_LOGISTIC
    )
    if is_rank and not args.raw:
        raise CliError(
            "model is an uncalibrated ranker; its scores are not probabilities. "
            "Run `rankcal calibrate` first, or pass --raw for raw scores."
        )
    if args.pu_c is not None and args.pu_estimate_from:
        raise CliError("--pu-c and --pu-estimate-from are mutually exclusive")

    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        if is_rank:
            if args.pu_c is not None or args.pu_estimate_from:
                raise CliError("PU adjustment needs probability outputs")
            for r in d.rows:
                out.write(f"{predict_score(model, r)!r}\n")
            return 0
        probs = _probabilities(model, d)
        c = None
        if args.pu_c is not None:
            c = estimate_c([args.pu_c])
        elif args.pu_estimate_from:
            pos_args = argparse.Namespace(
                data=args.pu_estimate_from, format=args.format,
                label=args.label, features=getattr(args, "features", None),
            )
            positives = _load_dataset(pos_args, dimension=_model_dimension(model))
            c = estimate_c(_probabilities(model, positives))
        if c is not None:
            probs = np.array([pu_adjust(p, c) for p in probs])
        if args.raw:
            scores = [
                model.score(r) if isinstance(model, CalibratedModel)
                else predict_score(model, r)
                for r in d.rows
            ]
            for p, s in zip(probs, scores):
                out.write(f"{float(p)!r}\t{float(s)!r}\n")
        else:
            for p in probs:
                out.write(f"{float(p)!r}\n")
    finally:
        if args.out:
            out.close()
    return 0


def _model_dimension(model) -> int:
    return (
        model.ranker.dimension
        if isinstance(model, CalibratedModel)
        else model.dimension
    )


# ---------------------------------------------------------------------------
# eval


def _eval_options(args, d: Dataset, indices=None) -> EvalOptions:
    donations = None
    if args.donation_column:
        if args.format != "csv":
            raise CliError("--donation-column needs csv data")
        donations = _read_csv_column(args.data, args.donation_column)
        if indices is not None:
            donations = donations[indices]
        if donations.shape[0] != d.n:
            raise CliError("donation column length does not match data")
        if args.cost is None:
            raise CliError("profit evaluation requires an explicit --cost")
    tie = TieMode.GEQ if args.tie_mode == "geq" else TieMode.HALF
    return EvalOptions(
        tie_mode=tie, donations=donations, cost=args.cost,
        contact_threshold=args.contact_threshold,
    )


def _report_from_probs(probs: np.ndarray, d: Dataset, options: EvalOptions) -> EvalReport:
    auc_value = auc(probs.tolist(), d.labels, options.tie_mode)
    truth = None if d.true_eta is None else mse_to_truth(probs, d.true_eta)
    gain = None
    if options.donations is not None:
        contacted = probs >= options.contact_threshold
        gain = profit(contacted, options.donations, options.cost)
    return EvalReport(
        auc=auc_value,
        mse=mse(probs, d.labels),
        prop2_bound=prop2_bound(auc_value, d.n_pos, d.n_neg),
        n_pos=d.n_pos,
        n_neg=d.n_neg,
        base_rate=d.base_rate,
        mse_to_truth=truth,
        profit=gain,
    )


def cmd_eval(args) -> int:
    if bool(args.model) == bool(args.predictions):
        raise CliError("provide exactly one of --model or --predictions")
    model = None
    if args.model:
        model, _ = load_model(args.model)
        d = _load_dataset(args, dimension=_model_dimension(model))
    else:
        d = _load_dataset(args)
    if args.truth_column:
        if args.format != "csv":
            raise CliError("--truth-column needs csv data")
        eta = _read_csv_column(args.data, args.truth_column)
        d = Dataset(d.rows, d.labels, d.dimension, true_eta=eta)

    preds = None
    if args.predictions:
        with open(args.predictions, encoding="utf-8") as fh:
            preds = np.array([float(line.split()[0]) for line in fh if line.strip()])
        if preds.shape[0] != d.n:
            raise CliError("predictions file length does not match data")

    if args.splits is None:
        options = _eval_options(args, d)
        if model is not None:
            report = evaluate(model, d, options)
        else:
            report = _report_from_probs(preds, d, options)
        sys.stdout.write(render_report(report))
        return 0

    reports = []
    for k in range(args.splits):
        seed = int(np.random.SeedSequence([args.seed, k]).generate_state(1)[0])
        spec = SplitSpec(args.train_fraction, seed, args.stratified)
        _, test_idx = split_indices(d, spec)
        test_part = d.take(test_idx)
        options = _eval_options(args, test_part, indices=test_idx)
        if model is not None:
            reports.append(evaluate(model, test_part, options))
        else:
            reports.append(_report_from_probs(preds[test_idx], test_part, options))
    sys.stdout.write(render_split_summary(reports))
    return 0


# ---------------------------------------------------------------------------
# synth


def _parse_a_values(text: str) -> list[float]:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "^" in tok:
            base, exp = tok.split("^", 1)
            out.append(float(base) ** float(exp))
        else:
            out.append(float(tok))
    return out


def cmd_synth(args) -> int:
    a_values = _parse_a_values(args.a_values) if args.a_values else list(DEFAULT_A_VALUES)
    for a in a_values:
        if not 0.0 <= a <= 0.5:
            raise CliError(f"a={a} outside [0, 0.5]")
    methods = (
        canonical_methods(args.methods.split(","))
        if args.methods
        else list(METHOD_NAMES)
    )
    rows = sweep(
        a_values, args.n, args.trials, methods, args.seed,
        steps=args.steps, l2=getattr(args, "l2", None),
    )
    table = format_sweep_table(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(table)
    else:
        sys.stdout.write(table)
    if args.plot:
        from .figures import render_sweep

        render_sweep(rows, args.plot)
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankcal",
        description="Probability estimation from ranking scores with isotonic calibration.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a linear model")
    _add_data_args(p)
    p.add_argument("--method", required=True, choices=sorted(_METHOD_KIND))
    p.add_argument("--out", required=True, help="output model file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda", dest="l2", type=float, default=1e-4,
                   help="ridge strength (default 1e-4)")
    p.add_argument("--eta0", type=float, default=None,
                   help="initial step size (default depends on method)")
    p.add_argument("--steps", type=int, default=None,
                   help="SGD steps (default 10x the number of rows)")
    p.add_argument("--crr-alpha", type=float, default=0.5,
                   help="probability of a pairwise step for --method crr")
    p.add_argument("--grid-lambda", nargs="?", const="default", default=None,
                   help="comma list of ridge strengths to grid-search "
                        "(bare flag uses the decade grid 1e-4..10)")
    p.add_argument("--grid-eta0", nargs="?", const="default", default=None,
                   help="comma list of step sizes to grid-search "
                        "(bare flag uses 0.01,0.1,1)")
    p.add_argument("--select-by", choices=("auc", "mse", "profit"), default="auc",
                   help="validation metric for the grid search (default auc)")
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--donation-column", help="csv column for profit selection")
    p.add_argument("--cost", type=float, help="contact cost for profit selection")
    p.add_argument("--standardize", choices=("none", "full", "scale"),
                   default="none",
                   help="feature scaling fit on training data and folded into "
                        "the saved weights; 'scale' skips centering")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("calibrate", help="fit an isotonic map on a trained model")
    _add_data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--paper-faithful", action="store_true",
                   help="calibrate on the full data instead of a held-out split")
    p.add_argument("--cal-fraction", type=float, default=0.3,
                   help="held-out fraction used for calibration (default 0.3)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("predict", help="write one probability per input row")
    _add_data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--raw", action="store_true",
                   help="include raw scores (rank models: raw scores only)")
    p.add_argument("--pu-c", type=float, default=None,
                   help="divide probabilities by this labeling rate, clamped at 1")
    p.add_argument("--pu-estimate-from",
                   help="file of labeled positives used to estimate the labeling rate")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="evaluate a model or a predictions file")
    _add_data_args(p)
    p.add_argument("--model")
    p.add_argument("--predictions", help="file with one probability per line")
    p.add_argument("--tie-mode", choices=("half", "geq"), default="half")
    p.add_argument("--truth-column",
                   help="csv column holding true probabilities (adds mse_to_truth)")
    p.add_argument("--donation-column", help="csv column with donation amounts")
    p.add_argument("--cost", type=float, help="cost of contacting one individual")
    p.add_argument("--contact-threshold", type=float, default=0.5)
    p.add_argument("--splits", type=int, default=None,
                   help="repeat over K seeded splits and report mean ± deviation")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--stratified", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="run the capped-link benchmark sweep")
    p.add_argument("--a-values", default=None,
                   help="comma list of floor values; accepts 2^-9 style "
                        "(default 2^-9,2^-7,2^-5,2^-3,2^-1)")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--methods", default=None,
                   help=f"comma list from: {', '.join(METHOD_NAMES)} (default all)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--lambda", dest="l2", type=float, default=None,
                   help="override the benchmark's ridge strength")
    p.add_argument("--out", help="write the table to a file instead of stdout")
    p.add_argument("--plot", help="also render the sweep figure to this file")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
