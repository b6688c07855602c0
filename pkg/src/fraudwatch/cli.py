"""Operator command line: gen-data, train, optimize-threshold, evaluate,
serve, phish-score. Every subcommand is reproducible from (inputs, flags,
seed), and artifacts are written atomically (write-then-rename)."""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Optional

import numpy as np

from .costopt import (
    CostParams,
    EvaluationReport,
    ThresholdSweep,
    evaluate_scores,
    optimize_threshold,
    score_dataset,
    threshold_sweep,
)
from .data import (
    Dataset,
    PreprocessConfig,
    SyntheticParams,
    balance,
    encode_dataset,
    fit_codec,
    format_timestamp,
    generate_synthetic,
    parse_csv,
    sample_weights,
    temporal_split,
    write_csv,
)
from .engine import DecisionPolicy, DeploymentBundle, load_bundle_file, save_bundle
from .models import (
    EnsembleModel,
    TrainConfig,
    build_ensemble,
    load_model,
    save_model,
    train_forest,
    train_linear,
    train_tree,
)
from .phishgate import classify_url, default_config, load_config

VALIDATION_TAIL_FRACTION = 0.8  # head of the train split stays training-only


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1, not argparse's default 2
    def error(self, message):
        raise UsageError(message)


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Write-then-rename so a crash never leaves a partial artifact."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_dataset(path: str) -> Dataset:
    with open(path, "rb") as fh:
        return parse_csv(fh)


def train_pipeline(data: Dataset, train_fraction: float, strategy: str,
                   seed: int, cfg: Optional[TrainConfig] = None) -> EnsembleModel:
    """Fit codec and the three base learners on the balanced head of the
    train split; the tail stays untouched so threshold tuning sees
    out-of-sample scores (in-sample tuning picks a tau that does not
    transfer)."""
    train, _ = temporal_split(data, train_fraction)
    fit_part, _ = temporal_split(train, VALIDATION_TAIL_FRACTION)
    balanced, class_weights = balance(fit_part, strategy, seed=seed)
    codec = fit_codec(balanced, PreprocessConfig())
    X = encode_dataset(codec, balanced)
    y = balanced.labels()
    w = sample_weights(balanced, class_weights)
    cfg = cfg or TrainConfig(seed=seed)
    members = [
        train_tree(X, y, w, cfg),
        train_forest(X, y, w, cfg),
        train_linear(X, y, w, cfg),
    ]
    return build_ensemble(members, codec)


def validation_slice(data: Dataset, train_fraction: float) -> Dataset:
    """Tail 20% of the train partition (time-ordered); the test partition
    stays untouched until evaluate."""
    train, _ = temporal_split(data, train_fraction)
    _, val = temporal_split(train, VALIDATION_TAIL_FRACTION)
    return val


def optimize_pipeline(data: Dataset, ensemble: EnsembleModel,
                      train_fraction: float, costs: CostParams,
                      ) -> tuple[ThresholdSweep, DeploymentBundle]:
    val = validation_slice(data, train_fraction)
    scored = score_dataset(ensemble, val)
    sweep = optimize_threshold(scored, costs)
    # created_at derives from the data so identical runs stay byte-identical
    created_at = max(r.timestamp for r in val.records)
    bundle = DeploymentBundle(
        ensemble=ensemble,
        policy=DecisionPolicy(block_threshold=sweep.chosen),
        model_version=ensemble.model_version,
        created_at=created_at,
    )
    return sweep, bundle


def sweep_csv_bytes(sweep: ThresholdSweep) -> bytes:
    lines = ["threshold,tp,fp,tn,fn,cost,precision,recall,f1,accuracy,fpr"]
    for r in sweep.rows:
        lines.append(",".join([
            repr(r.tau), str(r.cm.tp), str(r.cm.fp), str(r.cm.tn), str(r.cm.fn),
            repr(r.cost), repr(r.precision), repr(r.recall), repr(r.f1),
            repr(r.accuracy), repr(r.fpr)]))
    return ("\n".join(lines) + "\n").encode()


def curve_csv_bytes(points, header: str) -> bytes:
    lines = [header]
    lines.extend(f"{repr(a)},{repr(b)}" for a, b in points)
    return ("\n".join(lines) + "\n").encode()


def confusion_csv_bytes(report: EvaluationReport) -> bytes:
    cm = report.cm
    lines = [
        "actual,predicted,count",
        f"fraud,fraud,{cm.tp}",
        f"legit,fraud,{cm.fp}",
        f"fraud,legit,{cm.fn}",
        f"legit,legit,{cm.tn}",
    ]
    return ("\n".join(lines) + "\n").encode()


def emit_curves(report: EvaluationReport, sweep: ThresholdSweep,
                out_dir: Path) -> dict[str, str]:
    """Write roc.csv, pr.csv, sweep.csv, confusion.csv; omitted curves
    (degenerate data) are flagged in the report instead of emitted."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}
    if report.roc_points is not None:
        atomic_write_bytes(out_dir / "roc.csv",
                           curve_csv_bytes(report.roc_points, "fpr,tpr"))
        written["roc"] = "roc.csv"
    if report.pr_points is not None:
        atomic_write_bytes(out_dir / "pr.csv",
                           curve_csv_bytes(report.pr_points, "recall,precision"))
        written["pr"] = "pr.csv"
    atomic_write_bytes(out_dir / "sweep.csv", sweep_csv_bytes(sweep))
    written["sweep"] = "sweep.csv"
    atomic_write_bytes(out_dir / "confusion.csv", confusion_csv_bytes(report))
    written["confusion"] = "confusion.csv"
    return written


def report_json_bytes(report: EvaluationReport, costs: CostParams,
                      model_version: str, split_boundary: str,
                      curve_files: dict[str, str]) -> bytes:
    doc = {
        "tau": report.tau,
        "model_version": model_version,
        "n_records": report.n_records,
        "split_boundary_ts": split_boundary,
        "cost_params": {"c_fn": costs.c_fn, "c_fp": costs.c_fp,
                        "max_fpr": costs.max_fpr},
        "metrics": {
            "accuracy": report.accuracy,
            "precision": report.precision,
            "recall": report.recall,
            "f1": report.f1,
            "fpr": report.fpr,
            "roc_auc": report.roc_auc,
            "pr_auc": report.pr_auc,
        },
        "confusion": {"tp": report.cm.tp, "fp": report.cm.fp,
                      "tn": report.cm.tn, "fn": report.cm.fn},
        "flags": list(report.flags),
        "curves": curve_files,
    }
    return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode()


# --- subcommands ------------------------------------------------------------

def cmd_gen_data(args) -> int:
    params = SyntheticParams(rows=args.rows, fraud_rate=args.fraud_rate,
                             seed=args.seed)
    ds = generate_synthetic(params)
    buf = io.BytesIO()
    write_csv(ds, buf)
    atomic_write_bytes(Path(args.out), buf.getvalue())
    n_fraud = int(ds.labels().sum())
    print(f"wrote {args.rows} rows ({n_fraud} fraud) to {args.out}")
    return 0


def cmd_train(args) -> int:
    data = load_dataset(args.data)
    ensemble = train_pipeline(data, args.train_fraction, args.balance, args.seed)
    atomic_write_bytes(Path(args.model), save_model(ensemble))
    print(f"trained ensemble {ensemble.model_version} "
          f"({len(ensemble.members)} members, {ensemble.codec.width} features) "
          f"-> {args.model}")
    return 0


def cmd_optimize_threshold(args) -> int:
    data = load_dataset(args.data)
    ensemble = load_model(Path(args.model).read_bytes())
    costs = CostParams(c_fn=args.cost_fn, c_fp=args.cost_fp, max_fpr=args.max_fpr)
    sweep, bundle = optimize_pipeline(data, ensemble, args.train_fraction, costs)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_bytes(out_dir / "sweep.csv", sweep_csv_bytes(sweep))
    atomic_write_bytes(Path(args.bundle), save_bundle(bundle))
    row = sweep.chosen_row
    print(f"tau*={sweep.chosen} cost={row.cost} recall={row.recall:.4f} "
          f"fpr={row.fpr:.6f} -> {args.bundle}")
    return 0


def cmd_evaluate(args) -> int:
    data = load_dataset(args.data)
    bundle = load_bundle_file(args.bundle)
    train, test = temporal_split(data, args.train_fraction)
    tau = bundle.policy.block_threshold
    scored = score_dataset(bundle.ensemble, test)
    report = evaluate_scores(scored, tau)
    costs = CostParams(c_fn=args.cost_fn, c_fp=args.cost_fp, max_fpr=args.max_fpr)
    grid = np.unique(np.concatenate([scored.scores, [0.0, 0.5, 1.0, tau]]))
    rows = threshold_sweep(scored, costs, grid)
    sweep = ThresholdSweep(rows=tuple(rows), chosen=tau, costs=costs)
    out_dir = Path(args.out)
    curve_files = emit_curves(report, sweep, out_dir)
    boundary = format_timestamp(max(r.timestamp for r in train.records))
    atomic_write_bytes(
        out_dir / "report.json",
        report_json_bytes(report, costs, bundle.model_version, boundary,
                          curve_files))
    print(f"evaluated {report.n_records} records at tau={tau}: "
          f"recall={report.recall:.4f} fpr={report.fpr:.6f} "
          f"precision={report.precision:.4f} -> {out_dir}/report.json")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .api import ApiConfig, create_app

    cfg = ApiConfig.from_env()
    if args.addr is not None:
        cfg.addr = args.addr
    if args.api_key is not None:
        cfg.api_key = args.api_key
    if args.bundle is not None:
        cfg.bundle_path = args.bundle
    if args.audit_log is not None:
        cfg.audit_log_path = args.audit_log
    if args.phish_config is not None:
        cfg.phishing_config_path = args.phish_config

    host, _, port = cfg.addr.partition(":")
    app = create_app(cfg)
    print(f"serving on {cfg.addr} (bundle={cfg.bundle_path})")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000),
                log_level="warning")
    return 0


def cmd_phish_score(args) -> int:
    cfg = load_config(args.phish_config) if args.phish_config else default_config()
    verdict = classify_url(args.url, cfg)
    print(f"{verdict.verdict} risk={verdict.risk_score:.3f} "
          f"matched={','.join(verdict.matched_features) or '-'} {args.url}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="fraudwatch",
                     description="cost-sensitive fraud scoring pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a seeded synthetic CSV")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--fraud-rate", type=float, default=0.005)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="fit codec + ensemble on the train split")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--balance", choices=["class_weights", "undersample"],
                   default="class_weights")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("optimize-threshold",
                       help="pick tau* on the validation slice, write bundle")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--cost-fn", type=float, default=50.0)
    p.add_argument("--cost-fp", type=float, default=1.0)
    p.add_argument("--max-fpr", type=float, default=None)
    p.set_defaults(func=cmd_optimize_threshold)

    p = sub.add_parser("evaluate", help="report + curve CSVs on the test split")
    p.add_argument("--data", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--cost-fn", type=float, default=50.0)
    p.add_argument("--cost-fp", type=float, default=1.0)
    p.add_argument("--max-fpr", type=float, default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="run the HTTP scoring service")
    p.add_argument("--addr", default=None)
    p.add_argument("--api-key", default=None)
    p.add_argument("--bundle", default=None)
    p.add_argument("--audit-log", default=None)
    p.add_argument("--phish-config", default=None)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("phish-score", help="score one URL locally")
    p.add_argument("--url", required=True)
    p.add_argument("--phish-config", default=None)
    p.set_defaults(func=cmd_phish_score)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
