"""Command-line pipeline: bucket construction, training, evaluation,
simulation, and self-verification.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration
error, 3 numeric failure during training.  The SWAT_LOG environment variable
(debug/info/warning/error) controls verbosity.  Every command that writes
files also writes a manifest.json recording the resolved configuration,
input hashes, and output paths.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import dataio, metrics, predictor, simulate, verify
from .buckets import BucketScheme, ablation_choice, from_endpoints, from_percentiles
from .heads import HeadKind
from .predictor import Model, TrainConfig, TrainingDiverged

log = logging.getLogger("swat")


class UsageError(Exception):
    pass


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


def _write_manifest(
    outdir: Path, command: str, config: dict, inputs: list, outputs: list, started: str
) -> None:
    config = {k: v for k, v in config.items() if k != "fn"}
    manifest = {
        "command": command,
        "config": config,
        "seed": config.get("seed"),
        "timestamps": {"started": started, "finished": _utcnow()},
        "inputs": {str(p): _sha256(Path(p)) for p in inputs},
        "outputs": [str(p) for p in outputs],
    }
    with open(outdir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_endpoints(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --endpoints value {text!r}: {exc}") from None


def _parse_probs(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise UsageError(f"bad --probs value {text!r}: {exc}") from None


def _schema_for(args) -> dataio.SchemaConfig:
    if args.schema not in dataio.DEFAULT_SCHEMAS:
        raise UsageError(
            f"unknown schema {args.schema!r}; pick one of {sorted(dataio.DEFAULT_SCHEMAS)}"
        )
    return dataio.DEFAULT_SCHEMAS[args.schema]


def _load_dataset(args, part: str | None = None) -> dataio.Dataset:
    """Load args.data; when --ratio is set, keep the train or test part.

    The split is a pure function of (--ratio, --seed), so `train` and `eval`
    invoked with the same values see disjoint parts of the same file.
    """
    path = Path(args.data)
    if not path.exists():
        raise UsageError(f"data file not found: {path}")
    c = args.c if args.c is not None else dataio.DEFAULT_C[args.schema]
    dataset = dataio.load_csv(path, _schema_for(args), c=c)
    ratio = getattr(args, "ratio", None)
    if ratio is not None and part is not None:
        train_part, test_part = dataio.split(dataset, ratio, args.seed)
        dataset = train_part if part == "train" else test_part
    return dataset


def _ensure_outdir(path_str: str) -> Path:
    outdir = Path(path_str)
    outdir.mkdir(parents=True, exist_ok=True)
    return outdir


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_buckets(args) -> int:
    started = _utcnow()
    if args.endpoints:
        scheme = from_endpoints(_parse_endpoints(args.endpoints), tail_open=args.tail_open)
        inputs = []
    else:
        if not args.data:
            raise UsageError("buckets needs --endpoints or --data")
        dataset = _load_dataset(args, part="train")
        targets = dataset.targets().tolist()
        if args.choice is not None:
            if args.choice not in range(1, 7):
                raise UsageError(f"--choice must be 1..6, got {args.choice}")
            scheme = ablation_choice(targets, args.choice, tail_open=args.tail_open)
        else:
            scheme = from_percentiles(targets, args.percent_step, tail_open=args.tail_open)
        inputs = [args.data]
    outdir = _ensure_outdir(args.out)
    scheme_path = outdir / "scheme.json"
    scheme.save(scheme_path)
    _write_manifest(outdir, "buckets", vars(args), inputs, [scheme_path], started)
    print(f"buckets: N={scheme.n_buckets} endpoints={','.join(map(str, scheme.endpoints))}")
    print(f"wrote {scheme_path}")
    return 0


def _load_scheme(args) -> BucketScheme | None:
    if args.scheme is None:
        return None
    path = Path(args.scheme)
    if not path.exists():
        raise UsageError(f"scheme file not found: {path}")
    return BucketScheme.load(path)


def cmd_train(args) -> int:
    started = _utcnow()
    head = HeadKind(args.head)
    scheme = _load_scheme(args)
    if scheme is None and args.endpoints:
        scheme = from_endpoints(_parse_endpoints(args.endpoints), tail_open=head is HeadKind.GEO)
    if head in (HeadKind.BINOM, HeadKind.GEO) and scheme is None:
        raise UsageError(f"{head.value} head needs --scheme or --endpoints")
    dataset = _load_dataset(args, part="train")
    config = TrainConfig(
        head=head,
        scheme=scheme,
        lr=args.lr,
        batch_size=args.batch,
        max_epochs=args.epochs,
        seed=args.seed,
        hash_dim=args.hash_dim,
        hidden=args.hidden,
    )
    try:
        result = predictor.train(dataset, config)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if result.clipped:
        log.warning("%d samples clipped beyond the last bucket edge", result.clipped)

    outdir = _ensure_outdir(args.out)
    model_path = outdir / "model.json"
    trace_path = outdir / "loss_trace.csv"
    result.model.save(model_path)
    with open(trace_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "mean_loss"])
        for epoch, loss in enumerate(result.epoch_losses):
            writer.writerow([epoch, repr(loss)])
    inputs = [args.data] + ([args.scheme] if args.scheme else [])
    cfg = dict(vars(args))
    cfg["clipped"] = result.clipped
    _write_manifest(outdir, "train", cfg, inputs, [model_path, trace_path], started)
    print(f"trained {head.value} head: {len(result.epoch_losses)} epochs, "
          f"final loss {result.epoch_losses[-1]:.6f}")
    print(f"wrote {model_path}")
    return 0


def cmd_eval(args) -> int:
    started = _utcnow()
    model_path = Path(args.model)
    if not model_path.exists():
        raise UsageError(f"model file not found: {model_path}")
    model = Model.load(model_path)
    dataset = _load_dataset(args, part="test")
    if len(dataset.samples[0].numeric) != model.feature_spec.numeric_dims:
        raise UsageError(
            f"dataset has {len(dataset.samples[0].numeric)} numeric features, "
            f"model expects {model.feature_spec.numeric_dims}"
        )
    scaled = model.predict_dataset(dataset)
    preds = np.asarray([dataio.unscale(v, dataset.c) for v in scaled])
    report = metrics.evaluate(
        preds, dataset.raw_targets(), pair_budget=args.pair_budget, seed=args.seed
    )
    outdir = _ensure_outdir(args.out)
    report_path = outdir / "report.json"
    preds_path = outdir / "predictions.csv"
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    dataio.write_predictions(preds_path, dataset, preds)
    _write_manifest(outdir, "eval", vars(args), [args.model, args.data],
                    [report_path, preds_path], started)
    print(report.table())
    return 0


def cmd_simulate(args) -> int:
    started = _utcnow()
    kind = simulate.Behavior(args.kind)
    scheme = None
    if kind is not simulate.Behavior.STATIONARY:
        if args.endpoints:
            scheme = from_endpoints(
                _parse_endpoints(args.endpoints), tail_open=kind is simulate.Behavior.FOCUSED
            )
        elif args.scheme:
            scheme = _load_scheme(args)
        else:
            raise UsageError(f"{kind.value} simulation needs --endpoints or --scheme")
    try:
        profile = simulate.BehaviorProfile(kind, _parse_probs(args.probs), scheme, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    totals = simulate.draw(profile, args.n)
    outdir = _ensure_outdir(args.out)
    csv_path = outdir / "samples.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "feat", "watch_time"])
        for i, t in enumerate(totals):
            writer.writerow([i, "all", int(t)])
    _write_manifest(outdir, "simulate", vars(args), [], [csv_path], started)
    print(f"simulated {args.n} {kind.value} samples, mean watch time {totals.mean():.4f}")
    print(f"wrote {csv_path}")
    return 0


def cmd_verify(args) -> int:
    started = _utcnow()
    results = verify.run_all(trials=args.trials, seed=args.seed, flip_gradient=args.flip_gradient)
    failed = [name for name, r in results.items() if not r["passed"]]
    for name, r in results.items():
        print(f"[{'PASS' if r['passed'] else 'FAIL'}] {name}: {r['detail']}")
    if args.out:
        outdir = _ensure_outdir(args.out)
        results_path = outdir / "verify.json"
        with open(results_path, "w", encoding="utf-8") as fh:
            json.dump(results, fh, indent=2, sort_keys=True)
            fh.write("\n")
        _write_manifest(outdir, "verify", vars(args), [], [results_path], started)
    else:
        print(json.dumps(results, sort_keys=True))
    if failed:
        print(f"verification FAILED: {', '.join(failed)}", file=sys.stderr)
        return 1
    print("verification passed")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swat", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data_flags(p):
        p.add_argument("--data", help="input CSV path")
        p.add_argument("--schema", default="sim", help="CSV layout: sim, kuairec, or cikm")
        p.add_argument("--c", type=float, default=None,
                       help="target scaling constant (default per schema)")
        p.add_argument("--ratio", type=float, default=None,
                       help="train fraction; buckets/train use it, eval takes the rest")

    p = sub.add_parser("buckets", help="construct a bucket scheme")
    add_data_flags(p)
    p.add_argument("--endpoints", help="explicit endpoints, e.g. 5,12,22")
    p.add_argument("--choice", type=int, default=None, help="endpoint construction 1..6")
    p.add_argument("--percent-step", type=float, default=1.0,
                   help="percentile grid step when --choice is absent")
    p.add_argument("--tail-open", action="store_true",
                   help="include the unbounded tail bucket (geometric heads)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="buckets_out")
    p.set_defaults(fn=cmd_buckets)

    p = sub.add_parser("train", help="fit a head on a CSV")
    add_data_flags(p)
    p.add_argument("--head", required=True, choices=[k.value for k in HeadKind])
    p.add_argument("--scheme", help="scheme JSON path (binom/geo heads)")
    p.add_argument("--endpoints", help="inline scheme, e.g. 5,12,22 (tail set by head)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=2e-3)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch", type=int, default=1024)
    p.add_argument("--hidden", type=int, default=0)
    p.add_argument("--hash-dim", type=int, default=64)
    p.add_argument("--out", default="train_out")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model artifact on a CSV")
    add_data_flags(p)
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--pair-budget", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="eval_out")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("simulate", help="draw synthetic watch times")
    p.add_argument("--kind", required=True,
                   choices=[b.value for b in simulate.Behavior])
    p.add_argument("--probs", required=True, help="per-bucket probabilities, e.g. 0.9,0.5,0.2")
    p.add_argument("--endpoints", help="bucket endpoints, e.g. 5,12,22")
    p.add_argument("--scheme", help="scheme JSON path")
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="simulate_out")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("verify", help="run the built-in property suite")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--flip-gradient", default=None, help=argparse.SUPPRESS)
    p.set_defaults(fn=cmd_verify)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("SWAT_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TrainingDiverged as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
