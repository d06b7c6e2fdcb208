"""``set-predict`` command line tool.

Subcommands: generate, train, eval, infer, benchmark, verify. ``--config FILE``
reads a TOML file whose keys mirror the long flags (``max-cardinality`` or
``max_cardinality``); top-level keys apply to every subcommand and a table
named after the subcommand overrides them. Flags given on the command line win.

Exit codes: 0 success, 1 validation or check failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import benchmark as bench
from . import checks, inference, network
from .artifact import DEFAULT_U, ModelArtifact
from .data import (
    DatasetFormatError,
    SynthConfig,
    cardinality_stats,
    generate,
    read_dataset,
    split,
    write_dataset,
)
from .loss import BCE_MODES, TrainConfig
from .metrics import best_k, evaluate
from .network import Architecture
from .set_model import InvariantError
from .training import TrainingDiverged, train

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

SPLIT_NAMES = ("train", "val", "test")


class CommandError(Exception):
    """Validation failure reported with exit status 1."""


def _fractions(text: str):
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated fractions")
    return tuple(parts)


def _widths(text: str):
    return tuple(int(p) for p in text.split(",") if p.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="set-predict", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="TOML file with default flag values")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic multi-label dataset split")
    g.add_argument("--l", type=int, default=20, help="feature dimension")
    g.add_argument("--M", type=int, default=10, help="number of labels")
    g.add_argument("--n", type=int, default=6000, help="number of samples")
    g.add_argument("--max-cardinality", type=int, help="default: min(6, M)")
    g.add_argument("--prototype-scale", type=float, default=3.0)
    g.add_argument("--noise", type=float, default=0.5)
    g.add_argument("--orthogonal", action="store_true", help="orthonormal class prototypes (needs l >= M)")
    g.add_argument("--fractions", type=_fractions, default=(0.8, 0.1, 0.1))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")

    def training_flags(p):
        p.add_argument("--epochs", type=int, default=60)
        p.add_argument("--batch-size", type=int, default=32)
        p.add_argument("--lr", type=float, default=1e-3)
        p.add_argument("--lr-decay", type=float, default=0.95)
        p.add_argument("--momentum", type=float, default=0.9)
        p.add_argument("--gamma", type=float, default=5e-4)
        p.add_argument("--bce-mode", choices=BCE_MODES, default="full")
        p.add_argument("--hidden", type=_widths, default=(64, 64), help="comma-separated widths")
        p.add_argument("--dropout", type=float, default=0.5)
        p.add_argument("--seed", type=int, default=0)

    t = sub.add_parser("train", help="train a joint model")
    t.add_argument("--data", help="directory with train.jsonl and val.jsonl")
    t.add_argument("--train", help="training JSONL file (overrides --data)")
    t.add_argument("--val", help="validation JSONL file (overrides --data)")
    t.add_argument("--out", required=True, help="model artifact path (JSON)")
    t.add_argument("--u", type=float, default=DEFAULT_U, help="hyper-volume unit stored in the model")
    t.add_argument("--tune-u", action="store_true", help="pick u on the validation set")
    training_flags(t)

    e = sub.add_parser("eval", help="evaluate a model on a dataset")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True, help="JSONL dataset file")
    e.add_argument("--decoder", default="jds", help="jds | ds | topk:K | topk:best")
    e.add_argument("--u", type=float, help="override the model's hyper-volume unit")
    e.add_argument("--json", help="also write the report as JSON here")

    i = sub.add_parser("infer", help="predict label sets")
    i.add_argument("--model", required=True)
    src = i.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="JSONL dataset file")
    src.add_argument("--features", help="one feature vector, comma-separated")
    i.add_argument("--u", type=float, help="override the model's hyper-volume unit")

    b = sub.add_parser("benchmark", help="compare JDS, DS and top-k decoding")
    b.add_argument("--data", required=True, help="directory with train/val/test JSONL files")
    b.add_argument("--u", type=float, help="fixed hyper-volume unit (default: tune on val)")
    b.add_argument("--out", help="write the JSON report here")
    training_flags(b)

    v = sub.add_parser("verify", help="run the randomised oracle suite")
    v.add_argument("--trials", type=int, default=1000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--inject-grad-error", type=float, default=0.0, help=argparse.SUPPRESS)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    with open(args.config, "rb") as fh:
        conf = tomllib.load(fh)
    values = {k: v for k, v in conf.items() if not isinstance(v, dict)}
    values.update(conf.get(args.command, {}))
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in subparser._actions}
    defaults = {}
    for key, value in values.items():
        dest = key.replace("-", "_")
        if dest not in known:
            parser.error(f"unknown config key {key!r} for {args.command}")
        if dest in ("hidden", "fractions"):
            parse = _widths if dest == "hidden" else _fractions
            value = parse(value) if isinstance(value, str) else tuple(value)
        defaults[dest] = value
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _train_config(args) -> TrainConfig:
    return TrainConfig(gamma=args.gamma, bce_mode=args.bce_mode, base_lr=args.lr,
                       lr_decay=args.lr_decay, momentum=args.momentum, epochs=args.epochs,
                       batch_size=args.batch_size, seed=args.seed)


def _histogram(ds) -> str:
    counts = cardinality_stats(ds).counts
    return " ".join(f"{m}:{c}" for m, c in enumerate(counts))


def cmd_generate(args) -> int:
    max_card = min(6, args.M) if args.max_cardinality is None else args.max_cardinality
    cfg = SynthConfig(l=args.l, M=args.M, num_samples=args.n, max_cardinality=max_card,
                      label_prototype_scale=args.prototype_scale, noise_scale=args.noise,
                      seed=args.seed, orthogonal=args.orthogonal)
    parts = split(generate(cfg), args.fractions, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, ds in zip(SPLIT_NAMES, parts):
        write_dataset(ds, out / f"{name}.jsonl")
        print(f"{name}: n={len(ds)} cardinality histogram {_histogram(ds)}")
    return 0


def _split_paths(args):
    base = Path(args.data) if args.data else None
    tr = Path(args.train) if args.train else (base / "train.jsonl" if base else None)
    va = Path(args.val) if args.val else (base / "val.jsonl" if base else None)
    if tr is None or va is None:
        raise CommandError("need --data or both --train and --val")
    return tr, va


def _sidecar(path: Path) -> Path:
    return path.with_name(path.stem + ".log.csv")


def cmd_train(args) -> int:
    tr_path, va_path = _split_paths(args)
    tr, va = read_dataset(tr_path), read_dataset(va_path)
    if (tr.input_dim, tr.num_labels) != (va.input_dim, va.num_labels):
        raise CommandError("train and validation files disagree on l or M")
    arch = Architecture(tr.input_dim, tr.num_labels, args.hidden, args.dropout)
    cfg = _train_config(args)
    stats = cardinality_stats(tr)
    result = train(arch, cfg, tr, va, stats)
    u = args.u
    if args.tune_u:
        out_val = network.forward(result.params, va.features)[0]
        u = bench.tune_u(out_val, va.labels, stats, tr.num_labels)
    rec = result.selected
    artifact = ModelArtifact(arch, result.params, stats, u, cfg, result.selected_epoch,
                             rec.train_objective, rec.val_objective)
    out = Path(args.out)
    artifact.save(out)
    _sidecar(out).write_text(result.history_csv(), encoding="utf-8")
    print(f"selected epoch {result.selected_epoch}: train {rec.train_objective:.6f} "
          f"val {rec.val_objective:.6f} (epoch 0 val {result.history[0].val_objective:.6f}); u={u}")
    return 0


def _load_compatible(model_path, data_path):
    model = ModelArtifact.load(model_path)
    ds = read_dataset(data_path)
    if ds.num_labels != model.arch.num_labels:
        raise CommandError(f"dataset has M={ds.num_labels}, model expects M={model.arch.num_labels}")
    if ds.input_dim != model.arch.input_dim:
        raise CommandError(f"dataset has l={ds.input_dim}, model expects l={model.arch.input_dim}")
    return model, ds


def decode(model: ModelArtifact, ds, decoder: str, u: float):
    """Decode every sample of ``ds``; returns ``(predictions, extra_info)``."""
    out = network.forward(model.params, ds.features)[0]
    M = model.arch.num_labels
    if decoder in ("jds", "ds"):
        return inference.decode_batch(out, model.stats, u, decoder), {}
    if decoder == "topk:best":
        k, _ = best_k(out.label_logits, ds.labels, M, "o_f1")
        return inference.decode_batch(out, model.stats, u, "topk", k=k), {"k_star": k}
    if decoder.startswith("topk:"):
        try:
            k = int(decoder.split(":", 1)[1])
        except ValueError:
            raise CommandError(f"bad decoder {decoder!r}") from None
        return inference.decode_batch(out, model.stats, u, "topk", k=k), {"k": k}
    raise CommandError(f"unknown decoder {decoder!r} (jds | ds | topk:K | topk:best)")


def cmd_eval(args) -> int:
    model, ds = _load_compatible(args.model, args.data)
    u = model.u if args.u is None else args.u
    preds, info = decode(model, ds, args.decoder, u)
    report = evaluate(preds, ds.labels, model.arch.num_labels)
    print(f"decoder = {args.decoder}")
    for k, v in info.items():
        print(f"{k} = {v}")
    print(report.to_text())
    if args.json:
        payload = {"decoder": args.decoder, "u": u, **info, **report.to_dict()}
        Path(args.json).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    return 0


def cmd_infer(args) -> int:
    model = ModelArtifact.load(args.model)
    u = model.u if args.u is None else args.u
    if args.features is not None:
        X = np.array([[float(v) for v in args.features.split(",")]])
    else:
        X = read_dataset(args.data).features
    if X.shape[1] != model.arch.input_dim:
        raise CommandError(f"expected {model.arch.input_dim} features, got {X.shape[1]}")
    out = network.forward(model.params, X)[0]
    for i in range(X.shape[0]):
        res = inference.map_set(out.row(i), model.stats, u)
        print(json.dumps({"labels": res.labels.sorted(), "m": res.m_star, "log_score": res.log_score}))
    return 0


def cmd_benchmark(args) -> int:
    base = Path(args.data)
    parts = [read_dataset(base / f"{n}.jsonl") for n in SPLIT_NAMES]
    cfg = _train_config(args)
    result = bench.run(*parts, cfg=cfg, hidden=args.hidden, dropout=args.dropout, u=args.u)
    print(result.to_text(), end="")
    if args.out:
        Path(args.out).write_text(result.to_json(), encoding="utf-8")
    return 0


def cmd_verify(args) -> int:
    results = checks.run_all(args.trials, args.seed, args.inject_grad_error)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print("ALL CHECKS PASSED" if ok else "SOME CHECKS FAILED")
    return 0 if ok else 1


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "eval": cmd_eval,
    "infer": cmd_infer,
    "benchmark": cmd_benchmark,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = _apply_config(parser, argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (CommandError, DatasetFormatError, InvariantError, TrainingDiverged, ValueError,
            FileNotFoundError) as exc:
        print(f"set-predict {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
