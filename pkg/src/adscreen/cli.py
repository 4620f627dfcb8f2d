"""Command-line interface.

Subcommands: synth, extract, train, evaluate, predict, report.
Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import features
from .chat import parse_transcript, speaker_sequence
from .dataio import generate_synthetic_corpus, load_compare_csv, load_manifest, read_wav_duration
from .ensemble import average_regression, hard_vote, soft_vote
from .errors import AdScreenError, DataError
from .evaluation import ConfusionMatrix, classification_metrics, regression_metrics
from .experiment import (
    ExperimentConfig,
    MODEL_ORDER,
    load_subject_data,
    run_experiment,
)
from .models import load_checkpoint, predict_mmse_batch, predict_proba_batch
from .report import CONFUSION_COLUMNS, METRICS_COLUMNS, render_report_svgs, write_csv

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _default_out() -> str:
    return os.environ.get("ADSCREEN_OUT", "adscreen-out")


def _parse_protocol(value: str) -> tuple[str, int]:
    if value == "loso":
        return "loso", 0
    if value == "holdout":
        return "holdout", 0
    if value.startswith("kfold"):
        k = 5
        if ":" in value:
            k = int(value.split(":", 1)[1])
        return "kfold", k
    raise _UsageError(f"unknown protocol {value!r} (use kfold[:k], loso, holdout)")


def _build_parser() -> _Parser:
    parser = _Parser(prog="adscreen", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labelled corpus")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sep", type=float, default=3.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=_default_out())
    p.add_argument("--acoustic-dim", type=int, default=64)

    p = sub.add_parser("extract", help="emit raw per-subject feature CSVs")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=_default_out())
    p.add_argument("--acoustic-dim", type=int, default=6373)
    p.add_argument("--seq-len", type=int, default=32)

    for name in ("train", "evaluate"):
        p = sub.add_parser(name)
        p.add_argument("--manifest", required=True)
        p.add_argument("--out", default=_default_out())
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--acoustic-dim", type=int, default=6373)
        p.add_argument("--pca-k", type=int, default=21)
        p.add_argument("--seq-len", type=int, default=32)
        if name == "train":
            p.add_argument("--holdout-manifest")
            p.add_argument("--protocol", default="kfold:5")
            p.add_argument("--task", choices=("classify", "regress", "both"),
                           default="classify")
            p.add_argument("--ensemble", choices=("hard", "soft", "learnt", "all"),
                           default="hard")
            p.add_argument("--epochs", type=int, default=400)
            p.add_argument("--batch-size", type=int, default=8)
            p.add_argument("--jobs", type=int, default=1)
            p.add_argument("--save-checkpoints", action="store_true")
        else:
            p.add_argument("--checkpoint-dir", required=True)

    p = sub.add_parser("predict", help="score a single subject")
    p.add_argument("--checkpoint-dir", required=True)
    p.add_argument("--transcript", required=True)
    p.add_argument("--acoustic-csv", required=True)
    p.add_argument("--duration", type=float)
    p.add_argument("--audio")
    p.add_argument("--acoustic-dim", type=int, default=6373)
    p.add_argument("--seq-len", type=int, default=32)

    p = sub.add_parser("report", help="re-render SVG plots from emitted CSVs")
    p.add_argument("--dir", default=_default_out())
    return parser


def _cmd_synth(args) -> int:
    manifest = generate_synthetic_corpus(
        args.n, args.sep, args.seed, args.out, acoustic_dim=args.acoustic_dim
    )
    print(f"wrote {len(manifest)} subjects to {args.out}")
    return EXIT_OK


def _cmd_extract(args) -> int:
    manifest = load_manifest(args.manifest)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    disf_rows = []
    turn_rows = []
    for row in manifest:
        doc = parse_transcript(
            row.transcript_path.read_bytes().decode("utf-8", errors="replace"),
            row.subject_id,
        )
        duration = row.duration_s
        if duration is None:
            duration = read_wav_duration(row.audio_path)
        raw = features.extract_disfluency_raw(doc, duration)
        rec = {"subject_id": row.subject_id}
        rec.update(zip(features.DISFLUENCY_FEATURE_NAMES, raw))
        disf_rows.append(rec)
        seq = speaker_sequence(doc)[: args.seq_len]
        turn_rows.append({
            "subject_id": row.subject_id,
            "sequence": " ".join(s.value for s in seq),
        })
    write_csv(out_dir / "disfluency_raw.csv",
              ("subject_id",) + features.DISFLUENCY_FEATURE_NAMES, disf_rows)
    write_csv(out_dir / "interventions.csv", ("subject_id", "sequence"), turn_rows)
    print(f"wrote feature CSVs for {len(manifest)} subjects to {out_dir}")
    return EXIT_OK


def _cmd_train(args) -> int:
    protocol, k = _parse_protocol(args.protocol)
    config = ExperimentConfig(
        task=args.task,
        protocol=protocol,
        k=k or 5,
        ensemble=args.ensemble,
        seed=args.seed,
        output_dir=Path(args.out),
        acoustic_dim=args.acoustic_dim,
        pca_components=args.pca_k,
        seq_len=args.seq_len,
        max_epochs=args.epochs,
        batch_size=args.batch_size,
        jobs=args.jobs,
        save_checkpoints=args.save_checkpoints or protocol == "holdout",
    )
    manifest = load_manifest(args.manifest)
    holdout = load_manifest(args.holdout_manifest) if args.holdout_manifest else None
    reports = run_experiment(config, manifest, holdout)
    for name, report in reports.items():
        bits = [f"{key}={report.mean[key]:.4f}±{report.std[key]:.4f}"
                for key in sorted(report.mean)]
        print(f"{name}: " + " ".join(bits))
    print(f"artifacts written to {config.output_dir}")
    return EXIT_OK


def _apply_preprocess(kind: str, subject, preprocess: dict) -> np.ndarray:
    if kind == "disfluency":
        return features.apply_minmax(
            subject.disfluency_raw,
            (preprocess["disfluency_min"], preprocess["disfluency_max"]),
        )
    if kind == "acoustic":
        z = features.apply_zscore(
            subject.acoustic_raw,
            (preprocess["acoustic_mean"], preprocess["acoustic_std"]),
        )
        return preprocess["pca_components"] @ z
    return subject.interventions


def _load_checkpoints(checkpoint_dir: Path, task: str) -> dict:
    ckpts = {}
    for kind in MODEL_ORDER:
        path = checkpoint_dir / f"{task}_{kind}.ckpt"
        if path.exists():
            ckpts[kind] = load_checkpoint(path)
    return ckpts


def _cmd_evaluate(args) -> int:
    manifest = load_manifest(args.manifest)
    config = ExperimentConfig(acoustic_dim=args.acoustic_dim,
                              pca_components=args.pca_k, seq_len=args.seq_len)
    subjects = load_subject_data(manifest, config)
    ckpt_dir = Path(args.checkpoint_dir)
    classifiers = _load_checkpoints(ckpt_dir, "classifier")
    regressors = _load_checkpoints(ckpt_dir, "regressor")
    if len(classifiers) != 3:
        raise DataError(f"expected 3 classifier checkpoints in {ckpt_dir}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    labels = [1 if s.label == 1 else 0 for s in subjects]
    probs = {}
    for kind in MODEL_ORDER:
        ckpt = classifiers[kind]
        x = np.array([_apply_preprocess(kind, s, ckpt.preprocess) for s in subjects])
        probs[kind] = predict_proba_batch(ckpt, x)

    metrics_rows = []
    confusion_rows = []
    for kind in MODEL_ORDER:
        preds = list(np.argmax(probs[kind], axis=1))
        cm = ConfusionMatrix.from_predictions(preds, labels)
        m = classification_metrics(cm)
        metrics_rows.append({"model": kind, "fold": 0, "accuracy": m.accuracy,
                             "precision": m.precision, "recall": m.recall, "f1": m.f1})
        confusion_rows.append({"model": kind, "tp": cm.tp, "fp": cm.fp,
                               "fn": cm.fn, "tn": cm.tn})
    member_rows = list(zip(*(probs[k] for k in MODEL_ORDER)))
    for name, preds in (
        ("ensemble_hard", [hard_vote(r) for r in member_rows]),
        ("ensemble_soft", [soft_vote(r)[1] for r in member_rows]),
    ):
        cm = ConfusionMatrix.from_predictions(preds, labels)
        m = classification_metrics(cm)
        metrics_rows.append({"model": name, "fold": 0, "accuracy": m.accuracy,
                             "precision": m.precision, "recall": m.recall, "f1": m.f1})
        confusion_rows.append({"model": name, "tp": cm.tp, "fp": cm.fp,
                               "fn": cm.fn, "tn": cm.tn})

    if len(regressors) == 3:
        with_mmse = [s for s in subjects if s.mmse is not None]
        if with_mmse:
            targets = np.array([s.mmse for s in with_mmse], dtype=np.float64)
            member_preds = []
            for kind in MODEL_ORDER:
                ckpt = regressors[kind]
                x = np.array([_apply_preprocess(kind, s, ckpt.preprocess)
                              for s in with_mmse])
                member_preds.append(predict_mmse_batch(ckpt, x))
            avg = [average_regression([p[j] for p in member_preds])
                   for j in range(len(with_mmse))]
            rmse, mae = regression_metrics(avg, targets)
            metrics_rows.append({"model": "ensemble_regression", "fold": 0,
                                 "rmse": rmse, "mae": mae})

    write_csv(out_dir / "metrics.csv", METRICS_COLUMNS, metrics_rows)
    write_csv(out_dir / "confusion.csv", CONFUSION_COLUMNS, confusion_rows)
    render_report_svgs(out_dir)
    for row in metrics_rows:
        printable = {k: v for k, v in row.items() if v not in (None, "")}
        print(printable)
    return EXIT_OK


def _cmd_predict(args) -> int:
    if args.duration is None and args.audio is None:
        raise _UsageError("predict needs --duration or --audio")
    ckpt_dir = Path(args.checkpoint_dir)
    classifiers = _load_checkpoints(ckpt_dir, "classifier")
    regressors = _load_checkpoints(ckpt_dir, "regressor")
    if len(classifiers) != 3:
        raise DataError(f"expected 3 classifier checkpoints in {ckpt_dir}")

    transcript_path = Path(args.transcript)
    if not transcript_path.exists():
        raise DataError(f"transcript not found: {transcript_path}")
    doc = parse_transcript(
        transcript_path.read_bytes().decode("utf-8", errors="replace"),
        transcript_path.stem,
    )
    duration = args.duration if args.duration is not None else read_wav_duration(args.audio)

    class _Subject:
        pass

    subject = _Subject()
    subject.disfluency_raw = features.extract_disfluency_raw(doc, duration)
    subject.acoustic_raw = load_compare_csv(args.acoustic_csv, args.acoustic_dim)
    subject.interventions = features.encode_interventions(
        speaker_sequence(doc), args.seq_len
    )

    member_probs = []
    for kind in MODEL_ORDER:
        ckpt = classifiers[kind]
        x = _apply_preprocess(kind, subject, ckpt.preprocess)
        member_probs.append(predict_proba_batch(ckpt, x[None])[0])
    combined, _ = soft_vote(member_probs)
    label = "AD" if hard_vote(member_probs) == 1 else "non-AD"
    print(f"class: {label}")
    print(f"p(AD) soft vote: {combined[1]:.4f}")
    for kind, p in zip(MODEL_ORDER, member_probs):
        print(f"  {kind}: p(AD)={p[1]:.4f}")

    if len(regressors) == 3:
        preds = []
        for kind in MODEL_ORDER:
            ckpt = regressors[kind]
            x = _apply_preprocess(kind, subject, ckpt.preprocess)
            preds.append(float(predict_mmse_batch(ckpt, x[None])[0]))
        print(f"MMSE estimate: {average_regression(preds):.2f}")
    return EXIT_OK


def _cmd_report(args) -> int:
    written = render_report_svgs(args.dir)
    if not written:
        raise DataError(f"no roc.csv or confusion.csv found in {args.dir}")
    for path in written:
        print(f"rendered {path}")
    return EXIT_OK


_COMMANDS = {
    "synth": _cmd_synth,
    "extract": _cmd_extract,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "predict": _cmd_predict,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except AdScreenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
