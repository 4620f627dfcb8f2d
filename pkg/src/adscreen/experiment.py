"""End-to-end experiment orchestration.

For every fold: fit preprocessing on the training split only, train the
three classifiers, optionally transfer-train the three regressors, evaluate
individual models and the requested ensembles on the validation split, and
emit metrics/ROC/confusion/history CSVs plus SVG plots rendered from those
CSVs.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import features
from .chat import parse_transcript, speaker_sequence
from .dataio import DatasetManifest, load_compare_csv, read_wav_duration
from .ensemble import average_regression, hard_vote, learnt_vote, soft_vote
from .errors import ProtocolMismatch
from .evaluation import (
    ConfusionMatrix,
    aggregate_report,
    classification_metrics,
    make_grouped_folds,
    make_loso_folds,
    make_stratified_folds,
    regression_metrics,
    roc_curve,
)
from .models import (
    TrainConfig,
    build_classifier,
    predict_mmse_batch,
    predict_proba_batch,
    save_checkpoint,
    to_regressor,
    train_classifier,
    train_lr_voter,
    train_regressor,
)
from .report import CONFUSION_COLUMNS, METRICS_COLUMNS, ROC_COLUMNS, render_report_svgs, write_csv

MODEL_ORDER = ("disfluency", "acoustic", "interventions")
LABEL_TO_INT = {"CN": 0, "AD": 1}


@dataclass
class ExperimentConfig:
    task: str = "classify"  # classify | regress | both
    protocol: str = "kfold"  # kfold | loso | holdout
    k: int = 5
    ensemble: str = "all"  # hard | soft | learnt | all
    seed: int = 0
    output_dir: Path = Path("adscreen-out")
    acoustic_dim: int = 6373
    pca_components: int = 21
    seq_len: int = 32
    hidden: dict = field(default_factory=dict)  # per-kind width overrides
    max_epochs: int = 400
    batch_size: int = 8
    lr_classification: float = 0.01
    lr_regression: float = 0.001
    grouped: bool | None = None  # None: group iff group ids repeat
    jobs: int = 1
    save_checkpoints: bool = False
    inner_folds: int = 4  # nested split for the learnt voter

    def train_config(self, seed: int, epochs: int | None = None) -> TrainConfig:
        return TrainConfig(
            batch_size=self.batch_size,
            lr_classification=self.lr_classification,
            lr_regression=self.lr_regression,
            max_epochs=epochs if epochs is not None else self.max_epochs,
            seed=seed,
        )

    def requested_ensembles(self) -> list[str]:
        if self.ensemble == "all":
            return ["hard", "soft", "learnt"]
        return [self.ensemble]


@dataclass
class SubjectData:
    subject_id: str
    disfluency_raw: np.ndarray
    acoustic_raw: np.ndarray
    interventions: np.ndarray
    label: int | None
    mmse: int | None
    group_id: str


def load_subject_data(manifest: DatasetManifest, config: ExperimentConfig) -> list[SubjectData]:
    subjects = []
    for row in manifest:
        doc = parse_transcript(
            row.transcript_path.read_bytes().decode("utf-8", errors="replace"),
            row.subject_id,
        )
        duration = row.duration_s
        if duration is None:
            duration = read_wav_duration(row.audio_path)
        subjects.append(
            SubjectData(
                subject_id=row.subject_id,
                disfluency_raw=features.extract_disfluency_raw(doc, duration),
                acoustic_raw=load_compare_csv(row.acoustic_csv_path, config.acoustic_dim),
                interventions=features.encode_interventions(
                    speaker_sequence(doc), config.seq_len
                ),
                label=LABEL_TO_INT[row.label] if row.label else None,
                mmse=row.mmse,
                group_id=row.group_id,
            )
        )
    return subjects


def _onehot(labels: list[int]) -> np.ndarray:
    out = np.zeros((len(labels), 2))
    out[np.arange(len(labels)), labels] = 1.0
    return out


class _FittedFeatures:
    """Training-split preprocessing stats and the derived model inputs."""

    def __init__(self, train: list[SubjectData], config: ExperimentConfig):
        self.minmax = features.fit_minmax([s.disfluency_raw for s in train])
        acoustic_rows = [s.acoustic_raw for s in train]
        self.zscore = features.fit_zscore(acoustic_rows)
        standardized = [features.apply_zscore(r, self.zscore) for r in acoustic_rows]
        self.pca = features.fit_pca(standardized, config.pca_components)

    def inputs(self, subjects: list[SubjectData]) -> dict[str, np.ndarray]:
        disf = np.array([features.apply_minmax(s.disfluency_raw, self.minmax)
                         for s in subjects])
        acoustic = np.array([
            features.apply_pca(features.apply_zscore(s.acoustic_raw, self.zscore), self.pca)
            for s in subjects
        ])
        seqs = np.array([s.interventions for s in subjects])
        return {"disfluency": disf, "acoustic": acoustic, "interventions": seqs}

    def preprocess_arrays(self, kind: str) -> dict:
        if kind == "disfluency":
            return {"disfluency_min": self.minmax[0], "disfluency_max": self.minmax[1]}
        if kind == "acoustic":
            return {
                "acoustic_mean": self.zscore[0],
                "acoustic_std": self.zscore[1],
                "pca_components": self.pca.pca_components,
                "pca_explained_variance": self.pca.pca_explained_variance,
            }
        return {}


def _train_three_classifiers(train, val, config: ExperimentConfig, seed_base: int):
    """Fit preprocessing on train, train one classifier per feature kind."""
    fitted = _FittedFeatures(train, config)
    x_train = fitted.inputs(train)
    x_val = fitted.inputs(val)
    y_train = _onehot([s.label for s in train])
    y_val = _onehot([s.label for s in val])

    checkpoints = {}
    histories = {}
    for m, kind in enumerate(MODEL_ORDER):
        net = build_classifier(
            kind,
            seed=seed_base + m,
            input_dim=config.pca_components if kind == "acoustic" else 11,
            hidden=config.hidden.get(kind),
            seq_len=config.seq_len,
        )
        ckpt, hist = train_classifier(
            net,
            (x_train[kind], y_train),
            (x_val[kind], y_val),
            config.train_config(seed=seed_base + m),
        )
        ckpt.preprocess = fitted.preprocess_arrays(kind)
        checkpoints[kind] = ckpt
        histories[kind] = hist
    return fitted, x_train, x_val, checkpoints, histories


def _oof_probability_rows(train, config: ExperimentConfig, seed_base: int):
    """Out-of-fold probability rows for voter fitting (standard stacking)."""
    ids = [s.subject_id for s in train]
    labels = [s.label for s in train]
    plan = make_stratified_folds(ids, labels, config.inner_folds, config.seed + 71)
    by_id = {s.subject_id: s for s in train}
    rows = np.zeros((len(train), 6))
    row_labels = np.zeros(len(train))
    pos = {sid: i for i, sid in enumerate(ids)}
    for f, (inner_train_ids, inner_val_ids) in enumerate(plan.folds):
        inner_train = [by_id[i] for i in inner_train_ids]
        inner_val = [by_id[i] for i in inner_val_ids]
        _, _, x_val, ckpts, _ = _train_three_classifiers(
            inner_train, inner_val, config, seed_base + 100 * (f + 1)
        )
        probs = [predict_proba_batch(ckpts[k], x_val[k]) for k in MODEL_ORDER]
        for j, sid in enumerate(inner_val_ids):
            rows[pos[sid]] = np.concatenate([p[j] for p in probs])
            row_labels[pos[sid]] = by_id[sid].label
    return rows, row_labels


def _evaluate_fold(fold_idx, train, val, config: ExperimentConfig):
    """Train and evaluate one fold; returns per-model results."""
    seed_base = config.seed * 1000 + fold_idx * 10
    fitted, x_train, x_val, ckpts, histories = _train_three_classifiers(
        train, val, config, seed_base
    )
    val_labels = [s.label for s in val]
    result = {
        "fold": fold_idx,
        "histories": histories,
        "checkpoints": ckpts,
        "val_labels": val_labels,
        "metrics": {},
        "predictions": {},
        "scores": {},
        "confusions": {},
    }

    do_classify = config.task in ("classify", "both")
    do_regress = config.task in ("regress", "both")

    probs = {k: predict_proba_batch(ckpts[k], x_val[k]) for k in MODEL_ORDER}
    if do_classify:
        for kind in MODEL_ORDER:
            preds = list(np.argmax(probs[kind], axis=1))
            cm = ConfusionMatrix.from_predictions(preds, val_labels)
            m = classification_metrics(cm)
            result["metrics"][kind] = {
                "accuracy": m.accuracy, "precision": m.precision,
                "recall": m.recall, "f1": m.f1,
            }
            result["confusions"][kind] = cm
            result["scores"][kind] = list(probs[kind][:, 1])

        wanted = config.requested_ensembles()
        member_rows = list(zip(*(probs[k] for k in MODEL_ORDER)))
        if "hard" in wanted:
            preds = [hard_vote(row) for row in member_rows]
            _record_ensemble(result, "ensemble_hard", preds, val_labels)
        if "soft" in wanted:
            preds = [soft_vote(row)[1] for row in member_rows]
            _record_ensemble(result, "ensemble_soft", preds, val_labels)
        if "learnt" in wanted:
            oof_rows, oof_labels = _oof_probability_rows(train, config, seed_base)
            voter = train_lr_voter(oof_rows, oof_labels)
            preds = [learnt_vote(voter, row) for row in member_rows]
            _record_ensemble(result, "ensemble_learnt", preds, val_labels)

    if do_regress:
        train_mmse = [s for s in train if s.mmse is not None]
        val_mmse = [s for s in val if s.mmse is not None]
        if not train_mmse or not val_mmse:
            raise ProtocolMismatch("regression requested but MMSE labels are missing")
        xr_train = fitted.inputs(train_mmse)
        xr_val = fitted.inputs(val_mmse)
        yr_train = np.array([s.mmse for s in train_mmse], dtype=np.float64)
        yr_val = np.array([s.mmse for s in val_mmse], dtype=np.float64)

        member_preds = {}
        for m, kind in enumerate(MODEL_ORDER):
            reg = to_regressor(ckpts[kind])
            reg_ckpt, _ = train_regressor(
                reg,
                (xr_train[kind], yr_train),
                (xr_val[kind], yr_val),
                config.train_config(seed=seed_base + m + 5),
            )
            reg_ckpt.preprocess = fitted.preprocess_arrays(kind)
            result["checkpoints"][f"{kind}_regressor"] = reg_ckpt
            preds = predict_mmse_batch(reg_ckpt, xr_val[kind])
            member_preds[kind] = preds
            rmse, mae = regression_metrics(preds, yr_val)
            result["metrics"].setdefault(kind, {})
            result["metrics"][kind].update({"rmse": rmse, "mae": mae})

        avg = [
            average_regression([member_preds[k][j] for k in MODEL_ORDER])
            for j in range(len(val_mmse))
        ]
        rmse, mae = regression_metrics(avg, yr_val)
        result["metrics"]["ensemble_regression"] = {"rmse": rmse, "mae": mae}
        result["predictions"]["ensemble_regression"] = avg
    return result


def _record_ensemble(result, name, preds, val_labels):
    cm = ConfusionMatrix.from_predictions(preds, val_labels)
    m = classification_metrics(cm)
    result["metrics"][name] = {
        "accuracy": m.accuracy, "precision": m.precision,
        "recall": m.recall, "f1": m.f1,
    }
    result["confusions"][name] = cm
    result["predictions"][name] = preds


def _build_fold_plan(subjects: list[SubjectData], config: ExperimentConfig):
    ids = [s.subject_id for s in subjects]
    labels = [s.label for s in subjects]
    if config.protocol == "loso":
        return make_loso_folds(ids)
    groups = [s.group_id for s in subjects]
    grouped = config.grouped
    if grouped is None:
        grouped = len(set(groups)) < len(ids)
    if grouped:
        return make_grouped_folds(ids, groups, labels, config.k, config.seed)
    return make_stratified_folds(ids, labels, config.k, config.seed)


def run_experiment(config: ExperimentConfig, manifest: DatasetManifest,
                   holdout_manifest: DatasetManifest | None = None) -> dict:
    """Run the configured protocol and write all report artifacts.

    Returns {model name -> MetricsReport}.
    """
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    subjects = load_subject_data(manifest, config)
    if config.task in ("classify", "both") and any(s.label is None for s in subjects):
        raise ProtocolMismatch("classification requested but labels are missing")
    if config.task in ("regress", "both") and all(s.mmse is None for s in subjects):
        raise ProtocolMismatch("regression requested but every MMSE is null")
    by_id = {s.subject_id: s for s in subjects}

    if config.protocol == "holdout":
        if holdout_manifest is None:
            raise ProtocolMismatch("holdout protocol needs a second manifest")
        # internal stratified 80/20 split for checkpoint selection
        plan = make_stratified_folds(
            [s.subject_id for s in subjects], [s.label for s in subjects],
            5, config.seed,
        )
        train_ids, val_ids = plan.folds[0]
        test_subjects = load_subject_data(holdout_manifest, config)
        # train on the 80%, monitor on the 20%, evaluate once on holdout
        result = _evaluate_holdout(
            [by_id[i] for i in train_ids], [by_id[i] for i in val_ids],
            test_subjects, config,
        )
        fold_results = [result]
    else:
        plan = _build_fold_plan(subjects, config)
        folds = [
            ([by_id[i] for i in train_ids], [by_id[i] for i in val_ids])
            for train_ids, val_ids in plan.folds
        ]
        if config.jobs > 1:
            with ThreadPoolExecutor(max_workers=config.jobs) as pool:
                futures = [
                    pool.submit(_evaluate_fold, f, tr, va, config)
                    for f, (tr, va) in enumerate(folds)
                ]
                fold_results = [fut.result() for fut in futures]
        else:
            fold_results = [
                _evaluate_fold(f, tr, va, config) for f, (tr, va) in enumerate(folds)
            ]

    reports = _aggregate_and_write(fold_results, config, out_dir)
    if config.save_checkpoints:
        for name, ckpt in fold_results[-1]["checkpoints"].items():
            suffix = "regressor" if name.endswith("_regressor") else "classifier"
            kind = name.replace("_regressor", "")
            save_checkpoint(ckpt, out_dir / f"{suffix}_{kind}.ckpt")
    return reports


def _evaluate_holdout(train, val, test, config: ExperimentConfig):
    """Single 'fold': fit on train, select on val, evaluate on test."""
    result = _evaluate_fold(0, train, val, config)
    # Re-score every model on the held-out manifest.
    fitted = _FittedFeatures(train, config)
    x_test = fitted.inputs(test)
    test_labels = [s.label for s in test]
    ckpts = result["checkpoints"]
    result["metrics"] = {}
    result["confusions"] = {}
    result["scores"] = {}
    result["predictions"] = {}
    result["val_labels"] = test_labels

    if config.task in ("classify", "both"):
        probs = {k: predict_proba_batch(ckpts[k], x_test[k]) for k in MODEL_ORDER}
        for kind in MODEL_ORDER:
            preds = list(np.argmax(probs[kind], axis=1))
            _record_ensemble(result, kind, preds, test_labels)
            result["scores"][kind] = list(probs[kind][:, 1])
        member_rows = list(zip(*(probs[k] for k in MODEL_ORDER)))
        wanted = config.requested_ensembles()
        if "hard" in wanted:
            _record_ensemble(result, "ensemble_hard",
                             [hard_vote(r) for r in member_rows], test_labels)
        if "soft" in wanted:
            _record_ensemble(result, "ensemble_soft",
                             [soft_vote(r)[1] for r in member_rows], test_labels)
        if "learnt" in wanted:
            oof_rows, oof_labels = _oof_probability_rows(
                train, config, config.seed * 1000
            )
            voter = train_lr_voter(oof_rows, oof_labels)
            _record_ensemble(result, "ensemble_learnt",
                             [learnt_vote(voter, r) for r in member_rows], test_labels)

    if config.task in ("regress", "both"):
        test_mmse = [s for s in test if s.mmse is not None]
        if not test_mmse:
            raise ProtocolMismatch("regression requested but holdout MMSE is all null")
        xr_test = fitted.inputs(test_mmse)
        yr_test = np.array([s.mmse for s in test_mmse], dtype=np.float64)
        member_preds = {}
        for kind in MODEL_ORDER:
            reg_ckpt = ckpts[f"{kind}_regressor"]
            preds = predict_mmse_batch(reg_ckpt, xr_test[kind])
            member_preds[kind] = preds
            rmse, mae = regression_metrics(preds, yr_test)
            result["metrics"].setdefault(kind, {}).update({"rmse": rmse, "mae": mae})
        avg = [
            average_regression([member_preds[k][j] for k in MODEL_ORDER])
            for j in range(len(test_mmse))
        ]
        rmse, mae = regression_metrics(avg, yr_test)
        result["metrics"]["ensemble_regression"] = {"rmse": rmse, "mae": mae}
    return result


def _aggregate_and_write(fold_results: list[dict], config: ExperimentConfig,
                         out_dir: Path) -> dict:
    model_names: list[str] = []
    for res in fold_results:
        for name in res["metrics"]:
            if name not in model_names:
                model_names.append(name)

    reports = {}
    metrics_rows = []
    roc_rows = []
    confusion_rows = []
    for name in model_names:
        per_fold = [res["metrics"][name] for res in fold_results if name in res["metrics"]]
        report = aggregate_report(per_fold)

        pooled_cm = ConfusionMatrix()
        has_cm = False
        for res in fold_results:
            cm = res["confusions"].get(name)
            if cm is not None:
                has_cm = True
                pooled_cm.tp += cm.tp
                pooled_cm.fp += cm.fp
                pooled_cm.fn += cm.fn
                pooled_cm.tn += cm.tn
        if has_cm:
            report.confusion = pooled_cm
            confusion_rows.append({
                "model": name, "tp": pooled_cm.tp, "fp": pooled_cm.fp,
                "fn": pooled_cm.fn, "tn": pooled_cm.tn,
            })

        pooled_scores = []
        pooled_labels = []
        for res in fold_results:
            if name in res["scores"]:
                pooled_scores.extend(res["scores"][name])
                pooled_labels.extend(res["val_labels"])
        if pooled_scores and len(set(pooled_labels)) == 2:
            points, auc = roc_curve(pooled_scores, pooled_labels)
            report.roc_points = points
            report.auc = auc
            for fpr, tpr, thr in points:
                roc_rows.append({"model": name, "fpr": fpr, "tpr": tpr,
                                 "threshold": thr})

        for res in fold_results:
            if name in res["metrics"]:
                row = {"model": name, "fold": res["fold"]}
                row.update(res["metrics"][name])
                metrics_rows.append(row)
        for stat, values in (("mean", report.mean), ("std", report.std)):
            row = {"model": name, "fold": stat}
            row.update(values)
            if stat == "mean" and report.auc is not None:
                row["auc"] = report.auc
            metrics_rows.append(row)
        reports[name] = report

    write_csv(out_dir / "metrics.csv", METRICS_COLUMNS, metrics_rows)
    if roc_rows:
        write_csv(out_dir / "roc.csv", ROC_COLUMNS, roc_rows)
    if confusion_rows:
        write_csv(out_dir / "confusion.csv", CONFUSION_COLUMNS, confusion_rows)
    for res in fold_results:
        for kind, hist in res["histories"].items():
            n = len(hist["train_loss"])
            rows = []
            for e in range(n):
                row = {"epoch": e}
                for key, series in hist.items():
                    row[key] = series[e]
                rows.append(row)
            columns = ["epoch"] + list(hist.keys())
            write_csv(out_dir / f"history_{kind}_fold{res['fold']}.csv", columns, rows)
    render_report_svgs(out_dir)
    return reports
