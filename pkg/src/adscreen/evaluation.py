"""Cross-validation fold construction, classification/regression metrics,
ROC/AUC, and per-fold aggregation. AD is the positive class throughout."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyMatrix,
    LengthMismatch,
    SingleClass,
    TooFewGroups,
    TooFewPerClass,
    TooFewSubjects,
)


@dataclass
class FoldPlan:
    folds: list  # list of (train_ids, val_ids)
    k: int
    seed: int = 0
    grouped: bool = False


@dataclass
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @classmethod
    def from_predictions(cls, preds, labels) -> "ConfusionMatrix":
        cm = cls()
        for p, y in zip(preds, labels):
            if y == 1:
                if p == 1:
                    cm.tp += 1
                else:
                    cm.fn += 1
            else:
                if p == 1:
                    cm.fp += 1
                else:
                    cm.tn += 1
        return cm


@dataclass
class ClassificationMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    precision_defined: bool = True
    recall_defined: bool = True


@dataclass
class MetricsReport:
    per_fold: list = field(default_factory=list)  # list of dict metric -> value
    mean: dict = field(default_factory=dict)
    std: dict = field(default_factory=dict)
    roc_points: list = field(default_factory=list)
    auc: float | None = None
    confusion: ConfusionMatrix | None = None


def _deal_balanced(val_folds: list[list], members: list, sizes: list[int]) -> None:
    """Round-robin deal of one class's members, visiting folds from currently
    smallest to largest so remainders land where they keep totals within 1."""
    k = len(val_folds)
    order = sorted(range(k), key=lambda f: (sizes[f], f))
    for i, m in enumerate(members):
        f = order[i % k]
        val_folds[f].append(m)
        sizes[f] += 1


def make_stratified_folds(ids, labels, k: int, seed: int) -> FoldPlan:
    """Seeded shuffle within each class, then a balanced round-robin deal.

    Per-fold class counts stay within one member of n_class/k and total val
    sizes within one of n/k.
    """
    ids = list(ids)
    labels = list(labels)
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(seed)
    classes = sorted(set(labels), key=str)
    val_folds: list[list] = [[] for _ in range(k)]
    sizes = [0] * k
    for cls in classes:
        members = [i for i, y in zip(ids, labels) if y == cls]
        if len(members) < k:
            raise TooFewPerClass(f"class {cls!r} has {len(members)} < k={k} members")
        members = [members[j] for j in rng.permutation(len(members))]
        _deal_balanced(val_folds, members, sizes)
    folds = []
    for f in range(k):
        val = sorted(val_folds[f], key=str)
        train = sorted((i for i in ids if i not in set(val)), key=str)
        folds.append((train, val))
    return FoldPlan(folds=folds, k=k, seed=seed)


def make_loso_folds(ids) -> FoldPlan:
    """One validation fold per subject."""
    ids = list(ids)
    if len(ids) < 2:
        raise TooFewSubjects("leave-one-subject-out needs at least 2 subjects")
    folds = [([j for j in ids if j != i], [i]) for i in ids]
    return FoldPlan(folds=folds, k=len(ids))


def make_grouped_folds(ids, group_ids, labels, k: int, seed: int) -> FoldPlan:
    """Stratified k-fold at group level; a group never straddles train/val."""
    ids = list(ids)
    group_ids = list(group_ids)
    labels = list(labels)
    groups = {}
    for i, g, y in zip(ids, group_ids, labels):
        groups.setdefault(g, {"ids": [], "label": y})["ids"].append(i)
    if len(groups) < k:
        raise TooFewGroups(f"{len(groups)} groups < k={k}")
    rng = np.random.default_rng(seed)
    classes = sorted({v["label"] for v in groups.values()}, key=str)
    val_groups: list[list] = [[] for _ in range(k)]
    sizes = [0] * k
    for cls in classes:
        members = sorted(g for g, v in groups.items() if v["label"] == cls)
        members = [members[j] for j in rng.permutation(len(members))]
        _deal_balanced(val_groups, members, sizes)
    folds = []
    for f in range(k):
        val_set = set(val_groups[f])
        val = sorted((i for i, g in zip(ids, group_ids) if g in val_set), key=str)
        train = sorted((i for i, g in zip(ids, group_ids) if g not in val_set), key=str)
        folds.append((train, val))
    return FoldPlan(folds=folds, k=k, seed=seed, grouped=True)


def classification_metrics(cm: ConfusionMatrix) -> ClassificationMetrics:
    """Accuracy/precision/recall/F1 with AD positive; zero denominators give
    0 with the corresponding defined-flag cleared."""
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix is empty")
    accuracy = (cm.tp + cm.tn) / cm.total
    p_den = cm.tp + cm.fp
    r_den = cm.tp + cm.fn
    precision = cm.tp / p_den if p_den else 0.0
    recall = cm.tp / r_den if r_den else 0.0
    f1 = (2 * precision * recall / (precision + recall)) if (precision + recall) else 0.0
    return ClassificationMetrics(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        precision_defined=bool(p_den),
        recall_defined=bool(r_den),
    )


def regression_metrics(preds, targets) -> tuple[float, float]:
    """(rmse, mae)."""
    preds = np.asarray(preds, dtype=np.float64).ravel()
    targets = np.asarray(targets, dtype=np.float64).ravel()
    if preds.size == 0 or preds.shape != targets.shape:
        raise LengthMismatch("predictions and targets must have equal non-zero length")
    diff = preds - targets
    return float(np.sqrt(np.mean(diff * diff))), float(np.mean(np.abs(diff)))


def roc_curve(scores, labels) -> tuple[list, float]:
    """Threshold sweep over unique AD-probability scores.

    Returns (points, auc) where points are (fpr, tpr, threshold) sorted by
    fpr and auc is the trapezoid-rule area (equal to pairwise concordance
    with ties counted one half).
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC needs both classes present")

    order = np.argsort(-scores, kind="stable")
    scores_sorted = scores[order]
    labels_sorted = labels[order]

    points = [(0.0, 0.0, float("inf"))]
    tp = fp = 0
    i = 0
    n = scores.size
    while i < n:
        thr = scores_sorted[i]
        while i < n and scores_sorted[i] == thr:
            if labels_sorted[i] == 1:
                tp += 1
            else:
                fp += 1
            i += 1
        points.append((fp / n_neg, tp / n_pos, float(thr)))

    auc = 0.0
    for (x0, y0, _), (x1, y1, _) in zip(points, points[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2.0
    return points, float(auc)


def aggregate_report(per_fold_metrics: list[dict]) -> MetricsReport:
    """Mean and population std per metric across folds; keeps the rows."""
    if not per_fold_metrics:
        return MetricsReport()
    keys = [k for k in per_fold_metrics[0] if isinstance(per_fold_metrics[0][k], (int, float))]
    mean = {}
    std = {}
    for key in keys:
        vals = np.array([row[key] for row in per_fold_metrics], dtype=np.float64)
        mean[key] = float(vals.mean())
        std[key] = float(vals.std())  # population convention
    return MetricsReport(per_fold=list(per_fold_metrics), mean=mean, std=std)
