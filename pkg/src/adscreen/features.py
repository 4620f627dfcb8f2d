"""Per-subject feature representations.

Three views of a subject: an 11-dimensional vector of per-second disfluency
rates, a PCA projection of the high-dimensional acoustic functionals, and a
fixed-length one-hot speaker-turn sequence. All fitting statistics come from
training rows only; fitted stats are immutable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chat import EVENT_KINDS, Speaker, TranscriptDocument
from .errors import InsufficientData, NonPositiveDuration, RankDeficient

DISFLUENCY_DIM = 11
ACOUSTIC_RAW_DIM = 6373
PCA_COMPONENTS = 21
SEQUENCE_LEN = 32

# Row order of the one-hot channels in the intervention encoding.
TURN_CHANNELS = ("PAR", "INV", "PAD")

DISFLUENCY_FEATURE_NAMES = (
    "word_rate",
    "intervention_rate",
    "short_pause_rate",
    "medium_pause_rate",
    "long_pause_rate",
    "timed_pause_rate",
    "filled_pause_rate",
    "repetition_rate",
    "retracing_rate",
    "trailing_off_rate",
    "unintelligible_rate",
)


@dataclass
class PreprocessStats:
    """Fitted preprocessing statistics; any part may be absent."""

    disfluency_min: np.ndarray | None = None
    disfluency_max: np.ndarray | None = None
    acoustic_mean: np.ndarray | None = None
    acoustic_std: np.ndarray | None = None
    pca_components: np.ndarray | None = None  # (k, d), rows orthonormal
    pca_explained_variance: np.ndarray | None = None


def extract_disfluency_raw(doc: TranscriptDocument, audio_duration: float) -> np.ndarray:
    """Raw per-second rates: subject word rate, interviewer-turn rate, and
    the subject's nine disfluency-event rates, in that order."""
    if audio_duration <= 0:
        raise NonPositiveDuration(f"audio_duration must be > 0, got {audio_duration}")
    par_words = 0
    intervention_count = 0
    event_totals = np.zeros(len(EVENT_KINDS))
    for u in doc.utterances:
        if u.speaker is Speaker.PAR:
            par_words += u.word_count
            for j, kind in enumerate(EVENT_KINDS):
                event_totals[j] += u.event_counts.get(kind, 0)
        else:
            intervention_count += 1
    raw = np.concatenate(([par_words, intervention_count], event_totals))
    return raw / audio_duration


def fit_minmax(train_rows: list) -> tuple[np.ndarray, np.ndarray]:
    rows = np.asarray(train_rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] < 2:
        raise InsufficientData("min-max scaling needs at least 2 training rows")
    return rows.min(axis=0), rows.max(axis=0)


def apply_minmax(x, stats: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    lo, hi = stats
    x = np.asarray(x, dtype=np.float64)
    span = hi - lo
    out = np.zeros_like(x)
    nz = span != 0
    out[..., nz] = (x[..., nz] - lo[nz]) / span[nz]
    return out


def fit_zscore(train_rows: list) -> tuple[np.ndarray, np.ndarray]:
    rows = np.asarray(train_rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] < 2:
        raise InsufficientData("z-score normalization needs at least 2 training rows")
    # population convention (divide by n)
    return rows.mean(axis=0), rows.std(axis=0)


def apply_zscore(x, stats: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    mean, std = stats
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    nz = std != 0
    out[..., nz] = (x[..., nz] - mean[nz]) / std[nz]
    return out


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Deterministic sign: each component's largest-|coordinate| is positive."""
    out = components.copy()
    for i in range(out.shape[0]):
        j = int(np.argmax(np.abs(out[i])))
        if out[i, j] < 0:
            out[i] = -out[i]
    return out


def fit_pca(train_rows: list, k: int) -> PreprocessStats:
    """Top-k principal directions of already-standardized training rows.

    Uses the d-by-d covariance eigendecomposition when rows outnumber
    dimensions, otherwise the n-by-n Gram route (the realistic regime for
    thousands of acoustic functionals and ~100 subjects).
    """
    rows = np.asarray(train_rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] < 2:
        raise InsufficientData("PCA needs at least 2 training rows")
    n, d = rows.shape
    centered = rows - rows.mean(axis=0)

    if n > d:
        cov = centered.T @ centered / (n - 1)
        evals, evecs = np.linalg.eigh(cov)
        order = np.argsort(evals)[::-1]
        evals = evals[order]
        evecs = evecs[:, order]
        components = evecs.T
    else:
        gram = centered @ centered.T / (n - 1)
        evals, evecs = np.linalg.eigh(gram)
        order = np.argsort(evals)[::-1]
        evals = evals[order]
        evecs = evecs[:, order]
        components = np.zeros((n, d))
        for i in range(n):
            if evals[i] > 0:
                v = centered.T @ evecs[:, i]
                norm = np.linalg.norm(v)
                if norm > 0:
                    components[i] = v / norm

    evals = np.clip(evals, 0.0, None)
    rank = int(np.sum(evals > max(evals.max(), 1e-300) * 1e-12))
    if k > rank:
        raise RankDeficient(f"requested {k} components but data rank is {rank}")

    return PreprocessStats(
        pca_components=_fix_signs(components[:k]),
        pca_explained_variance=evals[:k].copy(),
    )


def apply_pca(x, stats: PreprocessStats) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return stats.pca_components @ x


def encode_interventions(seq: list[Speaker], max_len: int = SEQUENCE_LEN) -> np.ndarray:
    """One-hot (max_len, 3) turn matrix over (PAR, INV, PAD); sequences
    longer than max_len keep their head, shorter ones get a PAD suffix."""
    out = np.zeros((max_len, 3))
    for t in range(max_len):
        if t < len(seq):
            out[t, 0 if seq[t] is Speaker.PAR else 1] = 1.0
        else:
            out[t, 2] = 1.0
    return out
