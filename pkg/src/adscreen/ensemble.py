"""Combining the three per-subject model outputs.

Classification: hard majority vote, uniform-weight soft vote, and a learnt
logistic-regression vote. Regression: plain averaging. An exact 0.5/0.5 tie
never diagnoses AD (class index 0, non-AD, wins).
"""

from __future__ import annotations

import numpy as np

from .errors import UntrainedVoter, WrongArity
from .models import LrVoter, lr_voter_predict

N_MODELS = 3
NON_AD, AD = 0, 1


def _check_arity(inputs, expected: int = N_MODELS):
    if len(inputs) != expected:
        raise WrongArity(f"expected {expected} members, got {len(inputs)}")


def hard_vote(inputs) -> int:
    """Majority label over each member's argmax; three voters over two
    classes cannot tie."""
    _check_arity(inputs)
    labels = [int(np.argmax(p)) for p in inputs]
    return AD if sum(labels) >= 2 else NON_AD


def soft_vote(inputs) -> tuple[np.ndarray, int]:
    """Uniform 1/N weighted probability sum; returns (combined, label)."""
    _check_arity(inputs)
    combined = np.mean([np.asarray(p, dtype=np.float64) for p in inputs], axis=0)
    label = AD if combined[AD] > combined[NON_AD] else NON_AD
    return combined, label


def learnt_vote(voter: LrVoter, inputs) -> int:
    """Label from the trained logistic voter on concatenated probabilities."""
    _check_arity(inputs)
    if not voter.trained:
        raise UntrainedVoter("voter has not been trained")
    row = np.concatenate([np.asarray(p, dtype=np.float64) for p in inputs])
    probs = lr_voter_predict(voter, row)
    return AD if probs[AD] > probs[NON_AD] else NON_AD


def average_regression(inputs) -> float:
    """Arithmetic mean of the member scores, clamped to the valid range."""
    _check_arity(inputs)
    return float(np.clip(np.mean([float(v) for v in inputs]), 0.0, 30.0))
