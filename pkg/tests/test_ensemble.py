import itertools

import numpy as np
import pytest

from adscreen.ensemble import average_regression, hard_vote, learnt_vote, soft_vote
from adscreen.errors import DegenerateLabels, UntrainedVoter, WrongArity
from adscreen.models import LrVoter, train_lr_voter


def as_probs(label: int, confidence: float = 0.8):
    return np.array([1 - confidence, confidence]) if label else np.array(
        [confidence, 1 - confidence]
    )


class TestHardVote:
    def test_majority(self):
        assert hard_vote([as_probs(1), as_probs(1), as_probs(0)]) == 1

    def test_unanimity(self):
        assert hard_vote([as_probs(0)] * 3) == 0

    def test_exhaustive_matches_mode(self):
        for triple in itertools.product([0, 1], repeat=3):
            # brute-force mode over two labels
            mode = max([0, 1], key=lambda v: sum(1 for t in triple if t == v))
            assert hard_vote([as_probs(t) for t in triple]) == mode

    def test_wrong_arity(self):
        with pytest.raises(WrongArity):
            hard_vote([as_probs(1), as_probs(0)])


class TestSoftVote:
    def test_tie_resolves_to_non_ad(self):
        combined, label = soft_vote(
            [np.array([0.9, 0.1]), np.array([0.2, 0.8]), np.array([0.4, 0.6])]
        )
        np.testing.assert_allclose(combined, [0.5, 0.5])
        assert label == 0

    def test_idempotent_on_identical_members(self):
        combined, label = soft_vote([np.array([0.7, 0.3])] * 3)
        np.testing.assert_allclose(combined, [0.7, 0.3])
        assert label == 0

    def test_random_triples_match_recomputed_mean(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            members = []
            for _ in range(3):
                p = rng.uniform()
                members.append(np.array([p, 1 - p]))
            combined, label = soft_vote(members)
            assert combined.sum() == pytest.approx(1.0)
            recomputed = sum(members) / 3.0
            np.testing.assert_allclose(combined, recomputed)
            if recomputed[1] != recomputed[0]:
                assert label == int(np.argmax(recomputed))
            else:
                assert label == 0

    def test_permutation_invariance(self):
        rng = np.random.default_rng(1)
        members = [np.array([p, 1 - p]) for p in rng.uniform(size=3)]
        base, _ = soft_vote(members)
        for perm in itertools.permutations(members):
            combined, _ = soft_vote(list(perm))
            np.testing.assert_allclose(combined, base)


class TestLearntVote:
    def test_zero_voter_tie_is_non_ad(self):
        voter = LrVoter(w=np.zeros(6), b=0.0, trained=True)
        assert learnt_vote(voter, [as_probs(1)] * 3) == 0

    def test_untrained_guard(self):
        with pytest.raises(UntrainedVoter):
            learnt_vote(LrVoter(), [as_probs(1)] * 3)

    def test_agrees_with_reliable_model(self):
        rng = np.random.default_rng(2)
        n = 300
        labels = rng.integers(0, 2, size=n)
        rows = np.zeros((n, 6))
        for i, y in enumerate(labels):
            rows[i, 0:2] = as_probs(y, 0.9)
            rows[i, 2:4] = as_probs(int(rng.integers(0, 2)), 0.7)
            rows[i, 4:6] = as_probs(int(rng.integers(0, 2)), 0.7)
        voter = train_lr_voter(rows[:200], labels[:200])
        agree = 0
        for i in range(200, n):
            members = [rows[i, 0:2], rows[i, 2:4], rows[i, 4:6]]
            model1_label = int(np.argmax(members[0]))
            agree += learnt_vote(voter, members) == model1_label
        assert agree / 100 >= 0.95

    def test_equal_ad_weights_match_soft_vote(self):
        # weight only the AD-probability coordinates, equally, zero bias:
        # sign(score) then equals sign(mean AD prob - 0.5)
        voter = LrVoter(w=np.array([0.0, 1.0, 0.0, 1.0, 0.0, 1.0]), b=-1.5, trained=True)
        rng = np.random.default_rng(3)
        for _ in range(500):
            members = [np.array([1 - p, p]) for p in rng.uniform(size=3)]
            mean_ad = float(np.mean([m[1] for m in members]))
            if mean_ad == 0.5:
                continue
            _, soft_label = soft_vote(members)
            assert learnt_vote(voter, members) == soft_label


class TestAverageRegression:
    def test_mean(self):
        assert average_regression([20.0, 25.0, 27.0]) == 24.0

    def test_idempotent(self):
        assert average_regression([15.0, 15.0, 15.0]) == 15.0

    def test_bounded_by_members(self):
        rng = np.random.default_rng(4)
        for _ in range(1000):
            members = list(rng.uniform(0, 30, size=3))
            avg = average_regression(members)
            assert min(members) <= avg <= max(members)

    def test_permutation_invariance(self):
        members = [3.0, 18.5, 27.25]
        base = average_regression(members)
        for perm in itertools.permutations(members):
            assert average_regression(list(perm)) == base

    def test_wrong_arity(self):
        with pytest.raises(WrongArity):
            average_regression([20.0, 25.0])


def test_degenerate_voter_labels():
    with pytest.raises(DegenerateLabels):
        train_lr_voter(np.zeros((5, 6)), np.zeros(5))
