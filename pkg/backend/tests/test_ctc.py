"""Unit tests for CTC: forward recursion, oracle, loss and decoding."""

import itertools

import numpy as np
import pytest

from app.ctc import (
    PosteriorMatrix,
    collapse,
    ctc_brute_force,
    ctc_brute_force_all,
    ctc_greedy_decode,
    ctc_log_prob,
    ctc_loss,
    ctc_loss_batch,
    required_steps,
)
from app.exceptions import (
    ContractError,
    InfeasibleAlignmentError,
    InstanceTooLargeError,
    LabelIndexError,
)
from app.numkit import Tape, Tensor, backward, max_relative_error


def random_posteriors(seed, timesteps, classes):
    rng = np.random.default_rng(seed)
    return PosteriorMatrix.from_logits(rng.normal(size=(timesteps, classes)))


class TestCollapse:
    def test_merges_repeats_then_drops_blanks(self):
        assert collapse([1, 1, 0, 1, 2, 2, 0]) == (1, 1, 2)
        assert collapse([0, 0, 0]) == ()

    def test_required_steps_counts_repeats(self):
        assert required_steps([1, 2, 3]) == 3
        assert required_steps([1, 1]) == 3
        assert required_steps([2, 2, 2]) == 5


class TestForward:
    @pytest.mark.parametrize(
        "labels",
        [(1,), (2, 1), (1, 1), (1, 2, 1), (2, 2, 1)],
    )
    def test_matches_brute_force(self, labels):
        q = random_posteriors(len(labels), timesteps=5, classes=3)
        expected = ctc_brute_force(q, labels)
        assert np.exp(ctc_log_prob(q, labels)) == pytest.approx(expected, rel=1e-10)

    def test_brute_force_distribution_is_complete(self):
        q = random_posteriors(11, timesteps=4, classes=4)
        totals = ctc_brute_force_all(q)
        assert sum(totals.values()) == pytest.approx(1.0, abs=1e-12)
        for labels in [(1, 3), (2,), (3, 3)]:
            assert totals[labels] == pytest.approx(np.exp(ctc_log_prob(q, labels)), rel=1e-10)

    def test_probabilities_of_all_emittable_sequences_sum_to_one(self):
        q = random_posteriors(5, timesteps=3, classes=3)
        total = ctc_brute_force(q, ())
        for length in (1, 2, 3):
            for labels in itertools.product((1, 2), repeat=length):
                if required_steps(labels) <= 3:
                    total += np.exp(ctc_log_prob(q, labels))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_single_step_single_label(self):
        q = np.array([[0.25, 0.75]])
        assert ctc_log_prob(q, (1,)) == pytest.approx(np.log(0.75))

    def test_infeasible_alignment(self):
        q = random_posteriors(0, timesteps=2, classes=3)
        with pytest.raises(InfeasibleAlignmentError) as exc:
            ctc_log_prob(q, (1, 1))
        assert exc.value.details["required"] == 3
        assert exc.value.details["timesteps"] == 2

    def test_label_out_of_range(self):
        q = random_posteriors(0, timesteps=4, classes=3)
        with pytest.raises(LabelIndexError):
            ctc_log_prob(q, (3,))

    def test_rows_must_be_distributions(self):
        with pytest.raises(ContractError):
            PosteriorMatrix(np.array([[0.5, 0.6]]))

    def test_brute_force_guard(self):
        q = random_posteriors(0, timesteps=8, classes=10)
        with pytest.raises(InstanceTooLargeError):
            ctc_brute_force(q, (1,))

    def test_random_instances_match_brute_force(self):
        rng = np.random.default_rng(2024)
        exact, recursed = [], []
        for _ in range(1000):
            timesteps = int(rng.integers(1, 5))
            classes = int(rng.integers(2, 5))
            labels = (1,) * (timesteps + 1)
            while required_steps(labels) > timesteps:
                labels = tuple(int(k) for k in rng.integers(1, classes, size=int(rng.integers(0, timesteps + 1))))
            q = PosteriorMatrix.from_logits(rng.normal(scale=2.0, size=(timesteps, classes)))
            exact.append(ctc_brute_force(q, labels))
            recursed.append(np.exp(ctc_log_prob(q, labels)))
        np.testing.assert_allclose(recursed, exact, rtol=1e-10, atol=0.0)

    def test_tiny_posteriors_stay_finite(self):
        q = np.array([[1e-300, 1.0, 1e-300]] * 3)
        assert ctc_log_prob(q, (1, 1)) == pytest.approx(np.log(1e-300), rel=1e-12)
        # seven {blank, 2} paths survive, each a product of three tiny entries
        assert ctc_log_prob(q, (2,)) == pytest.approx(np.log(7.0) + 3 * np.log(1e-300), rel=1e-12)

        logits = Tensor(np.log(q), requires_grad=True)
        with Tape() as tape:
            loss = ctc_loss(logits, (2,))
        backward(loss, tape)
        assert np.isfinite(loss.item())
        assert np.all(np.isfinite(logits.grad))

    @pytest.mark.parametrize("seed", range(5))
    def test_relabeling_classes_keeps_probability(self, seed):
        rng = np.random.default_rng(seed)
        q = random_posteriors(seed, timesteps=6, classes=5).q
        labels = (1, 3, 3, 4)
        # new column of each old class; the blank stays at 0
        mapping = np.concatenate(([0], rng.permutation(4) + 1))
        relabeled = np.empty_like(q)
        relabeled[:, mapping] = q
        moved = tuple(int(mapping[label]) for label in labels)
        assert ctc_log_prob(relabeled, moved) == pytest.approx(ctc_log_prob(q, labels), rel=1e-12)


class TestLoss:
    def test_loss_is_negative_log_prob(self):
        rng = np.random.default_rng(3)
        logits = rng.normal(size=(6, 4))
        loss = ctc_loss(logits, (1, 3, 3))
        expected = -ctc_log_prob(PosteriorMatrix.from_logits(logits), (1, 3, 3))
        assert loss.item() == pytest.approx(expected, rel=1e-10)

    def test_gradient(self):
        rng = np.random.default_rng(4)
        logits = Tensor(rng.normal(size=(5, 4)), requires_grad=True)
        assert max_relative_error(lambda: ctc_loss(logits, (2, 1, 2)), [logits]) < 1e-6

    def test_batch_mean_with_ragged_targets(self):
        rng = np.random.default_rng(5)
        logits = rng.normal(size=(2, 6, 5))
        targets = [(1, 2, 3), (4,)]
        batch = ctc_loss_batch(Tensor(logits), targets).item()
        single = [ctc_loss(logits[i], y).item() for i, y in enumerate(targets)]
        assert batch == pytest.approx(np.mean(single), rel=1e-10)

    def test_batch_gradient(self):
        rng = np.random.default_rng(6)
        logits = Tensor(rng.normal(size=(2, 4, 3)), requires_grad=True)
        fn = lambda: ctc_loss_batch(logits, [(1, 1), (2,)])
        assert max_relative_error(fn, [logits]) < 1e-6

    def test_batch_needs_one_target_per_item(self):
        with pytest.raises(ContractError):
            ctc_loss_batch(Tensor(np.zeros((2, 4, 3))), [(1,)])

    def test_empty_target_beside_longer_ones(self):
        logits = np.random.default_rng(7).normal(size=(2, 4, 3))
        batch = ctc_loss_batch(Tensor(logits), [(1, 2), ()]).item()
        expected = [-ctc_log_prob(PosteriorMatrix.from_logits(logits[0]), (1, 2)),
                    -ctc_log_prob(PosteriorMatrix.from_logits(logits[1]), ())]
        assert batch == pytest.approx(np.mean(expected), rel=1e-10)

    def test_gradient_descent_lowers_loss_every_step(self):
        logits = Tensor(np.random.default_rng(8).normal(size=(5, 4)), requires_grad=True)
        losses = []
        for _ in range(50):
            with Tape() as tape:
                loss = ctc_loss(logits, (1, 3, 3))
            backward(loss, tape)
            losses.append(loss.item())
            logits.values -= 1.0 * logits.grad
            logits.zero_grad()
        assert np.all(np.diff(losses) < 0.0)
        assert losses[-1] < 0.5 * losses[0]


class TestGreedy:
    def test_best_path(self):
        q = np.array(
            [[0.1, 0.8, 0.1], [0.1, 0.8, 0.1], [0.8, 0.1, 0.1], [0.1, 0.1, 0.8]]
        )
        assert ctc_greedy_decode(q) == (1, 2)

    def test_ties_take_lowest_index(self):
        q = np.array([[0.5, 0.5, 0.0]])
        assert ctc_greedy_decode(q) == ()
