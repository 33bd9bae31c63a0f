"""Unit tests for attribute accuracy and ranking metrics."""

from unittest.mock import patch

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from app.codec import AttributeRecord
from app.exceptions import ContractError, DimensionError
from app.metrics import (
    RetrievalProtocol,
    attribute_accuracy,
    average_precision,
    chance_level,
    cmc_map,
    pairwise_distance,
)


def record(**values):
    return AttributeRecord(values)


class TestAttributeAccuracy:
    def test_per_group_and_mean(self, small_table):
        truths = [record(gender="male", hat="no"), record(gender="female", hat="yes")]
        preds = [record(gender="male", hat="yes"), record(gender="female", hat="yes")]
        report = attribute_accuracy(preds, truths, small_table)
        assert report.accuracies == {"gender": 1.0, "hat": 0.5}
        assert report.mean_accuracy == pytest.approx(0.75)
        assert report.samples == 2

    def test_missing_group_counts_as_wrong(self, small_table):
        truths = [record(gender="male", hat="no")]
        preds = [record(gender="male")]
        report = attribute_accuracy(preds, truths, small_table)
        assert report.accuracies["hat"] == 0.0
        assert report.missing == {"gender": 0, "hat": 1}

    def test_groups_absent_from_truth_are_not_scored(self, small_table):
        report = attribute_accuracy([record(gender="male")], [record(gender="male")], small_table)
        assert report.accuracies == {"gender": 1.0}
        assert report.mean_accuracy == 1.0

    def test_sample_order_does_not_matter(self, small_table):
        rng = np.random.default_rng(13)

        def draw(n):
            return [
                record(gender=str(rng.choice(["male", "female"])), hat=str(rng.choice(["yes", "no"])))
                for _ in range(n)
            ]

        truths, preds = draw(30), draw(30)
        report = attribute_accuracy(preds, truths, small_table)
        order = rng.permutation(30)
        shuffled = attribute_accuracy([preds[i] for i in order], [truths[i] for i in order], small_table)
        assert shuffled.accuracies == pytest.approx(report.accuracies)
        assert shuffled.mean_accuracy == pytest.approx(report.mean_accuracy)
        assert shuffled.missing == report.missing

    def test_lists_must_align(self, small_table):
        with pytest.raises(ContractError):
            attribute_accuracy([record(gender="male")], [], small_table)
        with pytest.raises(ContractError):
            attribute_accuracy([], [], small_table)

    def test_chance_level(self, table):
        # four binary groups and two four-way colour groups
        assert chance_level(table) == pytest.approx(2.5 / 6)


def staircase_reference(matches):
    relevant, total = 0, 0.0
    for position, hit in enumerate(matches, start=1):
        if hit:
            relevant += 1
            total += relevant / position
    return total / relevant if relevant else 0.0


class TestAveragePrecision:
    def test_known_values(self):
        assert average_precision(np.array([0, 1, 0, 1], dtype=bool)) == pytest.approx(0.5)
        assert average_precision(np.array([1, 0, 1], dtype=bool)) == pytest.approx(5 / 6)
        assert average_precision(np.zeros(3, dtype=bool)) == 0.0

    def test_matches_reference_on_random_lists(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            matches = rng.random(12) < 0.3
            assert average_precision(matches) == pytest.approx(staircase_reference(matches))

    def test_pairwise_distance(self):
        assert pairwise_distance([1.0, 0.0], [0.0, 1.0]) == pytest.approx(2.0)
        with pytest.raises(DimensionError):
            pairwise_distance([1.0], [1.0, 2.0])


class TestRanking:
    def test_single_query(self):
        result = cmc_map(
            np.array([[0.0]]),
            np.array([[1.0], [2.0], [3.0]]),
            query_pids=[5],
            gallery_pids=[9, 5, 5],
        )
        np.testing.assert_array_equal(result.orders[0], [0, 1, 2])
        assert result.rank1 == 0.0
        assert result.cmc[5] == 1.0
        assert result.mean_ap == pytest.approx((1 / 2 + 2 / 3) / 2)

    def test_monotone_distance_transform_keeps_scores(self):
        rng = np.random.default_rng(12)
        queries, gallery = rng.normal(size=(6, 4)), rng.normal(size=(20, 4))
        query_pids, gallery_pids = rng.integers(0, 4, size=6), rng.integers(0, 4, size=20)
        plain = cmc_map(queries, gallery, query_pids, gallery_pids)
        with patch(
            "app.metrics.reid.distance_matrix", side_effect=lambda q, g: np.exp(3 * cdist(q, g, "sqeuclidean")) + 1
        ):
            warped = cmc_map(queries, gallery, query_pids, gallery_pids)
        for a, b in zip(plain.orders, warped.orders):
            np.testing.assert_array_equal(a, b)
        assert warped.mean_ap == pytest.approx(plain.mean_ap, abs=1e-12)
        assert warped.rank1 == plain.rank1
        assert warped.cmc == plain.cmc

    def test_ties_break_by_gallery_index(self):
        result = cmc_map(np.array([[0.0]]), np.array([[1.0], [-1.0]]), [1], [2, 1])
        np.testing.assert_array_equal(result.orders[0], [0, 1])
        assert result.rank1 == 0.0

    def test_same_camera_matches_are_dropped(self):
        gallery = np.array([[0.1], [0.5], [0.9]])
        kwargs = dict(query_pids=[1], gallery_pids=[1, 2, 1], query_cameras=[0], gallery_cameras=[0, 1, 1])
        strict = cmc_map(np.array([[0.0]]), gallery, **kwargs)
        loose = cmc_map(
            np.array([[0.0]]), gallery, protocol=RetrievalProtocol(exclude_same_camera=False), **kwargs
        )
        # strict ranking is [2, 1]: the closest image shares the query's camera
        assert strict.rank1 == 0.0
        assert strict.mean_ap == pytest.approx(0.5)
        assert loose.rank1 == 1.0

    def test_queries_without_valid_match_are_excluded(self):
        result = cmc_map(
            np.array([[0.0], [1.0]]),
            np.array([[0.0], [1.0]]),
            query_pids=[1, 3],
            gallery_pids=[1, 2],
        )
        assert result.excluded_queries == 1
        assert result.rank1_hits.size == 1
        summary = result.summary()
        assert summary["rank1"] == 1.0
        assert summary["excluded_queries"] == 1.0
        assert summary["evaluated_queries"] == 1.0

    def test_shared_split_removes_own_entry(self):
        features = np.array([[0.0], [0.1], [5.0]])
        pids = [1, 1, 2]
        result = cmc_map(
            features,
            features,
            pids,
            pids,
            protocol=RetrievalProtocol(exclude_same_camera=False, shared_split=True),
            self_indices=[0, 1, 2],
        )
        assert result.excluded_queries == 1
        assert result.rank1 == 1.0

    def test_shared_split_needs_positions(self):
        with pytest.raises(ContractError):
            cmc_map(
                np.zeros((1, 2)), np.zeros((1, 2)), [1], [1],
                protocol=RetrievalProtocol(shared_split=True),
            )

    def test_empty_gallery(self):
        with pytest.raises(ContractError):
            cmc_map(np.zeros((1, 2)), np.zeros((0, 2)), [1], [])
