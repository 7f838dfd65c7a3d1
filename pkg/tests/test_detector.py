"""Tests for thresholding, voting, metrics, and the training pipeline."""

import dataclasses

import numpy as np
import pytest

from shmnovelty import detector
from shmnovelty.detector import (
    Metrics,
    SimulationVerdict,
    block_minima_threshold,
    build_report,
    classify_segment,
    compute_metrics,
    detect_simulation,
    joint_densities,
    joint_density,
    train,
    vote_simulation,
)
from shmnovelty.errors import InvalidInputError

from conftest import FAST_TRAIN, noise_segments as _noise_segments


class TestBlockMinimaThreshold:
    def test_matches_explicit_loop_oracle(self):
        rng = np.random.default_rng(0)
        for window in (1, 3, 7, 30):
            d = rng.exponential(size=211)
            minima = []
            for start in range(0, d.size - window + 1, window):
                minima.append(d[start : start + window].min())
            expected = float(np.median(minima))
            assert block_minima_threshold(d, window) == expected

    def test_trailing_partial_block_is_dropped(self):
        d = np.array([5.0, 6.0, 4.0, 7.0, 0.001])
        # Blocks of 2: minima (5, 4); the trailing 0.001 never participates.
        assert block_minima_threshold(d, 2) == 4.5

    def test_even_block_count_takes_central_mean(self):
        d = np.array([1.0, 9, 2, 9, 3, 9, 4, 9])
        assert block_minima_threshold(d, 2) == 2.5

    def test_window_one_reduces_to_median(self):
        d = np.array([3.0, 1.0, 2.0])
        assert block_minima_threshold(d, 1) == 2.0

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            block_minima_threshold([1.0, 2.0], 0)
        with pytest.raises(InvalidInputError):
            block_minima_threshold([1.0, 2.0], 3)


class TestVote:
    def test_majority_and_tie_boundaries(self):
        # Ten segments: five flags reach the ceil(10/2) = 5 quorum.
        assert vote_simulation([True] * 5 + [False] * 5, np.ones(10))[0]
        assert not vote_simulation([True] * 4 + [False] * 6, np.ones(10))[0]
        # Seven segments: quorum is ceil(7/2) = 4.
        assert vote_simulation([True] * 4 + [False] * 3, np.ones(7))[0]
        assert not vote_simulation([True] * 3 + [False] * 4, np.ones(7))[0]
        assert vote_simulation([True], [0.5])[0]
        assert not vote_simulation([False], [0.5])[0]

    def test_median_density_returned(self):
        damaged, median = vote_simulation([False, True, False], [3.0, 1.0, 2.0])
        assert median == 2.0

    def test_empty_vote_rejected(self):
        with pytest.raises(InvalidInputError):
            vote_simulation([], [])


class TestMetrics:
    def test_perfect_classifier(self):
        m = compute_metrics(TN=22, TP=78, FN=0, FP=0)
        assert m == Metrics(accuracy=1.0, recall=1.0, precision=1.0, f1=1.0)

    def test_all_negative_predictions_leave_precision_undefined(self):
        m = compute_metrics(TN=22, TP=0, FN=78, FP=0)
        assert m.accuracy == pytest.approx(0.22)
        assert m.recall == 0.0
        assert m.precision is None
        assert m.f1 is None

    def test_known_confusion_arithmetic(self):
        m = compute_metrics(TN=22, TP=54, FN=24, FP=0)
        assert m.accuracy == pytest.approx(0.760, abs=5e-4)
        assert m.recall == pytest.approx(0.692, abs=5e-4)
        assert m.precision == pytest.approx(1.000, abs=5e-4)
        assert m.f1 == pytest.approx(0.818, abs=5e-4)

    def test_no_damaged_labels_leave_recall_undefined(self):
        m = compute_metrics(TN=30, TP=0, FN=0, FP=0)
        assert m.accuracy == 1.0
        assert m.recall is None
        assert m.precision is None
        assert m.f1 is None

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            compute_metrics(TN=-1, TP=0, FN=0, FP=0)
        with pytest.raises(InvalidInputError):
            compute_metrics(TN=0, TP=0, FN=0, FP=0)


class TestBuildReport:
    def _verdict(self, cid, damaged, label):
        return SimulationVerdict(
            case_id=cid,
            median_density=1.0,
            damaged=damaged,
            segment_densities=np.ones(3),
            segment_novel=np.zeros(3, dtype=bool),
            label=label,
        )

    def test_confusion_counts(self):
        verdicts = [
            self._verdict("a", True, True),  # TP
            self._verdict("b", True, False),  # FP
            self._verdict("c", False, True),  # FN
            self._verdict("d", False, False),  # TN
            self._verdict("e", True, True),  # TP
        ]
        report = build_report(verdicts)
        assert (report.tn, report.tp, report.fn, report.fp) == (1, 2, 1, 1)
        assert report.metrics.accuracy == pytest.approx(0.6)

    def test_unlabeled_verdicts_skip_metrics(self):
        verdicts = [self._verdict("a", True, True), self._verdict("b", False, None)]
        report = build_report(verdicts)
        assert report.metrics is None
        assert report.tn is None


class TestTrain:
    def test_metadata_and_shapes(self, trained):
        segments, model = trained
        md = model.metadata
        assert md.q == 4
        assert md.training_segments == 36
        assert md.sample_rate == 50.0
        assert md.segment_seconds == 10.0
        assert md.eta_values.shape == (100,)
        assert model.pca.loadings.shape == (400, 4)
        assert model.ica.W.shape == (4, 4)
        assert len(model.marginals) == 4
        assert model.threshold > 0

    def test_threshold_is_block_minima_of_training_densities(self, trained):
        segments, model = trained
        densities = joint_densities(model, segments)
        expected = block_minima_threshold(densities, FAST_TRAIN.block_window)
        assert model.threshold == pytest.approx(expected, rel=1e-12)

    def test_deterministic_given_seed(self, trained):
        segments, model = trained
        again = train(segments, FAST_TRAIN)
        assert again.threshold == model.threshold
        np.testing.assert_array_equal(again.ica.W, model.ica.W)

    def test_too_few_segments_rejected(self):
        rng = np.random.default_rng(1)
        segments = _noise_segments(rng, 5)
        with pytest.raises(InvalidInputError):
            train(segments, FAST_TRAIN)


class TestDetection:
    def test_classify_consistent_with_joint_density(self, trained):
        segments, model = trained
        density, novel = classify_segment(model, segments[0])
        assert density == pytest.approx(joint_density(model, segments[0]), rel=1e-12)
        assert novel == (density < model.threshold)

    def test_training_population_votes_intact(self, trained):
        segments, model = trained
        verdict = detect_simulation(model, segments, case_id="train", label=False)
        assert not verdict.damaged
        assert verdict.case_id == "train"
        assert verdict.label is False
        assert verdict.segment_densities.shape == (36,)
        # The threshold sits low in the training density distribution.
        assert verdict.segment_novel.mean() < 0.5

    def test_gross_outliers_vote_damaged(self, trained):
        _, model = trained
        rng = np.random.default_rng(7)
        outliers = _noise_segments(rng, 8, scale=25.0, record_id="hot")
        verdict = detect_simulation(model, outliers, case_id="hot", label=True)
        assert verdict.damaged
        assert verdict.segment_novel.all()

    def test_verdict_median_matches_densities(self, trained):
        segments, model = trained
        verdict = detect_simulation(model, segments[:9])
        assert verdict.median_density == pytest.approx(
            float(np.median(verdict.segment_densities))
        )
        assert verdict.label is None


class TestModelValidation:
    def test_threshold_must_be_positive(self, trained):
        _, model = trained
        with pytest.raises(InvalidInputError):
            dataclasses.replace(model, threshold=0.0)

    def test_q_consistency_enforced(self, trained):
        _, model = trained
        bad_md = dataclasses.replace(model.metadata, q=3)
        with pytest.raises(InvalidInputError):
            dataclasses.replace(model, metadata=bad_md)

    def test_marginal_count_must_match_q(self, trained):
        _, model = trained
        with pytest.raises(InvalidInputError):
            dataclasses.replace(model, marginals=model.marginals[:3])
