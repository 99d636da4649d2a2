from fractions import Fraction

import numpy as np
import pytest

from rankcal.calibration import apply_map_many, calibrate, expand_pav, fit_isotonic, fit_pav
from rankcal.evaluation import (
    EvalOptions,
    TieMode,
    auc,
    evaluate,
    mse,
    mse_to_truth,
    profit,
    prop2_bound,
    worst_case_ranking,
)
from rankcal.learners import LinearModel, LossKind, TrainConfig, train
from rankcal.synthetic import CappedLinkConfig, generate

from conftest import make_dataset
from oracles import brute_force_auc


def post_pav_training_mse(scores, labels) -> float:
    m = fit_isotonic(scores, labels)
    fitted = apply_map_many(m, np.asarray(scores, dtype=float))
    return float(np.mean((np.asarray(labels, float) - fitted) ** 2))


class TestAuc:
    def test_four_point_example(self):
        scores = [0.1, 0.4, 0.35, 0.8]
        labels = [0, 0, 1, 1]
        assert auc(scores, labels) == 0.75
        assert auc(scores, labels) == brute_force_auc(scores, labels)

    def test_perfect_separation(self):
        assert auc([1.0, 2.0, 3.0, 4.0], [0, 0, 1, 1]) == 1.0

    def test_all_tied(self):
        assert auc([5.0] * 4, [0, 1, 0, 1], TieMode.HALF) == 0.5
        assert auc([5.0] * 4, [0, 1, 0, 1], TieMode.GEQ) == 1.0

    def test_matches_brute_force(self, rng):
        for _ in range(60):
            n = int(rng.integers(2, 50))
            labels = rng.integers(0, 2, n)
            if labels.sum() in (0, n):
                continue
            # coarse grid scores force plenty of exact ties
            scores = rng.integers(0, 6, n).astype(float).tolist()
            assert auc(scores, labels) == brute_force_auc(scores, labels)
            assert auc(scores, labels, TieMode.GEQ) == brute_force_auc(
                scores, labels, geq=True
            )

    def test_monotone_transform_invariance(self, rng):
        scores = rng.integers(-10, 10, 40).astype(float)
        labels = rng.integers(0, 2, 40)
        labels[0], labels[1] = 0, 1
        base = auc(scores.tolist(), labels)
        assert auc((3.0 * scores + 7.0).tolist(), labels) == base
        assert auc(np.tanh(scores / 20.0).tolist(), labels) == base

    def test_sign_reversal_complements(self, rng):
        scores = rng.normal(size=30)
        labels = rng.integers(0, 2, 30)
        labels[0], labels[1] = 0, 1
        a = auc(scores.tolist(), labels)
        b = auc((-scores).tolist(), labels)
        assert a + b == pytest.approx(1.0, abs=1e-12)

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="positive and"):
            auc([1.0, 2.0], [1, 1])

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="equal length"):
            auc([1.0], [1, 0])

    def test_tuple_scores(self):
        keys = [(0.2, 1.0), (0.2, 2.0), (0.8, 3.0)]
        assert auc(keys, [0, 1, 1]) == 1.0


class TestMse:
    def test_perfect(self):
        assert mse([1.0, 0.0], [1, 0]) == 0.0

    def test_constant_half(self):
        assert mse([0.5, 0.5, 0.5], [1, 0, 1]) == 0.25

    def test_two_elements(self):
        assert mse([0.5, 0.5], [1, 0]) == 0.25

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mse([0.5], [1, 0])


class TestMseToTruth:
    def test_exact_match(self):
        assert mse_to_truth([0.3, 0.7], [0.3, 0.7]) == 0.0

    def test_constant_offset(self):
        assert mse_to_truth([0.0, 0.0], [0.5, 0.5]) == 0.25

    def test_single_element(self):
        assert mse_to_truth([0.2], [0.7]) == pytest.approx(0.25)


class TestProfit:
    def test_contact_all(self):
        assert profit([True, True, True], [5.0, 0.0, 3.0], 0.68) == pytest.approx(5.96)

    def test_contact_nobody(self):
        assert profit([False, False], [5.0, 3.0], 0.68) == 0.0

    def test_contact_one(self):
        assert profit([True, False, False], [5.0, 0.0, 3.0], 0.68) == pytest.approx(4.32)

    def test_cost_must_be_positive(self):
        with pytest.raises(ValueError, match="positive"):
            profit([True], [1.0], 0.0)


class TestProp2Bound:
    def test_perfect_auc(self):
        assert prop2_bound(1.0, 10, 5) == 0.0

    def test_balanced_096(self):
        assert prop2_bound(0.96, 5, 5) == pytest.approx(0.05)

    def test_two_example_worst_case(self):
        assert prop2_bound(0.0, 1, 1) == 0.25

    def test_equivalent_count_form(self, rng):
        for _ in range(20):
            n_pos = int(rng.integers(1, 50))
            n_neg = int(rng.integers(1, 50))
            a = float(rng.random())
            lhs = prop2_bound(a, n_pos, n_neg)
            rhs = np.sqrt(n_pos * n_neg) / (2 * (n_pos + n_neg)) * np.sqrt(1 - a)
            assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_needs_both_classes(self):
        with pytest.raises(ValueError):
            prop2_bound(0.5, 0, 3)


class TestWorstCaseRanking:
    def test_two_example_case(self):
        scores, labels = worst_case_ranking(1, 1, 1, 1)
        assert labels.tolist() == [1, 0]
        assert auc(scores.tolist(), labels) == 0.0
        assert post_pav_training_mse(scores, labels) == 0.25
        assert prop2_bound(0.0, 1, 1) == 0.25  # bound met with equality

    def test_discordant_pair_count(self, rng):
        for _ in range(30):
            n_pos = int(rng.integers(1, 40))
            n_neg = int(rng.integers(1, 40))
            a = int(rng.integers(1, n_pos + 1))
            b = int(rng.integers(1, n_neg + 1))
            scores, labels = worst_case_ranking(n_pos, n_neg, a, b)
            assert auc(scores.tolist(), labels) == pytest.approx(
                1.0 - a * b / (n_pos * n_neg)
            )

    def test_exact_post_pav_mse(self, rng):
        # fitted block values are single exact divisions, so the rational
        # reconstruction via limit_denominator is exact for n <= ~1e7
        for _ in range(40):
            n_pos = int(rng.integers(1, 60))
            n_neg = int(rng.integers(1, 60))
            a = int(rng.integers(1, n_pos + 1))
            b = int(rng.integers(1, n_neg + 1))
            scores, labels = worst_case_ranking(n_pos, n_neg, a, b)
            n = n_pos + n_neg
            fitted = expand_pav(fit_pav(labels.astype(float), scores=scores))
            sse = Fraction(0)
            for y, v in zip(labels.tolist(), fitted.tolist()):
                frac = Fraction(v).limit_denominator(n)
                sse += (Fraction(y) - frac) ** 2
            assert sse / n == Fraction(a * b, (a + b) * n)

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            worst_case_ranking(2, 2, 3, 1)


class TestBoundOnConstructionFamily:
    def test_bound_holds_with_random_scores(self, rng):
        for _ in range(60):
            n_pos = int(rng.integers(1, 100))
            n_neg = int(rng.integers(1, 100))
            a = int(rng.integers(1, n_pos + 1))
            b = int(rng.integers(1, n_neg + 1))
            _, labels = worst_case_ranking(n_pos, n_neg, a, b)
            scores = np.sort(rng.normal(size=labels.shape[0]))
            assert np.unique(scores).shape[0] == scores.shape[0]
            m = post_pav_training_mse(scores, labels)
            bound = prop2_bound(
                auc(scores.tolist(), labels, TieMode.GEQ), n_pos, n_neg
            )
            assert m <= bound + 1e-9

    def test_interleaved_counterexample_exceeds_bound(self):
        # The worst-placement argument only covers contiguous blocks:
        # alternating labels beat the claimed bound, so arbitrary
        # configurations cannot satisfy it.
        scores = [1.0, 2.0, 3.0, 4.0]
        labels = [1, 0, 1, 0]
        m = post_pav_training_mse(scores, labels)
        bound = prop2_bound(auc(scores, labels, TieMode.GEQ), 2, 2)
        assert m == 0.25
        assert bound == pytest.approx(np.sqrt(3) / 8)
        assert m > bound + 1e-9


class TestEvaluate:
    def _calibrated(self, d, seed=0):
        ranker = train(
            d, LossKind.PAIRWISE_LOGISTIC,
            TrainConfig(l2=0.01, steps=400, eta0=0.5, seed=seed),
        )
        return calibrate(ranker, d)

    def test_truth_field_presence(self):
        d = generate(CappedLinkConfig(0.2, (1.0, 0.0), 80, seed=1))
        report = evaluate(self._calibrated(d), d)
        assert report.mse_to_truth is not None
        assert report.profit is None

    def test_no_truth_channel(self, rng):
        d = make_dataset(rng.normal(size=(50, 2)), rng.integers(0, 2, 50))
        report = evaluate(self._calibrated(d), d)
        assert report.mse_to_truth is None

    def test_profit_requires_cost(self, rng):
        d = make_dataset(rng.normal(size=(30, 2)), rng.integers(0, 2, 30))
        options = EvalOptions(donations=rng.uniform(0, 10, 30))
        with pytest.raises(ValueError, match="cost"):
            evaluate(self._calibrated(d), d, options)

    def test_profit_present_with_cost(self, rng):
        d = make_dataset(rng.normal(size=(30, 2)), rng.integers(0, 2, 30))
        options = EvalOptions(donations=rng.uniform(0, 10, 30), cost=0.68)
        report = evaluate(self._calibrated(d), d, options)
        assert report.profit is not None

    def test_bound_internally_consistent(self):
        d = generate(CappedLinkConfig(0.3, (1.0, 1.0), 90, seed=3))
        report = evaluate(self._calibrated(d), d)
        assert report.prop2_bound == prop2_bound(report.auc, report.n_pos, report.n_neg)
        assert report.base_rate == report.n_pos / (report.n_pos + report.n_neg)

    def test_probabilistic_linear_model(self):
        d = generate(CappedLinkConfig(0.2, (1.0, 0.0), 80, seed=5))
        m = train(d, LossKind.LOGISTIC, TrainConfig(l2=0.01, steps=400, seed=1))
        report = evaluate(m, d)
        assert 0.0 <= report.auc <= 1.0

    def test_uncalibrated_ranker_rejected(self):
        d = generate(CappedLinkConfig(0.2, (1.0, 0.0), 40, seed=6))
        m = LinearModel(np.array([1.0, 0.0]), 0.0, LossKind.PAIRWISE_LOGISTIC)
        with pytest.raises(ValueError, match="calibrate"):
            evaluate(m, d)

    def test_lexicographic_keys_used_for_auc(self, rng):
        # degenerate map (constant) still ranks by raw score through the keys
        d = generate(CappedLinkConfig(0.0, (1.0, 0.0), 60, seed=7))
        constant = make_dataset(
            rng.normal(size=(4, 2)), [1, 1, 1, 1]
        )  # calibration set with one class -> constant map
        ranker = LinearModel(np.array([1.0, 0.0]), 0.0, LossKind.PAIRWISE_LOGISTIC)
        cal = calibrate(ranker, constant)
        report = evaluate(cal, d)
        assert report.auc == 1.0
