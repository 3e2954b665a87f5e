import numpy as np
import pytest

from oscarnom.errors import LengthMismatch, NoPositives, SingleClass
from oscarnom.metrics import (THRESHOLD_GRID, average_precision, f1_scores,
                              evaluate_scores, pr_curve_points,
                              roc_auc, roc_curve_points, tune_threshold)


def pairwise_auc_oracle(scores, labels):
    """Mann-Whitney by direct pair counting (wins + half ties)."""
    s = np.asarray(scores, dtype=float)
    l = np.asarray(labels)
    pos = s[l == 1]
    neg = s[l == 0]
    diff = np.subtract.outer(pos, neg)
    wins = (diff > 0).sum() + 0.5 * (diff == 0).sum()
    return wins / (pos.size * neg.size)


def cut_point_ap_oracle(scores, labels):
    """Exhaustive cut-point enumeration, recomputing tp/fp per cut."""
    s = np.asarray(scores, dtype=float)
    l = np.asarray(labels)
    n_pos = int((l == 1).sum())
    ap = 0.0
    prev_recall = 0.0
    for cut in sorted(set(s.tolist()), reverse=True):
        preds = s >= cut
        tp = int((preds & (l == 1)).sum())
        fp = int((preds & (l == 0)).sum())
        precision = tp / (tp + fp)
        recall = tp / n_pos
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


class TestRocAuc:
    def test_perfect_separation(self):
        assert roc_auc([0.9, 0.1], [1, 0]) == 1.0

    def test_full_tie_is_chance(self):
        assert roc_auc([0.5, 0.5], [1, 0]) == 0.5

    def test_two_pos_one_neg(self):
        assert roc_auc([0.8, 0.6, 0.4], [1, 0, 1]) == 0.5

    def test_single_class_rejected(self):
        with pytest.raises(SingleClass):
            roc_auc([0.1, 0.2], [1, 1])

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(2, 100))
            scores = np.round(rng.random(n), 2)  # rounding forces ties
            labels = rng.integers(0, 2, n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            assert abs(roc_auc(scores, labels)
                       - pairwise_auc_oracle(scores, labels)) < 1e-12

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(1)
        scores = rng.random(60)
        labels = rng.integers(0, 2, 60)
        labels[0], labels[1] = 0, 1
        a = roc_auc(scores, labels)
        b = roc_auc(np.exp(3 * scores) + 7, labels)
        assert abs(a - b) < 1e-12

    def test_negation_complements(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            scores = np.round(rng.random(40), 1)
            labels = rng.integers(0, 2, 40)
            labels[0], labels[1] = 0, 1
            assert abs(roc_auc(scores, labels)
                       + roc_auc(-scores, labels) - 1.0) < 1e-12


class TestAveragePrecision:
    def test_worked_example(self):
        ap = average_precision([0.9, 0.8, 0.7], [1, 0, 1])
        assert abs(ap - (0.5 + 0.5 * (2 / 3))) < 1e-12

    def test_perfect_ranking(self):
        assert average_precision([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0

    def test_no_positives_rejected(self):
        with pytest.raises(NoPositives):
            average_precision([0.5], [0])

    def test_matches_cut_point_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            n = int(rng.integers(2, 100))
            scores = np.round(rng.random(n), 2)
            labels = rng.integers(0, 2, n)
            if labels.sum() == 0:
                labels[0] = 1
            assert abs(average_precision(scores, labels)
                       - cut_point_ap_oracle(scores, labels)) < 1e-12

    def test_random_scores_approach_positive_rate(self):
        rng = np.random.default_rng(4)
        rate = 0.19
        values = []
        for _ in range(400):
            n = 500
            labels = (rng.random(n) < rate).astype(int)
            if labels.sum() == 0:
                labels[0] = 1
            values.append(average_precision(rng.random(n), labels))
        assert abs(np.mean(values) - rate) < 0.02


class TestF1Scores:
    def test_perfect(self):
        f1p, f1n, macro, acc, conf = f1_scores([1, 0, 1], [1, 0, 1])
        assert f1p == f1n == macro == acc == 1.0
        assert (conf.tp, conf.fp, conf.tn, conf.fn) == (2, 0, 1, 0)

    def test_half_wrong(self):
        f1p, f1n, macro, acc, _ = f1_scores([1, 1, 0, 0], [1, 0, 1, 0])
        assert (f1p, f1n, macro, acc) == (0.5, 0.5, 0.5, 0.5)

    def test_degenerate_majority_baseline(self):
        labels = np.zeros(100, dtype=int)
        labels[:19] = 1
        preds = np.zeros(100, dtype=int)
        f1p, _, _, acc, _ = f1_scores(preds, labels)
        assert f1p == 0.0
        assert acc == 0.81

    def test_empty_support_warns(self):
        with pytest.warns(RuntimeWarning):
            f1p, _, _, _, _ = f1_scores([0, 0], [0, 0])
        assert f1p == 0.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            f1_scores([1, 0], [1])


class TestTuneThreshold:
    def test_grid_shape(self):
        assert THRESHOLD_GRID[0] == 0.05
        assert THRESHOLD_GRID[-1] == 0.95
        assert len(THRESHOLD_GRID) == 91
        assert np.allclose(np.diff(THRESHOLD_GRID), 0.01)

    def test_worked_example(self):
        scan = tune_threshold([0.2, 0.6, 0.8], [0, 1, 1])
        assert scan.tau_star == 0.21
        assert scan.best_f1 == 1.0

    def test_separation_takes_lowest_winning_grid_point(self):
        scan = tune_threshold([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1])
        assert scan.best_f1 == 1.0
        assert scan.tau_star == 0.21  # first grid point above 0.2

    def test_identical_scores_floor_threshold(self):
        scan = tune_threshold([0.4, 0.4, 0.4, 0.4], [0, 1, 1, 0])
        assert scan.tau_star == 0.05

    def test_single_class_rejected(self):
        with pytest.raises(SingleClass):
            tune_threshold([0.2, 0.3], [1, 1])

    def test_grid_optimality_exact(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            scores = rng.random(60)
            labels = rng.integers(0, 2, 60)
            labels[0], labels[1] = 0, 1
            scan = tune_threshold(scores, labels)

            def f1_at(tau):
                return f1_scores((scores >= tau).astype(int), labels)[0]

            grid_f1 = [f1_at(t) for t in THRESHOLD_GRID]
            assert scan.best_f1 == max(grid_f1)
            assert scan.tau_star == THRESHOLD_GRID[int(np.argmax(grid_f1))]

    def test_matches_exhaustive_cut_points_on_grid_scores(self):
        # with scores on the grid resolution, the scan recovers the exact
        # optimum over every distinct cut point
        rng = np.random.default_rng(9)
        for _ in range(30):
            scores = rng.integers(5, 96, size=50) / 100.0
            labels = rng.integers(0, 2, 50)
            labels[0], labels[1] = 0, 1
            scan = tune_threshold(scores, labels)

            def f1_at(tau):
                return f1_scores((scores >= tau).astype(int), labels)[0]

            exhaustive = max(f1_at(t) for t in np.unique(scores))
            assert abs(scan.best_f1 - exhaustive) < 1e-12


class TestCurves:
    def test_roc_endpoints(self):
        pts = roc_curve_points([0.9, 0.6, 0.3, 0.1], [1, 1, 0, 0])
        assert pts[0] == (0.0, 0.0)
        assert pts[-1] == (1.0, 1.0)

    def test_pr_anchor(self):
        pts = pr_curve_points([0.9, 0.6, 0.3], [1, 0, 1])
        assert pts[0] == (0.0, 1.0)
        assert pts[-1][0] == 1.0

    def test_step_area_matches_ap(self):
        rng = np.random.default_rng(12)
        scores = rng.random(50)
        labels = rng.integers(0, 2, 50)
        labels[0] = 1
        pts = pr_curve_points(scores, labels)
        area = sum((r2 - r1) * p2 for (r1, _), (r2, p2) in zip(pts, pts[1:]))
        assert abs(area - average_precision(scores, labels)) < 1e-12


class TestEvaluateScores:
    def test_report_fields_consistent(self):
        rng = np.random.default_rng(13)
        scores = rng.random(80)
        labels = rng.integers(0, 2, 80)
        labels[0], labels[1] = 0, 1
        rep = evaluate_scores("summary", scores, labels, threshold=0.4)
        conf = rep.confusion
        total = conf.tp + conf.fp + conf.tn + conf.fn
        assert total == 80
        assert abs(rep.accuracy - (conf.tp + conf.tn) / total) < 1e-12
        assert abs(rep.macro_f1 - 0.5 * (rep.f1_pos + rep.f1_neg)) < 1e-12
        for value in (rep.accuracy, rep.roc_auc, rep.pr_auc, rep.f1_pos,
                      rep.f1_neg, rep.macro_f1):
            assert 0.0 <= value <= 1.0
        d = rep.to_dict()
        assert d["variant"] == "summary"
        assert d["metrics"]["roc_auc"] == rep.roc_auc
        assert d["confusion"]["tp"] == conf.tp
