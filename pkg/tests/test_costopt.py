import numpy as np
import pytest

from fraudwatch.costopt import (
    ConfusionMatrix,
    CostParams,
    ScoredSet,
    basic_metrics,
    candidate_grid,
    confusion_at,
    evaluate,
    evaluate_scores,
    expected_cost,
    optimize_threshold,
    pr_auc,
    pr_curve,
    roc_auc,
    roc_curve,
    threshold_sweep,
)


# --- independent oracles ----------------------------------------------------

def naive_confusion(scores, labels, tau):
    tp = fp = tn = fn = 0
    for s, y in zip(scores, labels):
        if s >= tau:
            if y == 1:
                tp += 1
            else:
                fp += 1
        else:
            if y == 1:
                fn += 1
            else:
                tn += 1
    return tp, fp, tn, fn


def pairwise_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = ties = 0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1
            elif p == n:
                ties += 1
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


def exhaustive_best_tau(scores, labels, c_fn, c_fp, max_fpr=None):
    """Independent argmin over the same grid, with the same tie-breaks."""
    grid = sorted(set(list(scores) + [0.0, 0.5, 1.0]))
    best = None
    for tau in grid:
        tp, fp, tn, fn = naive_confusion(scores, labels, tau)
        fpr = fp / (fp + tn) if fp + tn else 0.0
        if max_fpr is not None and fpr > max_fpr:
            continue
        recall = tp / (tp + fn) if tp + fn else 0.0
        cost = c_fn * fn + c_fp * fp
        key = (cost, -recall, tau)
        if best is None or key < best[0]:
            best = (key, tau, cost)
    return best


def random_scored_set(rng, n=None, granularity=None):
    n = n or int(rng.integers(2, 60))
    labels = rng.integers(0, 2, size=n)
    if labels.sum() == 0:
        labels[0] = 1
    if labels.sum() == n:
        labels[0] = 0
    if granularity:
        scores = rng.integers(0, granularity + 1, size=n) / granularity
    else:
        scores = rng.uniform(0, 1, size=n)
    return ScoredSet(scores=scores, labels=labels)


class TestConfusionAt:
    S = ScoredSet(scores=np.array([0.9, 0.8, 0.3, 0.1]),
                  labels=np.array([1, 1, 0, 0]))

    def test_separable_at_half(self):
        cm = confusion_at(self.S, 0.5)
        assert (cm.tp, cm.tn, cm.fp, cm.fn) == (2, 2, 0, 0)

    def test_at_085_matches_enumeration(self):
        cm = confusion_at(self.S, 0.85)
        assert (cm.tp, cm.fn, cm.tn, cm.fp) == (1, 1, 2, 0)
        assert naive_confusion(self.S.scores, self.S.labels, 0.85) == (1, 0, 2, 1)

    def test_score_equal_to_tau_is_fraud(self):
        # inclusive rule: P(y=1|x) >= tau
        s = ScoredSet(scores=np.array([0.5, 0.4]), labels=np.array([1, 0]))
        cm = confusion_at(s, 0.5)
        assert cm.tp == 1 and cm.fn == 0

    def test_totals_preserved(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            s = random_scored_set(rng)
            tau = float(rng.uniform(0, 1))
            cm = confusion_at(s, tau)
            assert cm.total == s.scores.size
            assert (cm.tp, cm.fp, cm.tn, cm.fn) == tuple(
                naive_confusion(s.scores, s.labels, tau)[i] for i in (0, 1, 2, 3))


class TestExpectedCost:
    def test_direct_substitution(self):
        cm = ConfusionMatrix(tp=0, fp=5, tn=0, fn=2)
        assert expected_cost(cm, CostParams(c_fn=10, c_fp=1)) == 25.0

    def test_zero_errors_cost_zero(self):
        cm = ConfusionMatrix(tp=3, fp=0, tn=7, fn=0)
        assert expected_cost(cm, CostParams(c_fn=999, c_fp=7)) == 0.0

    def test_single_term(self):
        cm = ConfusionMatrix(tp=0, fp=0, tn=0, fn=3)
        assert expected_cost(cm, CostParams(c_fn=50, c_fp=1)) == 150.0


class TestBasicMetrics:
    def test_perfect_matrix(self):
        acc, p, r, f1, fpr = basic_metrics(ConfusionMatrix(tp=2, tn=2, fp=0, fn=0))
        assert (acc, p, r, f1, fpr) == (1.0, 1.0, 1.0, 1.0, 0.0)

    def test_empty_denominators(self):
        acc, p, r, f1, fpr = basic_metrics(ConfusionMatrix(tp=0, fp=0, fn=5, tn=5))
        assert (p, r, f1) == (0.0, 0.0, 0.0)
        assert acc == 0.5

    def test_hand_arithmetic(self):
        acc, p, r, f1, fpr = basic_metrics(ConfusionMatrix(tp=9, fn=1, fp=3, tn=87))
        assert p == pytest.approx(0.75)
        assert r == pytest.approx(0.9)
        assert f1 == pytest.approx(2 * 0.75 * 0.9 / 1.65, abs=1e-12)
        assert f1 == pytest.approx(0.8182, abs=5e-5)
        assert acc == pytest.approx(0.96)
        assert fpr == pytest.approx(3 / 90)


class TestOptimizeThreshold:
    def test_frozen_example(self):
        # brute force over the 8-candidate grid gives tau*=0.4, cost 1
        s = ScoredSet(scores=np.array([0.95, 0.9, 0.6, 0.4, 0.2]),
                      labels=np.array([1, 1, 0, 1, 0]))
        sweep = optimize_threshold(s, CostParams(c_fn=10, c_fp=1))
        assert sweep.chosen == 0.4
        assert sweep.chosen_row.cost == 1.0
        oracle = exhaustive_best_tau(list(s.scores), list(s.labels), 10, 1)
        assert oracle[1] == 0.4 and oracle[2] == 1.0

    def test_separable_equal_costs_zero_cost(self):
        s = ScoredSet(scores=np.array([0.9, 0.8, 0.2, 0.1]),
                      labels=np.array([1, 1, 0, 0]))
        sweep = optimize_threshold(s, CostParams(c_fn=1, c_fp=1))
        assert sweep.chosen_row.cost == 0.0

    def test_never_worse_than_half(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            s = random_scored_set(rng)
            sweep = optimize_threshold(s, CostParams(c_fn=50, c_fp=1))
            assert sweep.chosen_row.cost <= sweep.row_at(0.5).cost

    def test_grid_contains_anchors(self):
        s = random_scored_set(np.random.default_rng(9))
        grid = candidate_grid(s)
        for anchor in (0.0, 0.5, 1.0):
            assert anchor in grid

    def test_matches_exhaustive_search(self):
        rng = np.random.default_rng(11)
        for trial in range(200):
            s = random_scored_set(rng, granularity=20 if trial % 2 else None)
            c_fn = float(rng.uniform(1, 100))
            c_fp = float(rng.uniform(0.1, 10))
            max_fpr = float(rng.uniform(0.05, 1.0)) if trial % 3 == 0 else None
            try:
                sweep = optimize_threshold(
                    s, CostParams(c_fn=c_fn, c_fp=c_fp, max_fpr=max_fpr))
            except ValueError:
                assert exhaustive_best_tau(
                    list(s.scores), list(s.labels), c_fn, c_fp, max_fpr) is None
                continue
            oracle = exhaustive_best_tau(
                list(s.scores), list(s.labels), c_fn, c_fp, max_fpr)
            assert sweep.chosen == oracle[1]
            assert sweep.chosen_row.cost == pytest.approx(oracle[2], rel=1e-12)

    def test_single_class_rejected(self):
        s = ScoredSet(scores=np.array([0.2, 0.7]), labels=np.array([1, 1]))
        with pytest.raises(ValueError, match="both classes"):
            optimize_threshold(s, CostParams())

    def test_infeasible_constraint_names_max_fpr(self):
        # the only negative scores 1.0, so fpr is 1 at every candidate tau
        s = ScoredSet(scores=np.array([0.5, 1.0]), labels=np.array([1, 0]))
        with pytest.raises(ValueError, match="max_fpr"):
            optimize_threshold(s, CostParams(c_fn=50, c_fp=1, max_fpr=0.1))

    def test_sweep_monotonicity(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            s = random_scored_set(rng)
            rows = threshold_sweep(s, CostParams())
            for a, b in zip(rows, rows[1:]):
                assert b.recall <= a.recall + 1e-15
                assert b.fpr <= a.fpr + 1e-15

    def test_costlier_misses_never_lower_recall(self):
        # as c_fp/c_fn falls, recall at the chosen tau* is non-decreasing
        rng = np.random.default_rng(31)
        for _ in range(50):
            s = random_scored_set(rng)
            ratios = sorted(rng.uniform(0.001, 1.0, size=4))
            recalls = []
            for ratio in ratios:
                sweep = optimize_threshold(s, CostParams(c_fn=1.0, c_fp=ratio))
                recalls.append(sweep.chosen_row.recall)
            # ratios ascend -> misses relatively cheaper -> recall non-increasing
            for a, b in zip(recalls, recalls[1:]):
                assert b <= a + 1e-15


class TestRoc:
    def test_perfect_ranking(self):
        s = ScoredSet(scores=np.array([0.9, 0.8, 0.2, 0.1]),
                      labels=np.array([1, 1, 0, 0]))
        assert roc_auc(s) == 1.0

    def test_all_ties_half(self):
        s = ScoredSet(scores=np.array([0.5, 0.5, 0.5, 0.5]),
                      labels=np.array([1, 0, 1, 0]))
        assert roc_auc(s) == pytest.approx(0.5)
        assert roc_curve(s) == [(0.0, 0.0), (1.0, 1.0)]

    def test_frozen_pairwise_example(self):
        # 2 of 4 pos-neg pairs concordant
        s = ScoredSet(scores=np.array([0.9, 0.4, 0.35, 0.8]),
                      labels=np.array([1, 0, 1, 0]))
        assert roc_auc(s) == pytest.approx(0.5)
        assert pairwise_auc(list(s.scores), list(s.labels)) == 0.5

    def test_trapezoid_equals_pairwise(self):
        rng = np.random.default_rng(17)
        for trial in range(60):
            s = random_scored_set(rng, granularity=10 if trial % 2 else None)
            assert roc_auc(s) == pytest.approx(
                pairwise_auc(list(s.scores), list(s.labels)), abs=1e-9)

    def test_endpoints_present(self):
        s = random_scored_set(np.random.default_rng(19))
        pts = roc_curve(s)
        assert pts[0] == (0.0, 0.0) and pts[-1] == (1.0, 1.0)

    def test_single_class_rejected(self):
        s = ScoredSet(scores=np.array([0.1, 0.9]), labels=np.array([0, 0]))
        with pytest.raises(ValueError, match="both classes"):
            roc_curve(s)


class TestPr:
    def test_perfect_ranking(self):
        s = ScoredSet(scores=np.array([0.9, 0.8, 0.2, 0.1]),
                      labels=np.array([1, 1, 0, 0]))
        assert pr_auc(s) == 1.0

    def test_single_positive_ranked_last(self):
        s = ScoredSet(scores=np.array([0.9, 0.8, 0.7, 0.1]),
                      labels=np.array([0, 0, 0, 1]))
        assert pr_auc(s) == pytest.approx(0.25)

    def test_frozen_step_sum(self):
        # by hand: 1 * 0.5 + (2/3) * 0.5
        s = ScoredSet(scores=np.array([0.9, 0.8, 0.7, 0.6]),
                      labels=np.array([1, 0, 1, 0]))
        assert pr_auc(s) == pytest.approx(1 * 0.5 + (2 / 3) * 0.5, abs=1e-12)
        assert pr_auc(s) == pytest.approx(0.8333, abs=5e-5)

    def test_no_positives_rejected(self):
        s = ScoredSet(scores=np.array([0.5]), labels=np.array([0]))
        with pytest.raises(ValueError, match="positive"):
            pr_curve(s)

    def test_curve_recalls_non_decreasing(self):
        rng = np.random.default_rng(29)
        for _ in range(20):
            s = random_scored_set(rng)
            pts = pr_curve(s)
            recalls = [r for r, _ in pts]
            assert recalls == sorted(recalls)
            assert recalls[-1] == 1.0


class TestEvaluate:
    def test_all_fraud_degenerate(self):
        s = ScoredSet(scores=np.array([1.0, 1.0, 1.0]), labels=np.array([1, 1, 1]))
        report = evaluate_scores(s, 0.5)
        assert report.recall == 1.0
        assert report.roc_auc is None and report.roc_points is None
        assert any("roc omitted" in f for f in report.flags)

    def test_tau_above_all_scores(self):
        s = ScoredSet(scores=np.array([0.99, 0.5]), labels=np.array([1, 0]))
        report = evaluate_scores(s, 1.0)
        assert report.recall == 0.0

    def test_metrics_in_unit_interval(self):
        rng = np.random.default_rng(37)
        for _ in range(30):
            s = random_scored_set(rng)
            report = evaluate_scores(s, float(rng.uniform(0, 1)))
            for v in (report.accuracy, report.precision, report.recall,
                      report.f1, report.fpr, report.roc_auc, report.pr_auc):
                if v is not None:
                    assert 0.0 <= v <= 1.0
            assert report.cm.total == s.scores.size
