"""Hypothesis fuzzing of the invariants that must hold for any input."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from fraudwatch.costopt import (
    ConfusionMatrix,
    CostParams,
    ScoredSet,
    basic_metrics,
    confusion_at,
    expected_cost,
    optimize_threshold,
    roc_auc,
)
from fraudwatch.phishgate import UrlFeatures, heuristic_score
from test_costopt import exhaustive_best_tau, naive_confusion, pairwise_auc

pairs = st.lists(
    st.tuples(st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
              st.integers(min_value=0, max_value=1)),
    min_size=1, max_size=60)


def scored_set(pair_list):
    return ScoredSet(scores=np.array([s for s, _ in pair_list]),
                     labels=np.array([l for _, l in pair_list]))


@given(pairs, st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
def test_confusion_matches_enumeration(pair_list, tau):
    s = scored_set(pair_list)
    cm = confusion_at(s, tau)
    assert (cm.tp, cm.fp, cm.tn, cm.fn) == naive_confusion(s.scores, s.labels, tau)
    assert cm.total == len(pair_list)


@given(pairs, st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
def test_metrics_stay_in_unit_interval(pair_list, tau):
    cm = confusion_at(scored_set(pair_list), tau)
    for value in basic_metrics(cm):
        assert 0.0 <= value <= 1.0


@settings(max_examples=60)
@given(pairs)
def test_trapezoid_auc_equals_pairwise(pair_list):
    labels = [l for _, l in pair_list]
    if 0 < sum(labels) < len(labels):
        s = scored_set(pair_list)
        assert abs(roc_auc(s) - pairwise_auc(list(s.scores), list(s.labels))) <= 1e-9


@settings(max_examples=60)
@given(pairs, st.floats(min_value=0.5, max_value=100.0),
       st.floats(min_value=0.1, max_value=10.0))
def test_chosen_tau_matches_exhaustive_search(pair_list, c_fn, c_fp):
    labels = [l for _, l in pair_list]
    if 0 < sum(labels) < len(labels):
        s = scored_set(pair_list)
        sweep = optimize_threshold(s, CostParams(c_fn=c_fn, c_fp=c_fp))
        oracle = exhaustive_best_tau(list(s.scores), list(s.labels), c_fn, c_fp)
        assert sweep.chosen == oracle[1]
        assert sweep.chosen_row.cost <= sweep.row_at(0.5).cost


@given(st.integers(min_value=0, max_value=10_000),
       st.integers(min_value=0, max_value=10_000),
       st.floats(min_value=0.01, max_value=1000.0),
       st.floats(min_value=0.01, max_value=1000.0))
def test_expected_cost_is_linear(fn, fp, c_fn, c_fp):
    cm = ConfusionMatrix(tp=1, fp=fp, tn=1, fn=fn)
    assert expected_cost(cm, CostParams(c_fn=c_fn, c_fp=c_fp)) == c_fn * fn + c_fp * fp


url_features = st.builds(
    UrlFeatures,
    url_length=st.integers(min_value=0, max_value=500),
    host_length=st.integers(min_value=0, max_value=200),
    num_dots_in_host=st.integers(min_value=0, max_value=20),
    num_hyphens_in_host=st.integers(min_value=0, max_value=20),
    num_subdomains=st.integers(min_value=0, max_value=15),
    has_ip_host=st.booleans(),
    has_at_symbol=st.booleans(),
    uses_https=st.booleans(),
    has_punycode=st.booleans(),
    suspicious_tld=st.booleans(),
    keyword_hits=st.integers(min_value=0, max_value=40),
    path_depth=st.integers(min_value=0, max_value=30),
)


@given(url_features)
def test_phish_score_always_in_unit_interval(features):
    assert 0.0 <= heuristic_score(features) <= 1.0


@given(url_features)
def test_phish_score_monotone_in_keyword_hits(features):
    import dataclasses

    bumped = dataclasses.replace(features, keyword_hits=features.keyword_hits + 1)
    assert heuristic_score(bumped) >= heuristic_score(features)
