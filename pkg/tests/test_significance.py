import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import chisq1_tail_quad
from turbo_topics.backoff import History, StreamView
from turbo_topics.corpus import CodedStream
from turbo_topics.significance import (ContingencyTable, NothingToTest, PermutationConfig, UnitShuffler,
                                       backoff_lr_asymptotic_test, chi_square_test, chisq1_survival,
                                       dunning_lr_test, exceed_count, g2_statistic, multinomial_permutation_test,
                                       permutation_test_max_lr, permute_stream, verdict)


@pytest.mark.parametrize("x", [0.0, 0.5, 3.841458820694124, 10.0, 20.0])
def test_chisq_tail_matches_quadrature(x):
    assert chisq1_survival(x) == pytest.approx(chisq1_tail_quad(x), rel=1e-9, abs=1e-15)


def test_chisq_tail_reference_points():
    assert chisq1_survival(0.0) == 1.0
    assert chisq1_survival(3.841) == pytest.approx(0.05, abs=1e-4)
    assert chisq1_survival(20.0) == pytest.approx(7.74e-6, rel=1e-3)


def test_pearson_examples():
    v = chi_square_test(ContingencyTable(5, 5, 5, 5))
    assert v.statistic == 0 and v.p_value == 1.0 and not v.significant
    v = chi_square_test(ContingencyTable(10, 0, 0, 10))
    assert v.statistic == pytest.approx(20.0)
    assert v.p_value == pytest.approx(chisq1_tail_quad(20.0), rel=1e-9)


def _g2_direct(n):
    """2 × (saturated − independence) multinomial log likelihood."""
    n = np.asarray(n, dtype=float).reshape(2, 2)
    N = n.sum()
    exp = np.outer(n.sum(1), n.sum(0)) / N
    ok = n > 0
    return 2 * float((n[ok] * np.log(n[ok] / N)).sum() - (n[ok] * np.log(exp[ok] / N)).sum())


def test_dunning_examples():
    v = dunning_lr_test(ContingencyTable(5, 5, 5, 5))
    assert v.statistic == 0 and v.p_value == 1.0
    v = dunning_lr_test(ContingencyTable(10, 0, 0, 10))
    assert v.statistic == pytest.approx(2 * 20 * math.log(2))
    assert v.statistic == pytest.approx(27.7259, abs=1e-4)
    assert v.statistic == pytest.approx(_g2_direct([10, 0, 0, 10]))


@settings(max_examples=100)
@given(st.lists(st.integers(0, 40), min_size=4, max_size=4).filter(lambda c: sum(c) > 0))
def test_g2_matches_direct_likelihood(cells):
    assert g2_statistic(*cells) == pytest.approx(_g2_direct(cells), abs=1e-9)


def test_dunning_grows_with_scale():
    a = dunning_lr_test(ContingencyTable(6, 2, 3, 9)).statistic
    b = dunning_lr_test(ContingencyTable(60, 20, 30, 90)).statistic
    assert b > a


def test_asymptotic_backoff_test():
    assert backoff_lr_asymptotic_test(0.0).p_value == 1.0
    assert backoff_lr_asymptotic_test(-3.0).p_value == 1.0
    v = backoff_lr_asymptotic_test(1.92)
    assert v.statistic == pytest.approx(3.84)
    assert v.p_value == pytest.approx(chisq1_tail_quad(3.84), rel=1e-9)
    assert v.p_value == pytest.approx(0.05, abs=1e-3)


def test_verdict_uses_strict_threshold():
    assert verdict(1.0, 0.0099, 0.01).significant
    assert not verdict(1.0, 0.01, 0.01).significant


def test_exceed_count_conventions():
    assert exceed_count(1.0, [0.5, 1.0, 2.0]) == 1
    assert exceed_count(1.0, [0.5, 1.0, 2.0], strict=False) == 2


def test_table_from_stream():
    s = CodedStream.from_documents([["a", "b", "a", "c"], ["b", "a", "b"]])
    a, b = s.index["a"], s.index["b"]
    t = ContingencyTable.from_stream(s, a, b)
    assert (t.n11, t.n12, t.n21, t.n22) == (2, 1, 0, 2)
    t = ContingencyTable.from_stream(s, a, b, include_initial=True)
    # two document-initial rows: "a" (not b) and "b"
    assert (t.n11, t.n12, t.n21, t.n22) == (2, 1, 1, 3)


def test_plain_shuffle_without_phrases():
    s = CodedStream.from_documents([["a", "b"], ["c", "d", "e"]])
    sh = UnitShuffler(s.ids, s.anchor)
    assert sh.n_units == 5
    out = permute_stream(s, seed=3)
    assert sorted(out.ids.tolist()) == sorted(s.ids[s.ids >= 0].tolist())
    assert -1 not in out.ids.tolist()


def test_phrase_units_stay_whole():
    s = CodedStream.from_words("new york a new york b".split())
    ny = (s.encode(["new", "york"]), None)
    sh = UnitShuffler(s.ids, s.anchor, [ny])
    assert Counter(sh.units()) == Counter([ny[0], ny[0], (s.index["a"],), (s.index["b"],)])
    for seed in range(50):
        ids = permute_stream(s, [ny], seed).ids.tolist()
        for i, w in enumerate(ids):
            if w == s.index["new"]:
                assert ids[i + 1] == s.index["york"]


def test_anchored_phrase_freezes_only_labelled_occurrences():
    s = CodedStream.from_words("a b a b".split(), anchors=[True, False, False, False])
    sh = UnitShuffler(s.ids, s.anchor, [(s.encode(["a", "b"]), 0)])
    assert sh.n_units == 3


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from("abcd"), min_size=1, max_size=60), st.integers(0, 2 ** 32 - 1),
       st.lists(st.tuples(st.sampled_from("abcd"), st.sampled_from("abcd")), max_size=2))
def test_shuffle_preserves_unit_multiset(words, seed, pairs):
    s = CodedStream.from_words(words)
    phrases = [(s.encode(p), None) for p in pairs if all(w in s.index for w in p)]
    sh = UnitShuffler(s.ids, s.anchor, phrases)
    order = np.random.default_rng(seed).permutation(sh.n_units)
    ids, _ = sh.materialize(order)
    units = sh.units()
    shuffled = [units[i] for i in order]
    assert ids.tolist() == [w for u in shuffled for w in u]
    assert Counter(units) == Counter(shuffled)
    assert sorted(ids.tolist()) == sorted(s.ids.tolist())


def test_identical_tokens_never_expand():
    s = CodedStream.from_words(["a"] * 50)
    try:
        v = permutation_test_max_lr({}, History((0,)), s, PermutationConfig(M=20))
    except NothingToTest:
        return
    assert not v.significant


def test_nothing_to_test_below_min_count():
    s = CodedStream.from_words("a b c d e f".split())
    with pytest.raises(NothingToTest):
        permutation_test_max_lr({}, History((0,)), s, PermutationConfig(M=10, min_count=2))


def _planted_pair(seed, n_filler=1000, n_pairs=30):
    rng = np.random.default_rng(seed)
    words = [f"s{i}" for i in range(n_filler)]
    for g in sorted(rng.choice(n_filler + 1, size=n_pairs, replace=False).tolist(), reverse=True):
        words[g:g] = ["u", "v"]
    return CodedStream.from_words(words)


def test_deterministic_pair_is_significant():
    hits = 0
    for seed in range(100):
        s = _planted_pair(seed)
        v = permutation_test_max_lr({}, History((s.index["u"],)), s, PermutationConfig(M=100, seed=seed))
        hits += v.p_value <= 0.01 and v.candidate == s.index["v"]
    assert hits >= 95


def test_permutation_p_is_deterministic():
    s = _planted_pair(0, n_filler=200, n_pairs=5)
    cfg = PermutationConfig(M=50, seed=9)
    a = permutation_test_max_lr({}, History((s.index["u"],)), s, cfg)
    b = permutation_test_max_lr({}, History((s.index["u"],)), s, cfg)
    assert a == b


@pytest.mark.parametrize("seed", range(5))
def test_single_candidate_matches_multinomial_test(seed):
    rng = np.random.default_rng(seed)
    words = [f"x{i}" for i in rng.integers(0, 30, size=600)]
    for g in rng.choice(600, size=6, replace=False).tolist():
        words[g:g + 2] = ["u", "v"]
    s = CodedStream.from_words(words)
    u, v = s.index["u"], s.index["v"]
    cfg = PermutationConfig(M=200, seed=seed, min_count=1)
    a = multinomial_permutation_test(s, u, v, cfg, include_initial=True)
    b = permutation_test_max_lr({}, History((u,)), s, cfg, candidates={v})
    assert a.statistic == pytest.approx(2 * b.statistic, rel=1e-9)
    assert a.p_value == b.p_value


def test_windowed_null_matches_full_stream():
    """Anchored tests look only near anchored tokens; the shortcut must be exact."""
    from turbo_topics.backoff import score_candidates
    rng = np.random.default_rng(4)
    for t in range(30):
        docs = [[f"x{i}" for i in rng.integers(0, 6, size=rng.integers(5, 40))] for _ in range(4)]
        anc = [list(rng.random(len(d)) < 0.3) for d in docs]
        s = CodedStream.from_documents(docs, anc)
        w = int(s.ids[0])
        endowed = {History((w, int(rng.integers(len(s.vocab)))), 0): frozenset({int(rng.integers(len(s.vocab)))})}
        from turbo_topics.significance import endowed_phrases
        sh = UnitShuffler(s.ids, s.anchor, endowed_phrases(endowed))
        view = StreamView.of(s)
        h = History((w,), 0)
        centers = sh.anchor & np.isin(sh.ids, [w])
        order = np.random.default_rng(t).permutation(sh.n_units)
        full = score_candidates(view.with_arrays(*sh.materialize(order)), endowed, h, 1)
        win = score_candidates(view.with_arrays(*sh.windows(order, centers, 3)), endowed, h, 1)
        assert full.keys() == win.keys()
        for k in full:
            assert win[k][0] == pytest.approx(full[k][0], abs=1e-9)
