import numpy as np
import pytest

from turbo_topics.corpus import CorpusError, Token, build_vocabulary, tokenize_corpus
from turbo_topics.lda import (LdaConfig, annotate_corpus, fit_lda, heldout_log_likelihood, model_dump,
                              sample_lda_corpus, top_words)


def _fit(docs, stop=(), **kw):
    toks = tokenize_corpus(docs)
    vocab = build_vocabulary(toks, stop, min_doc_freq=1)
    state = fit_lda(toks, vocab, LdaConfig(**kw))
    return toks, vocab, state


def test_single_topic_labels_everything_zero():
    toks, vocab, state = _fit(["a b c a", "b c d"], K=1, sweeps=20, burn_in=10)
    ann = annotate_corpus(toks, vocab, state)
    assert {a.topic for a in ann} == {0}
    assert (state.annotation_tally.sum(axis=1) == 10).all()


def test_disjoint_blocks_separate():
    docs = [" ".join(["a", "b"] * 30), " ".join(["c", "d"] * 30)]
    toks, vocab, state = _fit(docs, K=2, sweeps=500, burn_in=250, seed=3)
    ann = annotate_corpus(toks, vocab, state)
    first = {a.topic for a in ann if a.token.doc_id == 0}
    second = {a.topic for a in ann if a.token.doc_id == 1}
    assert len(first) == len(second) == 1 and first != second


def test_heldout_likelihood_improves():
    docs, _, _, _ = sample_lda_corpus(100, 60, K=4, V=80, alpha=0.2, eta=0.05, seed=0)
    train = [" ".join(f"w{i}" for i in d[0::2]) for d in docs]
    toks = tokenize_corpus(train)
    vocab = build_vocabulary(toks, (), 1)
    held = [np.array([vocab.index(f"w{i}") for i in d[1::2] if f"w{i}" in vocab]) for d in docs]
    ll = {}
    for sweeps in (1, 200):
        st = fit_lda(toks, vocab, LdaConfig(K=4, alpha=0.2, eta=0.05, sweeps=sweeps, burn_in=0, seed=1))
        ll[sweeps] = heldout_log_likelihood(st.topic_word_probs(), held, 0.2)
    assert ll[200] > ll[1]


def test_stop_words_are_not_labelled():
    toks, vocab, state = _fit(["the cat sat", "the dog ran"], stop={"the"}, K=2, sweeps=10, burn_in=5)
    ann = annotate_corpus(toks, vocab, state)
    assert all(a.topic is None for a in ann if a.surface == "the")
    assert all(a.topic is not None for a in ann if a.surface != "the")


def test_same_word_can_take_different_topics():
    insects = " ".join(["fly"] + ["bee", "wasp", "ant"] * 20)
    planes = " ".join(["fly"] + ["jet", "plane", "pilot"] * 20)
    docs = [insects, planes] * 3
    toks, vocab, state = _fit(docs, K=2, alpha=0.1, sweeps=300, burn_in=150, seed=0)
    ann = annotate_corpus(toks, vocab, state)
    assert len({a.topic for a in ann if a.surface == "fly"}) == 2


def test_fit_is_deterministic():
    docs = ["a b c d e", "c d e f g", "a c e g"]
    a = _fit(docs, K=3, sweeps=30, burn_in=10, seed=7)[2]
    b = _fit(docs, K=3, sweeps=30, burn_in=10, seed=7)[2]
    assert np.array_equal(a.annotation_tally, b.annotation_tally)


def test_annotation_requires_matching_tokens():
    toks, vocab, state = _fit(["a b c", "b c d"], K=2, sweeps=10, burn_in=5)
    other = toks[:-1] + [Token("zz", 1, 2)]
    with pytest.raises(CorpusError):
        annotate_corpus(other, vocab, state)


def test_config_validation_and_warnings():
    with pytest.raises(ValueError):
        LdaConfig(K=0)
    with pytest.raises(ValueError):
        LdaConfig(sweeps=10, burn_in=10)
    assert LdaConfig(K=10).alpha_value == 5.0
    with pytest.warns(UserWarning):
        _fit(["a b"], K=5, sweeps=5, burn_in=1)


def test_model_dump_counts():
    toks, vocab, state = _fit(["a a b", "a c"], K=1, sweeps=5, burn_in=1)
    d = model_dump(state, vocab, M=2)
    assert d["topics"][0]["n_assigned"] == 5
    assert d["topics"][0]["top_words"] == [["a", 3], ["b", 1]]
    assert top_words(state, vocab, 3)[0] == [("a", 3), ("b", 1), ("c", 1)]
