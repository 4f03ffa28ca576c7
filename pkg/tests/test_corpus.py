import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from turbo_topics.corpus import (AnnotatedToken, CodedStream, CorpusError, StreamFormatError, Token,
                                 build_vocabulary, extract_topic_stream, read_stream, tokenize_corpus,
                                 write_stream)


def triples(tokens):
    return [(t.surface, t.doc_id, t.position) for t in tokens]


def test_tokenizer_lowercases_and_drops_punctuation():
    assert triples(tokenize_corpus(["New York!"])) == [("new", 0, 0), ("york", 0, 1)]


def test_positions_restart_per_document():
    assert triples(tokenize_corpus(["a b", "c"])) == [("a", 0, 0), ("b", 0, 1), ("c", 1, 0)]


def test_empty_document_is_allowed():
    assert triples(tokenize_corpus(["", "x"])) == [("x", 1, 0)]
    with pytest.raises(CorpusError):
        tokenize_corpus([])


def test_stopword_leaves_vocabulary_but_not_stream():
    toks = tokenize_corpus(["the cat sat", "the dog"])
    vocab = build_vocabulary(toks, {"the"}, min_doc_freq=1)
    assert "the" not in vocab.terms
    assert "the" in [t.surface for t in toks]


def test_min_doc_freq_one_keeps_everything():
    toks = tokenize_corpus(["a b a", "c"])
    assert set(build_vocabulary(toks, (), 1).terms) == {"a", "b", "c"}


def test_min_doc_freq_filters():
    toks = tokenize_corpus(["a b", "a c", "a"])
    assert build_vocabulary(toks, (), 2).terms == ("a",)
    with pytest.raises(CorpusError):
        build_vocabulary(toks, (), 4)


def test_stream_schema():
    buf = io.StringIO()
    write_stream([AnnotatedToken(Token("phase", 0, 0), 11)], buf)
    assert buf.getvalue() == '{"w":"phase","d":0,"p":0,"z":11}\n'
    back = read_stream(io.StringIO(buf.getvalue()))
    assert back == [AnnotatedToken(Token("phase", 0, 0), 11)]
    buf = io.StringIO()
    write_stream([AnnotatedToken(Token("the", 0, 1), None)], buf)
    assert '"z":null' in buf.getvalue()
    assert read_stream(io.StringIO(buf.getvalue()))[0].topic is None


def test_empty_stream_round_trip():
    buf = io.StringIO()
    write_stream([], buf)
    assert buf.getvalue() == ""
    assert read_stream(io.StringIO("")) == []


def test_manifest_header():
    buf = io.StringIO()
    write_stream([AnnotatedToken(Token("a", 0, 0), 1)], buf, manifest={"seed": 3})
    out, m = read_stream(io.StringIO(buf.getvalue()), with_manifest=True)
    assert m == {"seed": 3} and len(out) == 1


@pytest.mark.parametrize("line, reason", [
    ("nope", "invalid JSON"),
    ('{"w":"a","d":0,"p":0}', "expected keys"),
    ('{"w":"a","d":"0","p":0,"z":1}', "wrong type"),
    ('{"w":"a","d":0,"p":0,"z":-1}', "negative topic"),
])
def test_malformed_line_reports_line_number(line, reason):
    with pytest.raises(StreamFormatError) as e:
        read_stream(io.StringIO('{"w":"x","d":0,"p":0,"z":null}\n' + line + "\n"))
    assert "line 2" in str(e.value) and reason in str(e.value)


words = st.text(alphabet="abcxyz", min_size=1, max_size=6)
tokens = st.lists(st.tuples(words, st.integers(0, 5), st.integers(0, 50), st.none() | st.integers(0, 9)),
                  max_size=40)


@given(tokens)
def test_stream_round_trip(recs):
    stream = [AnnotatedToken(Token(w, d, p), z) for w, d, p, z in recs]
    buf = io.StringIO()
    write_stream(stream, buf)
    assert read_stream(io.StringIO(buf.getvalue())) == stream


def test_anchor_flags_follow_topic_labels():
    ann = [AnnotatedToken(Token(w, 0, i), z) for i, (w, z) in
           enumerate([("phase", 11), ("diagram", 11), ("of", None), ("the", None), ("model", 3)])]
    cs = extract_topic_stream(ann, 11)
    assert cs.anchor.tolist() == [True, True, False, False, False]
    assert not extract_topic_stream(ann, 7).anchor.any()


def test_stop_words_stay_in_topic_stream():
    ann = [AnnotatedToken(Token(w, 0, i), z) for i, (w, z) in
           enumerate([("sex", 2), ("and", None), ("the", None), ("city", 2)])]
    cs = extract_topic_stream(ann, 2)
    assert cs.decode(cs.ids) == ("sex", "and", "the", "city")


def test_documents_are_separated_by_sentinels():
    cs = CodedStream.from_documents([["a", "b"], ["c"]])
    assert cs.ids.tolist()[2] == -1
    assert cs.documents() == [["a", "b"], ["c"]]
    assert cs.n_tokens == 3


@settings(max_examples=50)
@given(st.lists(st.lists(st.sampled_from("abcd"), max_size=8), min_size=1, max_size=5))
def test_documents_round_trip(docs):
    cs = CodedStream.from_documents(docs)
    assert cs.documents() == docs
    assert np.array_equal(cs.reversed().reversed().ids, cs.ids)
