import pytest

from turbo_topics.growth import ReportEntry, TopicPhraseReport
from turbo_topics.report import ReportMismatch, baselines_from_model, render_html, render_text


def _rep(topic, items):
    return TopicPhraseReport(topic, [ReportEntry(tuple(g.split()), m, int(m * 100)) for g, m in items])


def test_identical_columns_without_phrases():
    uni = [("cell", 0.5), ("gene", 0.3)]
    text = render_text([_rep(0, uni)], {0: uni})
    rows = [line for line in text.splitlines() if "|" in line][1:]
    for row in rows:
        left, right = (part.strip() for part in row.split("|"))
        assert left == right


def test_phrase_ranks_above_its_unigram():
    rep = _rep(3, [("indiana jones", 0.4), ("jones", 0.1)])
    text = render_text([rep], {3: [("jones", 0.2), ("indiana", 0.1)]})
    right = [line.split("|")[1].strip() for line in text.splitlines() if "|" in line][1:]
    assert right[0].startswith("indiana jones") and right[1].startswith("jones")


def test_key_mismatch_lists_missing_topics():
    with pytest.raises(ReportMismatch) as e:
        render_text([_rep(0, []), _rep(2, [])], {0: [], 1: []})
    msg = str(e.value)
    assert "no unigram list for topics 2" in msg and "no phrase report for topics 1" in msg


def test_empty_rendering():
    assert render_text([], {}) == "\n"
    assert "</html>" in render_html([], {})


def test_html_escapes_words():
    html = render_html([_rep(0, [("<b>", 1.0)])], {0: [("a&b", 1.0)]})
    assert "&lt;b&gt;" in html and "a&amp;b" in html


def test_rows_limit():
    uni = [(f"w{i}", 1 / 20) for i in range(20)]
    text = render_text([_rep(0, uni)], {0: uni}, rows=5)
    assert len([line for line in text.splitlines() if "|" in line]) == 6


def test_baselines_from_model_dump():
    dump = {"topics": [{"topic": 1, "n_assigned": 10, "top_words": [["a", 6], ["b", 2]]}]}
    assert baselines_from_model(dump) == {1: [("a", 0.6), ("b", 0.2)]}
