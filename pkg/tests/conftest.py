import numpy as np
import pytest

from turbo_topics.backoff import History
from turbo_topics.corpus import CodedStream


def random_stream(rng, max_len=500, max_vocab=8, anchor_rate=0.4, max_docs=3):
    V = int(rng.integers(2, max_vocab + 1))
    n_docs = int(rng.integers(1, max_docs + 1))
    total = int(rng.integers(30, max_len + 1))
    cuts = np.sort(rng.choice(np.arange(1, total), size=n_docs - 1, replace=False)) if n_docs > 1 else []
    sizes = np.diff(np.concatenate([[0], cuts, [total]])).astype(int)
    docs = [[f"x{i}" for i in rng.integers(0, V, size=s)] for s in sizes]
    anchors = [list(rng.random(len(d)) < anchor_rate) for d in docs]
    return CodedStream.from_documents(docs, anchors)


def random_endowed(rng, stream, max_hist=4, max_set=3):
    """Random endowed structure over the stream's vocabulary, anchored or not, nested or flat."""
    V = len(stream.vocab)
    out = {}
    for _ in range(int(rng.integers(1, max_hist + 1))):
        L = int(rng.integers(1, 4))
        words = tuple(int(w) for w in rng.integers(0, V, size=L))
        seed = int(rng.integers(0, L)) if rng.random() < 0.5 else None
        h = History(words, seed)
        k = int(rng.integers(1, min(max_set, V) + 1))
        out[h] = out.get(h, frozenset()) | frozenset(int(v) for v in rng.choice(V, size=k, replace=False))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
