"""Tokens, vocabularies and the annotated token stream.

The annotated stream is stored as JSON lines, one token per line::

    {"w": "phase", "d": 0, "p": 0, "z": 11}

``z`` is null for stop words and terms pruned from the topic-model vocabulary.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional, Sequence

import numpy as np

SENTINEL = -1


class CorpusError(ValueError):
    pass


class StreamFormatError(CorpusError):
    def __init__(self, lineno: int, reason: str):
        super().__init__(f"line {lineno}: {reason}")
        self.lineno = lineno


@dataclass(frozen=True)
class Token:
    surface: str
    doc_id: int
    position: int

    def __post_init__(self):
        if not self.surface or any(c.isspace() for c in self.surface):
            raise CorpusError(f"bad surface form {self.surface!r}")
        if self.doc_id < 0 or self.position < 0:
            raise CorpusError("doc_id and position must be non-negative")


@dataclass(frozen=True)
class AnnotatedToken:
    token: Token
    topic: Optional[int] = None

    @property
    def surface(self) -> str:
        return self.token.surface


@dataclass(frozen=True)
class TokenizerConfig:
    lowercase: bool = True
    # letters and digits; underscores and punctuation split words
    pattern: str = r"[^\W_]+"


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple
    stopwords: frozenset = frozenset()
    min_doc_freq: int = 1

    def __post_init__(self):
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.terms)})

    def __len__(self):
        return len(self.terms)

    def __contains__(self, word):
        return word in self._index

    def index(self, word: str) -> int:
        return self._index[word]


def tokenize_corpus(raw_documents: Sequence[str], config: TokenizerConfig = TokenizerConfig()):
    """Split documents into lower-cased alphanumeric tokens.

    Positions restart at zero in each document. Raises ``CorpusError`` when
    the corpus has no documents.
    """
    if len(raw_documents) == 0:
        raise CorpusError("empty corpus")
    rx = re.compile(config.pattern)
    tokens = []
    for d, text in enumerate(raw_documents):
        if config.lowercase:
            text = text.lower()
        for p, m in enumerate(rx.finditer(text)):
            tokens.append(Token(m.group(0), d, p))
    return tokens


def read_lines(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh]


def read_stopwords(path) -> frozenset:
    return frozenset(w.strip().lower() for w in read_lines(path) if w.strip())


def build_vocabulary(tokens: Iterable[Token], stopword_list=frozenset(), min_doc_freq: int = 20) -> Vocabulary:
    """Topic-model vocabulary: non-stop words seen in at least ``min_doc_freq`` documents.

    The token stream itself is left alone; filtered words still take part in
    phrase counting downstream.
    """
    if min_doc_freq < 1:
        raise CorpusError("min_doc_freq must be >= 1")
    stop = frozenset(stopword_list)
    docs_with = {}
    order = []
    for t in tokens:
        s = docs_with.get(t.surface)
        if s is None:
            s = docs_with[t.surface] = set()
            order.append(t.surface)
        s.add(t.doc_id)
    terms = tuple(w for w in order if w not in stop and len(docs_with[w]) >= min_doc_freq)
    if not terms:
        raise CorpusError("empty vocabulary")
    return Vocabulary(terms, stop, min_doc_freq)


# -- JSON-lines stream -------------------------------------------------------


def write_stream(stream: Iterable[AnnotatedToken], fh: IO[str], manifest: Optional[dict] = None) -> None:
    """One JSON object per token; an optional ``{"manifest": ...}`` header line comes first."""
    if manifest is not None:
        fh.write(json.dumps({"manifest": manifest}, sort_keys=True, separators=(",", ":")))
        fh.write("\n")
    for a in stream:
        t = a.token
        rec = {"w": t.surface, "d": t.doc_id, "p": t.position, "z": a.topic}
        fh.write(json.dumps(rec, ensure_ascii=False, separators=(",", ":")))
        fh.write("\n")


def read_stream(fh: IO[str], with_manifest: bool = False):
    out = []
    manifest = None
    for lineno, line in enumerate(fh, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise StreamFormatError(lineno, f"invalid JSON ({e.msg})") from None
        if lineno == 1 and isinstance(rec, dict) and set(rec) == {"manifest"}:
            manifest = rec["manifest"]
            continue
        if not isinstance(rec, dict) or set(rec) != {"w", "d", "p", "z"}:
            raise StreamFormatError(lineno, 'expected keys "w", "d", "p", "z"')
        w, d, p, z = rec["w"], rec["d"], rec["p"], rec["z"]
        if not isinstance(w, str) or not _is_int(d) or not _is_int(p) or not (z is None or _is_int(z)):
            raise StreamFormatError(lineno, "field of wrong type")
        if z is not None and z < 0:
            raise StreamFormatError(lineno, "negative topic")
        try:
            out.append(AnnotatedToken(Token(w, d, p), z))
        except CorpusError as e:
            raise StreamFormatError(lineno, str(e)) from None
    return (out, manifest) if with_manifest else out


def save_stream(stream, path, manifest: Optional[dict] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_stream(stream, fh, manifest)


def load_stream(path, with_manifest: bool = False):
    with open(path, encoding="utf-8") as fh:
        return read_stream(fh, with_manifest)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


# -- coded streams -----------------------------------------------------------


@dataclass
class CodedStream:
    """Integer-coded token stream with document sentinels and anchor flags.

    ``ids`` holds vocabulary indices, with ``SENTINEL`` between documents.
    Sentinels never match a word, so no n-gram crosses a document boundary.
    """

    ids: np.ndarray
    anchor: np.ndarray
    vocab: list
    index: dict = field(repr=False, default=None)

    def __post_init__(self):
        if self.index is None:
            self.index = {w: i for i, w in enumerate(self.vocab)}

    @classmethod
    def from_documents(cls, docs: Sequence[Sequence[str]], anchors=None, vocab=None):
        vocab = list(vocab) if vocab is not None else []
        index = {w: i for i, w in enumerate(vocab)}
        ids, anc = [], []
        for d, words in enumerate(docs):
            if d:
                ids.append(SENTINEL)
                anc.append(False)
            for j, w in enumerate(words):
                i = index.get(w)
                if i is None:
                    i = index[w] = len(vocab)
                    vocab.append(w)
                ids.append(i)
                anc.append(bool(anchors[d][j]) if anchors is not None else False)
        return cls(np.asarray(ids, dtype=np.int64), np.asarray(anc, dtype=bool), vocab, index)

    @classmethod
    def from_words(cls, words: Sequence[str], anchors=None):
        return cls.from_documents([list(words)], None if anchors is None else [list(anchors)])

    @property
    def n_tokens(self) -> int:
        return int(np.count_nonzero(self.ids >= 0))

    def __len__(self):
        return len(self.ids)

    def encode(self, words: Iterable[str]) -> tuple:
        return tuple(self.index[w] for w in words)

    def decode(self, ids: Iterable[int]) -> tuple:
        return tuple(self.vocab[i] for i in ids)

    def word_counts(self) -> np.ndarray:
        return np.bincount(self.ids[self.ids >= 0], minlength=len(self.vocab))

    def reversed(self) -> "CodedStream":
        return CodedStream(self.ids[::-1].copy(), self.anchor[::-1].copy(), self.vocab, self.index)

    def documents(self) -> list:
        """Word lists per document (sentinels split documents)."""
        out, cur = [], []
        for i in self.ids:
            if i == SENTINEL:
                out.append(cur)
                cur = []
            else:
                cur.append(self.vocab[i])
        out.append(cur)
        return out


def extract_topic_stream(stream: Sequence[AnnotatedToken], topic: int) -> CodedStream:
    """Full raw stream with anchors on tokens labelled ``topic``.

    Tokens are grouped by document id (in order of first appearance) and kept
    in position order; sentinels separate documents.
    """
    docs, anchors, order = {}, {}, []
    for a in stream:
        d = a.token.doc_id
        if d not in docs:
            docs[d], anchors[d] = [], []
            order.append(d)
        docs[d].append((a.token.position, a.token.surface, a.topic == topic))
    words, flags = [], []
    for d in order:
        toks = sorted(docs[d])
        words.append([t[1] for t in toks])
        flags.append([t[2] for t in toks])
    return CodedStream.from_documents(words, flags)


def group_documents(tokens: Iterable[Token]) -> list:
    """Surface lists per document id, ordered by id then position."""
    by_doc = {}
    for t in tokens:
        by_doc.setdefault(t.doc_id, []).append((t.position, t.surface))
    return [[s for _, s in sorted(by_doc[d])] for d in sorted(by_doc)]


def topic_word_counts(stream: Sequence[AnnotatedToken], topic: int) -> Counter:
    return Counter(a.surface for a in stream if a.topic == topic)
