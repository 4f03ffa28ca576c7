"""Recursive phrase growth around topical seed words, and the merged topic lists."""

from __future__ import annotations

import json
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .backoff import History, StreamView
from .corpus import AnnotatedToken, CodedStream, extract_topic_stream
from .significance import NothingToTest, PermutationConfig, UnitShuffler, max_lr_test


@dataclass(frozen=True)
class GrowthConfig:
    p_threshold: float = 0.01
    permutations: int = 100
    max_phrase_len: int = 5
    min_count: int = 2
    seed: int = 0
    top_words: int = 30
    strict: bool = True

    def __post_init__(self):
        if not 0 < self.p_threshold < 1:
            raise ValueError("p_threshold must lie in (0, 1)")
        if self.permutations < 1 or self.max_phrase_len < 1 or self.min_count < 1 or self.top_words < 1:
            raise ValueError("permutations, max_phrase_len, min_count and top_words must be positive")


@dataclass(frozen=True)
class ExpansionTest:
    direction: str          # "right" or "left"
    history: tuple          # phrase words before the expansion
    candidate: str
    lr: float
    p_value: float


@dataclass(frozen=True)
class Phrase:
    words: tuple            # word ids, left to right
    seed: int               # index of the anchored seed word
    chain: tuple = ()       # ExpansionTest records that produced it

    @property
    def key(self):
        return (self.words, self.seed)


@dataclass
class GrowthResult:
    topic: int
    phrases: List[Phrase]
    stream: CodedStream = field(repr=False)
    tests: List[ExpansionTest] = field(default_factory=list, repr=False)

    def ngrams(self) -> Dict[tuple, Phrase]:
        out = {}
        for ph in self.phrases:
            out.setdefault(self.stream.decode(ph.words), ph)
        return out


def seed_words(stream: CodedStream, top: int) -> list:
    """Most frequent anchored words, ties by surface form."""
    c = Counter(stream.ids[stream.anchor].tolist())
    return [w for w, _ in sorted(c.items(), key=lambda kv: (-kv[1], stream.vocab[kv[0]]))[:top]]


def _test_seed(base, topic, seed_word, counter) -> int:
    return np.random.SeedSequence([base, topic, seed_word, counter]).generate_state(1)[0].item()


class _SeedGrower:
    """Phrase tree of one seed word; one model per reading direction."""

    def __init__(self, fwd: StreamView, rev: StreamView, w: int, topic: int, config: GrowthConfig, vocab):
        self.fwd, self.rev, self.w, self.cfg, self.vocab = fwd, rev, w, config, vocab
        self.topic = topic
        self.endowed = {"right": {}, "left": {}}
        root = Phrase((w,), 0)
        self.phrases = {root.key: root}
        self.fixed = {"right": set(), "left": set()}
        self.tests: List[ExpansionTest] = []
        self.n_tests = 0

    def _shuffler(self):
        frozen = [(p.words, p.seed) for p in self.phrases.values() if len(p.words) > 1]
        return UnitShuffler(self.fwd.ids, self.fwd.anchor, frozen)

    def _open(self, direction):
        return sorted(k for k, p in self.phrases.items()
                      if k not in self.fixed[direction] and len(p.words) < self.cfg.max_phrase_len)

    def _history(self, ph: Phrase, direction) -> History:
        if direction == "right":
            return History(ph.words, ph.seed)
        return History(ph.words[::-1], len(ph.words) - 1 - ph.seed)

    def grow_direction(self, direction) -> bool:
        grew = False
        view = self.fwd if direction == "right" else self.rev
        endowed = self.endowed[direction]
        while True:
            todo = self._open(direction)
            if not todo:
                return grew
            ph = self.phrases[todo[0]]
            h = self._history(ph, direction)
            pc = PermutationConfig(self.cfg.permutations, self.cfg.p_threshold,
                                   _test_seed(self.cfg.seed, self.topic, self.w, self.n_tests),
                                   self.cfg.min_count, self.cfg.strict)
            self.n_tests += 1
            try:
                verdict = max_lr_test(view, self._shuffler(), endowed, h, pc, reverse=direction == "left")
            except NothingToTest:
                self.fixed[direction].add(ph.key)
                continue
            if not verdict.significant:
                self.fixed[direction].add(ph.key)
                continue
            v = verdict.candidate
            rec = ExpansionTest(direction, tuple(self.vocab[i] for i in ph.words), self.vocab[v],
                                float(verdict.statistic), float(verdict.p_value))
            self.tests.append(rec)
            endowed[h] = endowed.get(h, frozenset()) | {v}
            if direction == "right":
                new = Phrase(ph.words + (v,), ph.seed, ph.chain + (rec,))
            else:
                new = Phrase((v,) + ph.words, ph.seed + 1, ph.chain + (rec,))
            self.phrases.setdefault(new.key, new)
            grew = True

    def run(self):
        while True:
            a = self.grow_direction("right")
            b = self.grow_direction("left")
            if not (a or b):
                break
        return list(self.phrases.values())


def grow_phrases(annotated: Sequence[AnnotatedToken], topic: int, config: GrowthConfig = GrowthConfig(),
                 seeds=None, stream: Optional[CodedStream] = None) -> GrowthResult:
    """Grow significant phrases around each anchored seed word of ``topic``.

    Right growth reads the forward stream; left growth reads the reversed
    stream so that preceding words become continuations. Both stop when the
    best candidate fails the permutation test, none meets ``min_count``, or
    the phrase reaches ``max_phrase_len``.
    """
    stream = stream if stream is not None else extract_topic_stream(annotated, topic)
    if not stream.anchor.any():
        return GrowthResult(topic, [], stream)
    fwd = StreamView.of(stream)
    r = stream.reversed()
    rev = StreamView(r.ids, r.anchor, fwd.vocab_size, (fwd.N, fwd.counts, fwd.T))
    if seeds is None:
        seeds = seed_words(stream, config.top_words)
    else:
        seeds = [stream.index[s] if isinstance(s, str) else s for s in seeds]
    phrases, tests = [], []
    for w in seeds:
        g = _SeedGrower(fwd, rev, w, topic, config, stream.vocab)
        phrases.extend(g.run())
        tests.extend(g.tests)
    return GrowthResult(topic, phrases, stream, tests)


# -- merged lists ----------------------------------------------------------------------


def phrase_occurrences(stream: CodedStream, phrase: Phrase) -> np.ndarray:
    """Start positions of anchored occurrences."""
    ids, L = stream.ids, len(phrase.words)
    n = len(ids)
    if n < L:
        return np.zeros(0, dtype=np.int64)
    ok = stream.anchor[phrase.seed:n - L + 1 + phrase.seed].copy()
    for j, w in enumerate(phrase.words):
        ok &= ids[j:n - L + 1 + j] == w
    return np.flatnonzero(ok)


def standalone_counts(stream: CodedStream, phrases: Sequence[Phrase]) -> Dict[tuple, int]:
    """Occurrences not covered by a longer phrase; greedy longest first, then leftmost."""
    spans = set()
    for ph in phrases:
        for s in phrase_occurrences(stream, ph).tolist():
            spans.add((-len(ph.words), s, ph.words))
    taken = np.zeros(len(stream.ids), dtype=bool)
    counts = Counter({ph.words: 0 for ph in phrases})
    for negL, s, words in sorted(spans):
        e = s - negL
        if not taken[s:e].any():
            taken[s:e] = True
            counts[words] += 1
    return dict(counts)


@dataclass(frozen=True)
class ReportEntry:
    ngram: tuple
    mass: float
    count: int
    p_chain: tuple = ()


@dataclass
class TopicPhraseReport:
    topic: int
    entries: List[ReportEntry]
    provenance: Dict[str, list] = field(default_factory=dict)
    diagnostic: Optional[str] = None

    def to_json(self) -> dict:
        out = {"topic": self.topic,
               "entries": [{"ngram": list(e.ngram), "mass": e.mass, "count": e.count,
                            "p_chain": list(e.p_chain)} for e in self.entries]}
        if self.provenance:
            out["provenance"] = self.provenance
        if self.diagnostic:
            out["diagnostic"] = self.diagnostic
        return out

    @classmethod
    def from_json(cls, d: dict) -> "TopicPhraseReport":
        entries = [ReportEntry(tuple(e["ngram"]), float(e["mass"]), int(e["count"]), tuple(e.get("p_chain", ())))
                   for e in d["entries"]]
        return cls(int(d["topic"]), entries, d.get("provenance", {}), d.get("diagnostic"))


def _contains(long: tuple, short: tuple) -> bool:
    L = len(short)
    return any(long[i:i + L] == short for i in range(len(long) - L + 1))


def merge_ngram_masses(counts: Dict[tuple, int], p_chains: Optional[Dict[tuple, tuple]] = None) -> List[ReportEntry]:
    """Fold a shorter n-gram into the heaviest longer n-gram containing it when
    its standalone mass is the smaller of the two; otherwise keep both.

    Masses are standalone counts over their total, so merging only moves mass.
    """
    p_chains = p_chains or {}
    total = sum(counts.values())
    if total == 0:
        return []
    cnt = {g: c for g, c in counts.items() if c > 0}
    alive = set(cnt)
    for g in sorted(cnt, key=lambda g: (len(g), g)):
        longer = [x for x in alive if len(x) > len(g) and _contains(x, g)]
        if not longer:
            continue
        top = max(sorted(longer), key=cnt.__getitem__)
        if cnt[g] < cnt[top]:
            cnt[top] += cnt[g]
            alive.discard(g)
    entries = [ReportEntry(g, cnt[g] / total, cnt[g], tuple(p_chains.get(g, ()))) for g in alive]
    entries.sort(key=lambda e: (-e.mass, e.ngram))
    return entries


def topic_report(result: GrowthResult) -> TopicPhraseReport:
    st = result.stream
    by_ngram = result.ngrams()
    counts_w = standalone_counts(st, result.phrases)
    counts = Counter()
    for words, c in counts_w.items():
        counts[st.decode(words)] += c
    chains = {g: tuple(t.p_value for t in ph.chain) for g, ph in by_ngram.items()}
    entries = merge_ngram_masses(dict(counts), chains)
    prov = {" ".join(g): [asdict(t) for t in by_ngram[g].chain] for g in sorted(by_ngram) if by_ngram[g].chain}
    return TopicPhraseReport(result.topic, entries, prov)


def _topic_job(annotated, topic, config):
    try:
        return topic_report(grow_phrases(annotated, topic, config))
    except Exception as e:  # noqa: BLE001 - one bad topic must not sink the rest
        return TopicPhraseReport(topic, [], diagnostic=f"{type(e).__name__}: {e}")


def build_turbo_topics(annotated: Sequence[AnnotatedToken], K: int, config: GrowthConfig = GrowthConfig(),
                       jobs: int = 1) -> List[TopicPhraseReport]:
    """Grow and merge phrases for topics 0..K-1; topic jobs run in parallel with ``jobs`` > 1."""
    annotated = list(annotated)
    if jobs > 1 and K > 1:
        with ProcessPoolExecutor(jobs) as ex:
            return list(ex.map(_topic_job, [annotated] * K, range(K), [config] * K))
    return [_topic_job(annotated, k, config) for k in range(K)]


def dumps_reports(reports: Sequence[TopicPhraseReport], manifest: Optional[dict] = None) -> str:
    doc = {"reports": [r.to_json() for r in reports]}
    if manifest is not None:
        doc["manifest"] = manifest
    return json.dumps(doc, indent=1, sort_keys=True, ensure_ascii=False)


def loads_reports(text: str):
    doc = json.loads(text)
    return [TopicPhraseReport.from_json(d) for d in doc["reports"]], doc.get("manifest")
