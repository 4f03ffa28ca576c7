"""Chinese-restaurant-process corpora with planted bigrams, and the benchmark grid."""

from __future__ import annotations

import csv
import io
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .discovery import METHODS, discover


@dataclass(frozen=True)
class SimConfig:
    crp_alpha: float = 1000.0
    beta_bigram: float = 0.1
    n_tokens: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.crp_alpha <= 0:
            raise ValueError("crp_alpha must be positive")
        if not 0 <= self.beta_bigram <= 1:
            raise ValueError("beta_bigram must lie in [0, 1]")
        if self.n_tokens < 1:
            raise ValueError("n_tokens must be positive")


@dataclass
class SimTruth:
    stream: np.ndarray                  # word ids; bigram draws appear as two tokens
    vocab_size: int
    true_bigrams: dict                  # (u, v) -> occurrences of the pattern in the stream
    n_types: int = 0
    type_draws: list = field(default_factory=list, repr=False)

    def words(self) -> list:
        return [f"w{i}" for i in self.stream.tolist()]

    def pair_count(self, pair) -> int:
        return pattern_counts(self.stream).get(tuple(pair), 0)


def pattern_counts(stream: np.ndarray) -> Counter:
    return Counter(zip(stream[:-1].tolist(), stream[1:].tolist()))


def simulate_corpus(config: SimConfig) -> SimTruth:
    """Sequential CRP draws; a new type is a bigram of two distinct existing
    singleton types with probability ``beta_bigram``.

    The final bigram draw is cut when it would overrun ``n_tokens``.
    """
    rng = np.random.default_rng(config.seed)
    alpha, beta = config.crp_alpha, config.beta_bigram
    types = []          # tuple of word ids per type
    singletons = []     # type indices of singleton types
    history = []        # one entry per draw, so uniform picks are count-proportional
    out = []
    n_words = 0
    bigram_types = set()
    while len(out) < config.n_tokens:
        n = len(history)
        if rng.random() * (alpha + n) < alpha:
            if beta > 0 and len(singletons) >= 2 and rng.random() < beta:
                i, j = rng.choice(len(singletons), size=2, replace=False)
                t = (types[singletons[i]][0], types[singletons[j]][0])
                bigram_types.add(t)
            else:
                t = (n_words,)
                n_words += 1
                singletons.append(len(types))
            k = len(types)
            types.append(t)
        else:
            k = history[int(rng.integers(n))]
        history.append(k)
        out.extend(types[k])
    stream = np.asarray(out[:config.n_tokens], dtype=np.int64)
    pc = pattern_counts(stream)
    truth = {b: pc.get(b, 0) for b in sorted(bigram_types)}
    return SimTruth(stream, n_words, truth, len(types), history)


def weighted_precision_recall(found: Iterable, truth: SimTruth):
    """Frequency-weighted precision and recall; each bigram weighs its stream count."""
    found = set(map(tuple, found))
    pc = pattern_counts(truth.stream)
    true = set(truth.true_bigrams)
    hit = sum(pc.get(b, 0) for b in found & true)
    found_mass = sum(pc.get(b, 0) for b in found)
    true_mass = sum(pc.get(b, 0) for b in true)
    precision = hit / found_mass if found_mass else 1.0
    recall = hit / true_mass if true_mass else (1.0 if not found else 0.0)
    return precision, recall


def f_measure(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


# -- benchmark ---------------------------------------------------------------------

GRID_COLUMNS = ("method", "size", "threshold", "replication", "precision", "recall", "f")


@dataclass(frozen=True)
class BenchConfig:
    methods: tuple = METHODS
    sizes: tuple = (1000, 10000)
    thresholds: tuple = (0.05, 0.01, 0.005)
    replications: int = 5
    seed: int = 0
    M: int = 1000
    crp_alpha: float = 1000.0
    beta_bigram: float = 0.1
    # every observed pair is a candidate, as in the raw classical tests
    min_count: int = 1
    strict: bool = True


def _cell_seeds(seed, sizes, replications):
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(len(sizes) * replications)
    out = {}
    for i, size in enumerate(sizes):
        for r in range(replications):
            sim, perm = children[i * replications + r].generate_state(2)
            out[(size, r)] = (int(sim), int(perm))
    return out


def run_cell(cfg: BenchConfig, size: int, rep: int, sim_seed: int, perm_seed: int):
    truth = simulate_corpus(SimConfig(cfg.crp_alpha, cfg.beta_bigram, size, sim_seed))
    rows = []
    for method in cfg.methods:
        found = discover(method, truth.stream, truth.vocab_size, cfg.thresholds,
                         cfg.min_count, cfg.M, perm_seed, cfg.strict)
        for thr in cfg.thresholds:
            p, r = weighted_precision_recall(found[thr], truth)
            rows.append({"method": method, "size": size, "threshold": thr, "replication": rep,
                         "precision": p, "recall": r, "f": f_measure(p, r)})
    return rows


def run_benchmark(cfg: BenchConfig, jobs: int = 1) -> list:
    """Rows of the (method, size, threshold, replication) grid."""
    for m in cfg.methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; expected one of {', '.join(METHODS)}")
    seeds = _cell_seeds(cfg.seed, cfg.sizes, cfg.replications)
    cells = [(cfg, size, r, *seeds[(size, r)]) for size in cfg.sizes for r in range(cfg.replications)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            parts = list(ex.map(run_cell, *zip(*cells)))
    else:
        parts = [run_cell(*c) for c in cells]
    rows = [row for part in parts for row in part]
    order = {m: i for i, m in enumerate(cfg.methods)}
    rows.sort(key=lambda d: (order[d["method"]], d["size"], -d["threshold"], d["replication"]))
    return rows


def aggregate(rows: Sequence[dict]) -> list:
    """Mean precision, recall and F per (method, size, threshold)."""
    acc = {}
    for d in rows:
        acc.setdefault((d["method"], d["size"], d["threshold"]), []).append(d)
    out = []
    for (m, s, t), ds in acc.items():
        out.append({"method": m, "size": s, "threshold": t, "replications": len(ds),
                    "precision": float(np.mean([d["precision"] for d in ds])),
                    "recall": float(np.mean([d["recall"] for d in ds])),
                    "f": float(np.mean([d["f"] for d in ds]))})
    return out


def grid_csv(rows: Sequence[dict], columns=GRID_COLUMNS, header_comment=None) -> str:
    buf = io.StringIO()
    if header_comment:
        for line in header_comment.splitlines():
            buf.write(f"# {line}\n")
    w = csv.DictWriter(buf, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for d in rows:
        w.writerow({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in d.items()})
    return buf.getvalue()


# -- topical corpora with planted phrases -----------------------------------------------


@dataclass(frozen=True)
class PlantedConfig:
    n_docs: int = 500
    doc_len: int = 100
    K: int = 5
    words_per_topic: int = 400
    n_stopwords: int = 20
    doc_alpha: float = 0.1
    stop_rate: float = 0.3
    phrase_rate: float = 0.1
    seed: int = 0


def planted_phrase_corpus(cfg: PlantedConfig):
    """Topical documents in which each topic emits three planted phrases.

    Topic k owns equally likely words ``t{k}w{j}`` and the phrases
    ``t{k}w0 t{k}w1``, ``t{k}w2 t{k}w3 t{k}w4`` and ``t{k}w5 of t{k}w6``; stop
    words ``s{j}`` (and ``of``) carry no topic. Returns the raw documents,
    the planted phrases per topic and the stop-word list.
    """
    rng = np.random.default_rng(cfg.seed)
    K, W = cfg.K, cfg.words_per_topic
    words = [[f"t{k}w{j}" for j in range(W)] for k in range(K)]
    stops = [f"s{j}" for j in range(cfg.n_stopwords)] + ["of"]
    phrases = [[(w[0], w[1]), (w[2], w[3], w[4]), (w[5], "of", w[6])] for w in words]
    docs = []
    for _ in range(cfg.n_docs):
        theta = rng.dirichlet(np.full(K, cfg.doc_alpha))
        out = []
        while len(out) < cfg.doc_len:
            if rng.random() < cfg.stop_rate:
                out.append(stops[rng.integers(len(stops))])
                continue
            k = rng.choice(K, p=theta)
            if rng.random() < cfg.phrase_rate:
                out.extend(phrases[k][rng.integers(3)])
            else:
                out.append(words[k][rng.integers(W)])
        docs.append(" ".join(out))
    return docs, phrases, stops


def planted_trigram_stream(n_filler: int = 1000, n_occurrences: int = 30, n_types: int = 100, seed: int = 0):
    """Uniform filler words ``f{j}`` with the trigram ``a b c`` inserted at random gaps.

    Returns the words and an anchor mask flagging only ``a``.
    """
    rng = np.random.default_rng(seed)
    filler = [f"f{j}" for j in rng.integers(n_types, size=n_filler)]
    gaps = np.sort(rng.choice(n_filler + 1, size=n_occurrences, replace=False))[::-1]
    words = list(filler)
    for g in gaps.tolist():
        words[g:g] = ["a", "b", "c"]
    return words, [w == "a" for w in words]
