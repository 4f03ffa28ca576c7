"""Significance tests for expansions and bigrams.

The recursive permutation test shuffles units of the stream: currently
modeled phrases stay glued together, everything else moves freely across the
whole corpus. The null statistic is the maximum LR over all admissible
continuations, computed exactly as for the observed data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .backoff import (BackoffModel, History, StreamView, best_expansion, xlogx)
from .corpus import CodedStream


class NothingToTest(Exception):
    """No continuation meets the minimum count."""


@dataclass(frozen=True)
class PermutationConfig:
    M: int = 1000
    p_threshold: float = 0.01
    seed: int = 0
    min_count: int = 2
    # count permuted scores strictly greater than the observed one
    strict: bool = True

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if not 0 < self.p_threshold < 1:
            raise ValueError("p_threshold must lie in (0, 1)")


@dataclass(frozen=True)
class TestVerdict:
    statistic: float
    p_value: float
    significant: bool
    candidate: Optional[int] = None
    n_hv: int = 0

    __test__ = False


def verdict(statistic, p_value, threshold, **kw) -> TestVerdict:
    return TestVerdict(statistic, p_value, p_value < threshold, **kw)


def chisq1_survival(x: float) -> float:
    """Upper tail of the chi-square distribution with one degree of freedom."""
    if x < 0:
        raise ValueError("chi-square statistic must be non-negative")
    return math.erfc(math.sqrt(x / 2.0))


# -- contingency tables --------------------------------------------------------


@dataclass(frozen=True)
class ContingencyTable:
    """Adjacent-pair counts: rows split on first word == u, columns on second == v."""

    n11: int
    n12: int
    n21: int
    n22: int

    def __post_init__(self):
        if min(self.n11, self.n12, self.n21, self.n22) < 0:
            raise ValueError("negative cell")

    @property
    def total(self) -> int:
        return self.n11 + self.n12 + self.n21 + self.n22

    @classmethod
    def from_stream(cls, stream: CodedStream, u: int, v: int, include_initial=False):
        """Pairs within documents. With ``include_initial`` every token is a
        row, document-initial ones counting as "not after u"."""
        ids = stream.ids
        first, second = ids[:-1], ids[1:]
        ok = (first >= 0) & (second >= 0)
        a = first[ok] == u
        b = second[ok] == v
        n11 = int(np.count_nonzero(a & b))
        n12 = int(np.count_nonzero(a & ~b))
        n21 = int(np.count_nonzero(~a & b))
        n22 = int(np.count_nonzero(~a & ~b))
        if include_initial:
            starts = np.ones(len(ids), dtype=bool)
            starts[1:] = ids[:-1] < 0
            init = ids[starts & (ids >= 0)]
            n21 += int(np.count_nonzero(init == v))
            n22 += int(np.count_nonzero(init != v))
        return cls(n11, n12, n21, n22)


def pearson_statistic(n11, n12, n21, n22):
    """Vectorized 2x2 Pearson statistic; zero marginals give 0."""
    n11, n12, n21, n22 = (np.asarray(x, dtype=float) for x in (n11, n12, n21, n22))
    N = n11 + n12 + n21 + n22
    den = (n11 + n12) * (n21 + n22) * (n11 + n21) * (n12 + n22)
    num = N * (n11 * n22 - n12 * n21) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


def g2_statistic(n11, n12, n21, n22):
    """Vectorized 2x2 likelihood-ratio statistic, 2 Σ O log(O/E)."""
    n11, n12, n21, n22 = (np.asarray(x, dtype=float) for x in (n11, n12, n21, n22))
    N = n11 + n12 + n21 + n22
    val = (xlogx(np.atleast_1d(n11)) + xlogx(np.atleast_1d(n12)) + xlogx(np.atleast_1d(n21))
           + xlogx(np.atleast_1d(n22))
           - xlogx(np.atleast_1d(n11 + n12)) - xlogx(np.atleast_1d(n21 + n22))
           - xlogx(np.atleast_1d(n11 + n21)) - xlogx(np.atleast_1d(n12 + n22))
           + xlogx(np.atleast_1d(N)))
    out = np.maximum(2.0 * val, 0.0)
    return out if np.ndim(n11) else float(out[0])


def chi_square_test(table: ContingencyTable, threshold: float = 0.05) -> TestVerdict:
    if table.total < 1:
        raise ValueError("empty table")
    stat = float(pearson_statistic(table.n11, table.n12, table.n21, table.n22))
    p = chisq1_survival(stat) if stat > 0 else 1.0
    return verdict(stat, p, threshold)


def dunning_lr_test(table: ContingencyTable, threshold: float = 0.05) -> TestVerdict:
    if table.total < 1:
        raise ValueError("empty table")
    stat = g2_statistic(table.n11, table.n12, table.n21, table.n22)
    p = chisq1_survival(stat) if stat > 0 else 1.0
    return verdict(stat, p, threshold)


def backoff_lr_asymptotic_test(lr: float, threshold: float = 0.05) -> TestVerdict:
    """Twice the expansion LR against chi-square(1); one parameter is added."""
    lr = getattr(lr, "lr", lr)
    stat = 2.0 * lr
    p = 1.0 if lr <= 0 else chisq1_survival(stat)
    return verdict(stat, p, threshold)


# -- permutation machinery -------------------------------------------------------


def phrase_links(ids: np.ndarray, anchor: np.ndarray, phrases) -> np.ndarray:
    """links[i] is True when tokens i and i+1 lie inside one modeled phrase occurrence."""
    n = len(ids)
    links = np.zeros(max(n - 1, 0), dtype=bool)
    for words, seed in phrases:
        L = len(words)
        if L < 2 or n < L:
            continue
        ok = np.ones(n - L + 1, dtype=bool)
        for j, w in enumerate(words):
            ok &= ids[j:n - L + 1 + j] == w
        if seed is not None:
            ok &= anchor[seed:n - L + 1 + seed]
        for s in np.flatnonzero(ok):
            links[s:s + L - 1] = True
    return links


class UnitShuffler:
    """Uniform shuffles of a stream whose modeled phrases are frozen into units.

    Sentinels are dropped; units move within and across documents and the
    result is a single flat stream.
    """

    def __init__(self, ids: np.ndarray, anchor: np.ndarray, phrases=()):
        links = phrase_links(ids, anchor, list(phrases))
        real = ids >= 0
        self.ids = ids[real]
        self.anchor = anchor[real]
        pos = np.flatnonzero(real)
        # a link survives only between consecutive real tokens
        lk = links[pos[:-1]] & (np.diff(pos) == 1) if len(pos) > 1 else np.zeros(0, bool)
        starts = np.flatnonzero(np.concatenate([[True], ~lk])) if len(pos) else np.zeros(0, int)
        self.starts = starts
        self.lens = np.diff(np.append(starts, len(self.ids)))
        self.n_units = len(starts)
        self._unit_of = np.repeat(np.arange(self.n_units), self.lens)

    def permute(self, rng: np.random.Generator):
        return self.materialize(rng.permutation(self.n_units))

    def materialize(self, order: np.ndarray):
        if self.n_units == len(self.ids):
            return self.ids[order], self.anchor[order]
        starts, lens = self.starts[order], self.lens[order]
        offs = np.cumsum(lens) - lens
        idx = np.repeat(starts - offs, lens) + np.arange(len(self.ids))
        return self.ids[idx], self.anchor[idx]

    def windows(self, order: np.ndarray, centers: np.ndarray, radius: int):
        """Only the stretches of the permuted stream within ``radius`` of a
        centre token, sentinel-separated. Overlapping stretches are merged,
        so every permuted position appears at most once."""
        n = len(self.ids)
        lens = self.lens[order]
        pstart = np.cumsum(lens) - lens
        inv = np.empty(self.n_units, dtype=np.int64)
        inv[order] = np.arange(self.n_units)
        c = np.flatnonzero(centers)
        if not len(c):
            return np.zeros(0, dtype=self.ids.dtype), np.zeros(0, dtype=bool)
        u = self._unit_of[c]
        p = np.sort(pstart[inv[u]] + (c - self.starts[u]))
        lo = np.maximum(p - radius, 0)
        hi = np.minimum(p + radius, n - 1)
        # merge overlapping or touching ranges
        new_run = np.ones(len(p), dtype=bool)
        new_run[1:] = lo[1:] > np.maximum.accumulate(hi)[:-1] + 1
        a = lo[new_run]
        b = np.maximum.reduceat(hi, np.flatnonzero(new_run))
        seg_len = b - a + 1
        q = np.repeat(a - (np.cumsum(seg_len) - seg_len), seg_len) + np.arange(seg_len.sum())
        j = np.searchsorted(pstart, q, side="right") - 1
        src = self.starts[order[j]] + (q - pstart[j])
        # one sentinel slot after each segment but the last
        out_pos = np.arange(len(q)) + np.repeat(np.arange(len(a)), seg_len)
        ids = np.full(len(q) + len(a) - 1, -1, dtype=self.ids.dtype)
        anc = np.zeros(len(ids), dtype=bool)
        ids[out_pos] = self.ids[src]
        anc[out_pos] = self.anchor[src]
        return ids, anc

    def units(self):
        return [tuple(self.ids[s:s + L].tolist()) for s, L in zip(self.starts, self.lens)]


def endowed_phrases(endowed) -> list:
    return [(h.words + (v,), h.seed) for h, S in endowed.items() for v in sorted(S)]


def permute_stream(stream: CodedStream, phrases: Iterable = (), seed: int = 0) -> CodedStream:
    """One uniform shuffle of units; ``phrases`` are (word-ids, anchor index) pairs."""
    sh = UnitShuffler(stream.ids, stream.anchor, list(phrases))
    ids, anc = sh.permute(np.random.default_rng(seed))
    return CodedStream(ids, anc, stream.vocab, stream.index)


def replicate_rngs(seed: int, M: int):
    """Independent generators per replicate, so replicates can run anywhere."""
    for s in np.random.SeedSequence(seed).spawn(M):
        yield np.random.default_rng(s)


def exceed_count(observed: float, null: Sequence[float], strict=True) -> int:
    null = np.asarray(null, dtype=float)
    return int(np.count_nonzero(null > observed if strict else null >= observed))


def max_lr_test(view: StreamView, shuffler: UnitShuffler, endowed, h: History,
                config: PermutationConfig, candidates=None, reverse=False) -> TestVerdict:
    """Permutation p-value for the best continuation of ``h``.

    ``shuffler`` works on the forward stream; with ``reverse`` each permuted
    stream is read right to left (``view`` must then be the reversed stream).
    """
    obs = best_expansion(view, endowed, h, config.min_count, candidates)
    if obs is None:
        raise NothingToTest(h)
    lr, v, n_hv = obs
    hists = [k for k, S in endowed.items() if S] + [h]
    local = all(k.seed is not None for k in hists)
    if local:
        # every history contains an anchored word, so matches stay near those tokens
        centre_words = np.array(sorted({k.words[k.seed] for k in hists}))
        centers = shuffler.anchor & np.isin(shuffler.ids, centre_words)
        radius = max(len(k.words) for k in hists) + 1
    null = []
    for rng in replicate_rngs(config.seed, config.M):
        order = rng.permutation(shuffler.n_units)
        ids, anc = shuffler.windows(order, centers, radius) if local else shuffler.materialize(order)
        if reverse:
            ids, anc = ids[::-1], anc[::-1]
        b = best_expansion(view.with_arrays(ids, anc), endowed, h, config.min_count, candidates)
        null.append(b[0] if b is not None else -math.inf)
    p = exceed_count(lr, null, config.strict) / config.M
    return TestVerdict(lr, p, bool(lr > 0 and p < config.p_threshold), v, n_hv)


def permutation_test_max_lr(base, h: History, stream: CodedStream, config: PermutationConfig,
                            candidates=None) -> TestVerdict:
    """Recursive permutation test of the best expansion of ``h`` in ``base``.

    ``base`` is a fitted BackoffModel or a mapping of endowed sets. Its
    modeled phrases stay frozen while shuffling.
    """
    endowed = base.endowed if isinstance(base, BackoffModel) else base
    shuffler = UnitShuffler(stream.ids, stream.anchor, endowed_phrases(endowed))
    return max_lr_test(StreamView.of(stream), shuffler, endowed, h, config, candidates)


def multinomial_permutation_test(stream: CodedStream, u: int, v: int, config: PermutationConfig,
                                 include_initial=False) -> TestVerdict:
    """G² of the (u, v) table, referred to raw-token shuffles of the stream."""
    obs = ContingencyTable.from_stream(stream, u, v, include_initial)
    stat = g2_statistic(obs.n11, obs.n12, obs.n21, obs.n22)
    shuffler = UnitShuffler(stream.ids, stream.anchor)
    null = []
    for rng in replicate_rngs(config.seed, config.M):
        ids, anc = shuffler.permute(rng)
        t = ContingencyTable.from_stream(CodedStream(ids, anc, stream.vocab, stream.index), u, v, include_initial)
        null.append(g2_statistic(t.n11, t.n12, t.n21, t.n22))
    p = exceed_count(stat, null, config.strict) / config.M
    return verdict(stat, p, config.p_threshold, candidate=v, n_hv=obs.n11)
