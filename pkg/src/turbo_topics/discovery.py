"""Bigram discovery over a whole stream with the five compared tests.

Each method maps (stream, thresholds) to the set of accepted bigrams per
threshold. The back-off methods treat every word as a root with its own
sparse bigram model and grow S_u greedily; permutations are shared by all
roots of a round, which keeps the cost at M shuffles per round.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .backoff import xlogx
from .significance import UnitShuffler, g2_statistic, pearson_statistic, replicate_rngs

METHODS = ("chi_square", "dunning_lr", "backoff_lr_asymptotic",
           "multinomial_permutation", "backoff_permutation")


def chisq1_sf(x):
    return erfc(np.sqrt(np.maximum(x, 0.0) / 2.0))


@dataclass
class PairTable:
    """Adjacent pairs within documents, aggregated by (first, second)."""

    codes: np.ndarray
    first: np.ndarray
    second: np.ndarray
    count: np.ndarray
    row: np.ndarray       # pairs starting with w
    col: np.ndarray       # pairs ending with w
    n_pairs: int

    @classmethod
    def of(cls, ids: np.ndarray, V: int):
        a, b = ids[:-1], ids[1:]
        ok = (a >= 0) & (b >= 0)
        a, b = a[ok], b[ok]
        codes, count = np.unique(a * V + b, return_counts=True)
        return cls(codes, codes // V, codes % V, count,
                   np.bincount(a, minlength=V), np.bincount(b, minlength=V), int(ok.sum()))

    def lookup(self, codes: np.ndarray) -> np.ndarray:
        i = np.searchsorted(self.codes, codes)
        i = np.minimum(i, len(self.codes) - 1)
        hit = self.codes[i] == codes if len(self.codes) else np.zeros(len(codes), bool)
        return np.where(hit, self.count[i] if len(self.codes) else 0, 0)


def _positive(n11, row, col, total):
    return n11 * total > row * col


def asymptotic_pair_tests(ids, V, thresholds, min_count=2, statistic="chi_square"):
    """Independent tests of every positively associated pair seen min_count times."""
    t = PairTable.of(ids, V)
    sel = (t.count >= min_count)
    sel &= _positive(t.count, t.row[t.first], t.col[t.second], t.n_pairs)
    n11 = t.count[sel].astype(float)
    n12 = t.row[t.first[sel]] - n11
    n21 = t.col[t.second[sel]] - n11
    n22 = t.n_pairs - n11 - n12 - n21
    fn = pearson_statistic if statistic == "chi_square" else g2_statistic
    stat = np.atleast_1d(fn(n11, n12, n21, n22)) if len(n11) else np.zeros(0)
    p = chisq1_sf(stat)
    pairs = list(zip(t.first[sel].tolist(), t.second[sel].tolist()))
    return {thr: {pr for pr, pv in zip(pairs, p) if pv < thr} for thr in thresholds}, dict(zip(pairs, p.tolist()))


def multinomial_permutation_pairs(ids, V, thresholds, M=1000, seed=0, min_count=2, strict=True):
    """Per-pair G² with p-values from raw-token shuffles (no phrase freezing)."""
    t = PairTable.of(ids, V)
    sel = (t.count >= min_count) & _positive(t.count, t.row[t.first], t.col[t.second], t.n_pairs)
    codes = t.codes[sel]
    u, v = t.first[sel], t.second[sel]

    def stats(tab: PairTable, n11):
        n11 = n11.astype(float)
        n12 = tab.row[u] - n11
        n21 = tab.col[v] - n11
        return g2_statistic(n11, n12, n21, tab.n_pairs - n11 - n12 - n21), n11 * tab.n_pairs > tab.row[u] * tab.col[v]

    obs, _ = stats(t, t.count[sel])
    obs = np.atleast_1d(obs)
    exceed = np.zeros(len(codes), dtype=np.int64)
    shuffler = UnitShuffler(ids, np.zeros(len(ids), bool))
    if len(codes):
        for rng in replicate_rngs(seed, M):
            pids, _ = shuffler.permute(rng)
            tab = PairTable.of(pids, V)
            st, pos = stats(tab, tab.lookup(codes))
            st = np.where(pos, np.atleast_1d(st), 0.0)
            exceed += (st > obs) if strict else (st >= obs)
    p = exceed / M
    pairs = list(zip(u.tolist(), v.tolist()))
    return {thr: {pr for pr, pv in zip(pairs, p) if pv < thr} for thr in thresholds}, dict(zip(pairs, p.tolist()))


class RootModels:
    """Per-root sparse bigram models: root u with endowed set S_u, back-off to unigrams."""

    def __init__(self, ids, V, min_count=2):
        self.ids, self.V, self.min_count = ids, V, min_count
        self.counts = np.bincount(ids[ids >= 0], minlength=V)
        self.N = int(self.counts.sum())
        self.S = {}

    def frozen_codes(self):
        return np.array(sorted(u * self.V + v for u, S in self.S.items() for v in S), dtype=np.int64)

    def best(self, tab: PairTable, roots: np.ndarray):
        """Max LR and argmax continuation per root in ``roots`` (-inf when none)."""
        V, N, counts = self.V, self.N, self.counts.astype(float)
        n_h = tab.row.astype(float)
        nS = np.zeros(V)
        cS = np.zeros(V)
        nAS = np.zeros(V)
        frozen = self.frozen_codes()
        if len(frozen):
            fu, fv = frozen // V, frozen % V
            k = tab.lookup(frozen).astype(float)
            np.add.at(nS, fu, k)
            np.add.at(cS, fu, counts[fv] - k)
            np.add.at(nAS, fu, counts[fv])
        is_root = np.zeros(V, dtype=bool)
        is_root[roots] = True
        sel = (tab.count >= self.min_count) & is_root[tab.first]
        if len(frozen):
            sel &= ~np.isin(tab.codes, frozen)
        u, v = tab.first[sel], tab.second[sel]
        k = tab.count[sel].astype(float)
        nv = counts[v]
        cv = nv - k
        R = n_h[u] - nS[u]
        GmcS = (N - n_h[u]) - cS[u]
        NmnS = N - nAS[u]
        lr = (xlogx(k) + xlogx(cv) - xlogx(nv) + xlogx(R - k) - xlogx(R)
              + xlogx(GmcS - cv) - xlogx(GmcS) - xlogx(NmnS - nv) + xlogx(NmnS))
        lr = np.where(NmnS - nv > 0, lr, -np.inf)   # no back-off mass left
        best = np.full(V, -np.inf)
        arg = np.full(V, -1, dtype=np.int64)
        if len(lr):
            order = np.lexsort((v, -lr, u))
            u_o = u[order]
            first = np.ones(len(order), dtype=bool)
            first[1:] = u_o[1:] != u_o[:-1]
            pick = order[first]
            best[u[pick]] = lr[pick]
            arg[u[pick]] = v[pick]
        return best[roots], arg[roots]


def backoff_pair_discovery(ids, V, thresholds, min_count=2, M=None, seed=0, strict=True):
    """Recursive max-LR tests per root; asymptotic p-values when ``M`` is None.

    Returns {threshold: accepted pairs} and a log of (threshold, u, v, lr, p).
    """
    obs_tab = PairTable.of(ids, V)
    cache = {}
    results, log = {}, []
    for thr in thresholds:
        model = RootModels(ids, V, min_count)
        roots = np.unique(obs_tab.first[obs_tab.count >= min_count])
        while len(roots):
            key = (tuple(sorted((u, tuple(sorted(S))) for u, S in model.S.items())), tuple(roots.tolist()))
            if key not in cache:
                cache[key] = _backoff_round(model, obs_tab, roots, M, seed, strict)
            lr, arg, p = cache[key]
            accept = (lr > 0) & (p < thr)
            for u, v, l, pv in zip(roots[accept].tolist(), arg[accept].tolist(), lr[accept], p[accept]):
                model.S.setdefault(u, set()).add(v)
                log.append((thr, u, v, float(l), float(pv)))
            roots = roots[accept]
        results[thr] = {(u, v) for u, S in model.S.items() for v in S}
    return results, log


def _backoff_round(model: RootModels, obs_tab: PairTable, roots, M, seed, strict):
    lr, arg = model.best(obs_tab, roots)
    ok = np.isfinite(lr) & (lr > 0)
    roots_t = roots[ok]
    p = np.ones(len(roots))
    if M is None:
        p[ok] = chisq1_sf(2.0 * lr[ok])
        return lr, arg, p
    if not len(roots_t):
        return lr, arg, p
    frozen = [((u, v), None) for u, S in model.S.items() for v in S]
    shuffler = UnitShuffler(model.ids, np.zeros(len(model.ids), bool), frozen)
    exceed = np.zeros(len(roots_t), dtype=np.int64)
    obs = lr[ok]
    for rng in replicate_rngs(seed, M):
        pids, _ = shuffler.permute(rng)
        null, _ = model.best(PairTable.of(pids, model.V), roots_t)
        exceed += (null > obs) if strict else (null >= obs)
    p[ok] = exceed / M
    return lr, arg, p


def discover(method: str, ids, V, thresholds, min_count=2, M=1000, seed=0, strict=True):
    """Accepted bigrams per threshold for one of ``METHODS``."""
    if method == "chi_square":
        return asymptotic_pair_tests(ids, V, thresholds, min_count, "chi_square")[0]
    if method == "dunning_lr":
        return asymptotic_pair_tests(ids, V, thresholds, min_count, "g2")[0]
    if method == "backoff_lr_asymptotic":
        return backoff_pair_discovery(ids, V, thresholds, min_count, None, seed, strict)[0]
    if method == "multinomial_permutation":
        return multinomial_permutation_pairs(ids, V, thresholds, M, seed, min_count, strict)[0]
    if method == "backoff_permutation":
        return backoff_pair_discovery(ids, V, thresholds, min_count, M, seed, strict)[0]
    raise ValueError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
