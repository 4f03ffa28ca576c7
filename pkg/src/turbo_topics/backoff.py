"""Sparse back-off language model over integer-coded streams.

A history is a tuple of word ids, most recent last, optionally carrying the
index of an *anchor* word: the history only matches where the token at that
index is anchored (labelled with the topic under study). Each position of a
stream is governed by the longest endowed history that matches its preceding
words; the back-off conditional distribution then applies along the suffix
chain of that history, bottoming out in the unigram table.

Estimation is maximum likelihood. Conditionals are normalized counts over the
positions a history governs. The unigram table is the MLE of a multinomial
observed through truncations: a position that backs off from a history never
emits a word endowed along that history's chain. With one endowed history this
has a closed form; in general it is solved by a minorize-maximize iteration.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Mapping, NamedTuple, Optional

import numpy as np
from numba import njit

from .corpus import CodedStream


class BackoffError(ValueError):
    pass


class HistoryUnseen(BackoffError):
    def __init__(self, h):
        super().__init__(f"history unseen: {h}")
        self.history = h


class BackoffMassExhausted(BackoffError):
    def __init__(self, h):
        super().__init__(f"back-off mass exhausted at history {h}")
        self.history = h


class ZeroProbability(BackoffError):
    def __init__(self, position):
        super().__init__(f"zero-probability token at position {position}")
        self.position = position


class History(NamedTuple):
    words: tuple
    seed: Optional[int] = None

    @property
    def order(self) -> int:
        return len(self.words)


ROOT = History((), None)

# back-off denominators at or below this leave no mass for unendowed words
EXHAUSTED = 1e-12


def backoff(h: History) -> History:
    """Drop the oldest word. The anchor is lost when it was the dropped word."""
    if not h.words:
        raise BackoffError("the empty history has no back-off")
    seed = None if h.seed is None or h.seed == 0 else h.seed - 1
    return History(h.words[1:], seed)


def sort_key(h: History):
    return (len(h.words), h.words, -1 if h.seed is None else h.seed)


def xlogx(x):
    if isinstance(x, np.ndarray):
        x = x.astype(float)
        out = np.zeros_like(x)
        pos = x > 0
        out[pos] = x[pos] * np.log(x[pos])
        return out
    return x * math.log(x) if x > 0 else 0.0


# -- counting ----------------------------------------------------------------


def match_mask(ids: np.ndarray, anchor: np.ndarray, h: History) -> np.ndarray:
    """Positions whose preceding words match ``h`` (position = predicted token)."""
    n, L = len(ids), len(h.words)
    m = np.zeros(n, dtype=bool)
    if L == 0:
        return ids >= 0
    if n <= L:
        return m
    ok = ids[L:] >= 0
    for j, w in enumerate(h.words):
        ok &= ids[j:n - L + j] == w
    if h.seed is not None:
        ok &= anchor[h.seed:n - L + h.seed]
    m[L:] = ok
    return m


def governed_tables(ids, anchor, histories, masks=None) -> Dict[History, Dict[int, int]]:
    """Per history, counts of the words at positions it governs.

    A position is governed by the longest matching history; ties at equal
    length go to the largest ``sort_key``.
    """
    hs = sorted(histories, key=sort_key)
    if not hs:
        return {}
    gov = np.full(len(ids), -1, dtype=np.int64)
    for k, h in enumerate(hs):
        m = masks[h] if masks is not None else match_mask(ids, anchor, h)
        gov[m] = k
    sel = gov >= 0
    out = {h: {} for h in hs}
    if not sel.any():
        return out
    V = int(ids.max()) + 1
    keys, cnt = np.unique(gov[sel] * V + ids[sel], return_counts=True)
    for key, c in zip(keys.tolist(), cnt.tolist()):
        out[hs[key // V]][key % V] = c
    return out


@dataclass
class SuffStats:
    """Everything the likelihood depends on for a fixed endowed structure."""

    N: int
    counts: np.ndarray
    xlogx_total: float
    governed: Dict[History, Dict[int, int]]
    matched: Optional[Dict[History, int]] = None   # raw occurrences of each history

    def n_governed(self, h) -> int:
        return sum(self.governed.get(h, {}).values())


def stream_totals(ids: np.ndarray, vocab_size: int):
    counts = np.bincount(ids[ids >= 0], minlength=vocab_size)
    return int(counts.sum()), counts, float(xlogx(counts).sum())


def sufficient_stats(stream: CodedStream, endowed: Iterable[History]) -> SuffStats:
    N, counts, T = stream_totals(stream.ids, len(stream.vocab))
    endowed = list(endowed)
    masks = {h: match_mask(stream.ids, stream.anchor, h) for h in endowed}
    matched = {h: int(m.sum()) for h, m in masks.items()}
    return SuffStats(N, counts, T, governed_tables(stream.ids, stream.anchor, endowed, masks), matched)


# -- estimation ----------------------------------------------------------------


def _chain_parent(h: History, endowed) -> History:
    p = backoff(h)
    while p.words and p not in endowed:
        p = backoff(p)
    return p


def truncated_unigram(c: Dict[int, float], c_out: float, truncations, tol=1e-15, max_iter=100000):
    """MLE of a multinomial seen through truncated draws.

    ``c`` holds counts for the words that appear in some truncation set, and
    ``c_out`` the total count of all other words. Each truncation ``(A, R)``
    stands for ``R`` draws known to avoid the set ``A``. Returns the
    probabilities of the words in ``c`` and the normalizer ``lam`` such that
    every other word ``w`` has probability ``n_w / lam``.
    """
    words = list(c)
    cv = np.array([c[w] for w in words], dtype=float)
    B = c_out + cv.sum()
    if B <= 0:
        raise BackoffError("no positions reach the unigram level")
    truncations = [(A, R) for A, R in truncations if R > 0 and A]
    if not truncations:
        return dict(zip(words, (cv / B).tolist())), B
    pos = {w: i for i, w in enumerate(words)}
    if len(truncations) == 1:
        A, R = truncations[0]
        ia = np.array([pos[w] for w in A])
        pi = np.empty_like(cv)
        cA = cv[ia].sum()
        root = B - R
        pi[ia] = cv[ia] / root if root > 0 else 0.0
        piA = pi[ia].sum()
        rest = np.ones(len(cv), dtype=bool)
        rest[ia] = False
        lam = (B - cA) / (1.0 - piA) if B - cA > 0 and piA < 1 else math.inf
        pi[rest] = cv[rest] / lam
        return dict(zip(words, pi.tolist())), lam
    idx = [np.array([pos[w] for w in A]) for A, _ in truncations]
    Rv = np.array([R for _, R in truncations], dtype=float)
    member = np.zeros((len(truncations), len(words)))
    for g, ix in enumerate(idx):
        member[g, ix] = 1.0
    pi = cv / B
    lam = B
    for _ in range(max_iter):
        t = 1.0 / (1.0 - member @ pi)
        s = (Rv * t) @ member
        lam = _solve_lambda(cv, s, c_out, B)
        new = cv / (lam - s)
        if np.max(np.abs(new - pi)) <= tol * max(1.0, np.max(pi)):
            pi = new
            break
        pi = new
    return dict(zip(words, pi.tolist())), lam


def _solve_lambda(cv, s, c_out, B):
    """Root of c_out/lam + sum(cv / (lam - s)) = 1 right of the poles."""
    active = cv > 0
    m = float(s[active].max()) if active.any() else 0.0
    lam = max(B, m * (1 + 1e-12) + 1e-300)
    for _ in range(200):
        d = lam - s
        f = c_out / lam + np.sum(cv[active] / d[active]) - 1.0
        fp = -c_out / lam ** 2 - np.sum(cv[active] / d[active] ** 2)
        step = f / fp
        lam_new = lam - step
        if not lam_new > m:
            lam_new = 0.5 * (lam + m)
        if abs(lam_new - lam) <= 1e-15 * lam:
            return lam_new
        lam = lam_new
    return lam


@dataclass
class _Solution:
    ll: float
    cond: Dict[History, Dict[int, float]]
    pi_u: Dict[int, float]
    lam: float
    gamma: Dict[History, float]


def solve(stats: SuffStats, endowed: Mapping[History, FrozenSet[int]], need_ll=True) -> _Solution:
    """Estimate parameters and evaluate the log likelihood from sufficient statistics.

    Histories that govern no position (all their matches belong to longer
    histories) leave the likelihood untouched and are skipped.
    """
    groups = sorted((h for h in stats.governed if endowed.get(h) and stats.governed[h]), key=sort_key)
    gset = set(groups)
    parent, A = {}, {ROOT: frozenset()}
    for g in groups:
        p = _chain_parent(g, gset)
        parent[g] = p
        A[g] = frozenset(endowed[g]) | A[p]
    cond, R = {}, {}
    absorbed = defaultdict(int)
    for g in groups:
        cnt = stats.governed[g]
        tot = sum(cnt.values())
        cond[g] = {v: cnt.get(v, 0) / tot for v in endowed[g]}
        r = tot
        for w in A[g]:
            k = cnt.get(w, 0)
            if k:
                absorbed[w] += k
                r -= k
        R[g] = (r, tot)
    U = set()
    for g in groups:
        U |= A[g]
    counts = stats.counts
    c = {w: float(counts[w] - absorbed.get(w, 0)) for w in sorted(U)}
    nU = float(sum(counts[w] for w in U))
    c_out = stats.N - nU
    pi_u, lam = truncated_unigram(c, c_out, [(A[g], R[g][0]) for g in groups])

    def pi_of(w):
        return pi_u[w] if w in pi_u else counts[w] / lam

    levels = {ROOT: ({}, 1.0)}
    gamma = {}
    for g in groups:
        pp, PG = levels[parent[g]]
        S = endowed[g]
        den = 1.0 - sum(pp[v] if v in pp else PG * pi_of(v) for v in S)
        if den <= EXHAUSTED:
            raise BackoffMassExhausted(g)
        # γ from normalization; a governed position may also emit a word
        # endowed further down the chain, so this is not the fall-through share
        gam = max(1.0 - sum(cond[g].values()), 0.0) / den
        gamma[g] = gam
        p = {v: cond[g][v] for v in S}
        for w, q in pp.items():
            if w not in S:
                p[w] = gam * q
        levels[g] = (p, gam * PG)
    if not need_ll:
        return _Solution(math.nan, cond, pi_u, lam, gamma)

    ll = 0.0
    for g in groups:
        cnt = stats.governed[g]
        p, Gm = levels[g]
        for w in A[g]:
            k = cnt.get(w, 0)
            if k:
                ll += k * _log(p[w])
        r = R[g][0]
        if r:
            ll += r * _log(Gm)
    for w, cw in c.items():
        if cw:
            ll += cw * _log(pi_u[w])
    ll += stats.xlogx_total - sum(xlogx(float(counts[w])) for w in U)
    if c_out > 0:
        ll -= c_out * math.log(lam)
    return _Solution(ll, cond, pi_u, lam, gamma)


def _log(x):
    return math.log(x) if x > 0 else -math.inf


# -- the model -----------------------------------------------------------------


@dataclass(frozen=True)
class BackoffModel:
    vocab: list
    endowed: Dict[History, FrozenSet[int]]
    cond: Dict[History, Dict[int, float]]
    unigram: np.ndarray
    gamma: Dict[History, float] = field(default_factory=dict)
    stats: Optional[SuffStats] = field(default=None, repr=False, compare=False)

    @classmethod
    def from_params(cls, vocab, endowed, cond, unigram, stats=None):
        """Build a model from explicit parameters; γ is derived from the normalization constraint."""
        endowed = {h: frozenset(S) for h, S in endowed.items() if S}
        m = cls(list(vocab), endowed, {h: dict(cond[h]) for h in endowed},
                np.asarray(unigram, dtype=float), {}, stats)
        for h in sorted(endowed, key=sort_key):
            m.gamma[h] = scaling_gamma(m, h)
        return m

    def prob(self, history_words, word, seed=None) -> float:
        ix = {w: i for i, w in enumerate(self.vocab)}
        h = History(tuple(ix[w] for w in history_words), seed)
        return conditional_prob(self, h, ix[word])

    def to_json(self) -> dict:
        def hkey(h):
            ws = [self.vocab[w] for w in h.words]
            if h.seed is not None:
                ws[h.seed] = f"[{ws[h.seed]}]"
            return " ".join(ws)

        out = {
            "endowed": {hkey(h): {self.vocab[v]: self.cond[h][v] for v in sorted(S)}
                        for h, S in sorted(self.endowed.items(), key=lambda kv: sort_key(kv[0]))},
            "gamma": {hkey(h): g for h, g in sorted(self.gamma.items(), key=lambda kv: sort_key(kv[0]))},
            "unigram": {self.vocab[i]: float(p) for i, p in enumerate(self.unigram) if p > 0},
        }
        if self.stats is not None:
            out["counts"] = {
                "N": self.stats.N,
                "words": {self.vocab[i]: int(c) for i, c in enumerate(self.stats.counts) if c},
                "governed": {hkey(h): {self.vocab[w]: c for w, c in sorted(t.items())}
                             for h, t in sorted(self.stats.governed.items(), key=lambda kv: sort_key(kv[0]))},
            }
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=False)


def estimate_params(stats: SuffStats, endowed: Mapping[History, Iterable[int]], vocab) -> BackoffModel:
    """Maximum-likelihood parameters for the given endowed sets."""
    endowed = {h: frozenset(S) for h, S in endowed.items() if S}
    for h in endowed:
        if h not in stats.governed:
            raise BackoffError(f"no counts for endowed history {h}")
        n_h = stats.matched[h] if stats.matched is not None else stats.n_governed(h)
        if n_h == 0:
            raise HistoryUnseen(h)
    sol = solve(stats, endowed, need_ll=False)
    unigram = stats.counts / sol.lam
    for w, p in sol.pi_u.items():
        unigram[w] = p
    shadowed = [h for h in endowed if h not in sol.cond]
    if not shadowed:
        return BackoffModel.from_params(vocab, endowed, sol.cond, unigram, stats)
    # a shadowed history copies its back-off distribution, so its γ is 1
    visible = {h: S for h, S in endowed.items() if h in sol.cond}
    m0 = BackoffModel.from_params(vocab, visible, sol.cond, unigram)
    cond = dict(sol.cond)
    for h in shadowed:
        cond[h] = {v: conditional_prob(m0, backoff(h), v) for v in endowed[h]}
    return BackoffModel.from_params(vocab, endowed, cond, unigram, stats)


def fit(stream: CodedStream, endowed: Mapping[History, Iterable[int]]) -> BackoffModel:
    endowed = {h: frozenset(S) for h, S in endowed.items() if S}
    return estimate_params(sufficient_stats(stream, endowed), endowed, stream.vocab)


def scaling_gamma(model: BackoffModel, h: History) -> float:
    """γ_h = (1 - Σ_{v∈S_h} π_{v|h}) / (1 - Σ_{v∈S_h} p(v | backoff(h)))."""
    S = model.endowed.get(h)
    if not S:
        return 1.0
    num = 1.0 - sum(model.cond[h][v] for v in S)
    lower = backoff(h)
    den = 1.0 - sum(conditional_prob(model, lower, v) for v in S)
    if den <= EXHAUSTED:
        raise BackoffMassExhausted(h)
    return max(num, 0.0) / den


def conditional_prob(model: BackoffModel, h: History, v: int) -> float:
    scale = 1.0
    while h.words:
        S = model.endowed.get(h)
        if S:
            if v in S:
                return scale * model.cond[h][v]
            scale *= model.gamma[h]
        h = backoff(h)
    if 0 <= v < len(model.unigram):
        return scale * float(model.unigram[v])
    return 0.0


def conditional_dist(model: BackoffModel, h: History) -> np.ndarray:
    return np.array([conditional_prob(model, h, v) for v in range(len(model.vocab))])


def corpus_log_likelihood(model: BackoffModel, stream: CodedStream) -> float:
    """Σ_n log p(w_n | longest endowed matching history), one position at a time."""
    ids, anc = stream.ids.tolist(), stream.anchor.tolist()
    hs = sorted(model.endowed, key=sort_key)
    total = 0.0
    for i, w in enumerate(ids):
        if w < 0:
            continue
        best = ROOT
        for h in hs:
            L = len(h.words)
            if i < L:
                continue
            if all(ids[i - L + j] == h.words[j] for j in range(L)) and \
                    (h.seed is None or anc[i - L + h.seed]):
                best = h
        p = conditional_prob(model, best, w)
        if p <= 0:
            raise ZeroProbability(i)
        total += math.log(p)
    return total


# -- expansion -------------------------------------------------------------------


@dataclass(frozen=True)
class ExpansionScore:
    history: History
    candidate: int
    lr: float
    n_hv: int


def expanded(endowed: Mapping[History, FrozenSet[int]], h: History, v: int) -> dict:
    out = {k: frozenset(S) for k, S in endowed.items() if S}
    out[h] = out.get(h, frozenset()) | {v}
    return out


def likelihood_ratio(base: BackoffModel, h: History, v: int, stream: CodedStream) -> Optional[ExpansionScore]:
    """Exact log likelihood ratio of ``base`` with ``v`` added to S_h.

    Both models are estimated on ``stream`` and evaluated position by
    position. Returns None when ``v`` never follows ``h``.
    """
    if v in base.endowed.get(h, ()):
        raise BackoffError("candidate already endowed")
    endowed2 = expanded(base.endowed, h, v)
    stats2 = sufficient_stats(stream, endowed2)
    n_hv = stats2.governed[h].get(v, 0)
    if n_hv == 0:
        return None
    exp = estimate_params(stats2, endowed2, stream.vocab)
    lr = corpus_log_likelihood(exp, stream) - corpus_log_likelihood(base, stream)
    return ExpansionScore(h, v, lr, n_hv)


class StreamView:
    """Arrays plus word totals of a stream; totals survive any permutation."""

    def __init__(self, ids, anchor, vocab_size, totals=None):
        self.ids = ids
        self.anchor = anchor
        self.vocab_size = vocab_size
        self.N, self.counts, self.T = totals if totals is not None else stream_totals(ids, vocab_size)

    @classmethod
    def of(cls, stream: CodedStream):
        return cls(stream.ids, stream.anchor, len(stream.vocab))

    def with_arrays(self, ids, anchor):
        return StreamView(ids, anchor, self.vocab_size, (self.N, self.counts, self.T))

    def stats(self, governed) -> SuffStats:
        return SuffStats(self.N, self.counts, self.T, governed)


def score_candidates(view: StreamView, endowed: Mapping[History, FrozenSet[int]], h: History,
                     min_count: int = 2, candidates=None) -> Dict[int, tuple]:
    """LR for every admissible continuation ``v`` of ``h``: {v: (lr, n_hv)}.

    Only statistics touched by the expansion are recomputed. Models where
    ``h`` is the only endowed history use a closed form; models whose
    histories all back off straight to the unigram table go through a
    compiled solver; anything else is re-solved in Python.
    """
    base = {k: frozenset(S) for k, S in endowed.items() if S}
    S_h = base.get(h, frozenset())
    hist = set(base) | {h}
    masks = {k: match_mask(view.ids, view.anchor, k) for k in hist}
    gov_exp = governed_tables(view.ids, view.anchor, hist, masks)
    table = gov_exp[h]
    cands = [v for v, k in table.items() if k >= min_count and v not in S_h
             and (candidates is None or v in candidates)]
    if not cands:
        return {}
    cands.sort()
    if set(base) <= {h}:
        lrs = _single_history_lr(view, table, S_h, cands)
        return {v: (lr, table[v]) for v, lr in zip(cands, lrs.tolist()) if math.isfinite(lr)}
    gov_base = governed_tables(view.ids, view.anchor, base, masks) if h not in base else gov_exp
    if all(_chain_parent(g, hist) == ROOT for g in hist):
        lrs = _flat_lrs(view, base, gov_base, gov_exp, h, cands)
        if lrs is not None:
            return {v: (lr, table[v]) for v, lr in zip(cands, lrs) if math.isfinite(lr)}
    ll_base = solve(view.stats(gov_base), base).ll
    if not math.isfinite(ll_base):
        return {}  # the base model already gives an observed token zero probability
    stats_exp = view.stats(gov_exp)
    out = {}
    for v in cands:
        e2 = dict(base)
        e2[h] = S_h | {v}
        try:
            lr = solve(stats_exp, e2).ll - ll_base
        except BackoffMassExhausted:
            continue  # no back-off mass left: not a valid expansion
        if math.isfinite(lr):
            out[v] = (lr, table[v])
    return out


def _flat_arrays(groups, endowed, gov, words, col):
    G, W = len(groups), len(words)
    member = np.zeros((G, W), dtype=np.bool_)
    k = np.zeros((G, W))
    tot = np.zeros(G)
    for i, g in enumerate(groups):
        t = gov.get(g, {})
        tot[i] = sum(t.values())
        for v in endowed.get(g, ()):
            member[i, col[v]] = True
        for w, c in t.items():
            j = col.get(w)
            if j is not None:
                k[i, j] = c
    return member, k, tot


def _flat_lrs(view, base, gov_base, gov_exp, h, cands):
    """Expansion LRs for flat models, or None when the compiled path declines."""
    words = sorted(set().union(*base.values()) | set(cands))
    col = {w: j for j, w in enumerate(words)}
    n_w = view.counts[np.array(words)].astype(float)
    gb = sorted(base, key=sort_key)
    m, k, tot = _flat_arrays(gb, base, gov_base, words, col)
    ll0 = _flat_ll(m, k, tot, n_w, float(view.N), view.T)
    ge = sorted(set(base) | {h}, key=sort_key)
    m, k, tot = _flat_arrays(ge, base, gov_exp, words, col)
    lls = _flat_candidate_lls(m, k, tot, n_w, float(view.N), view.T, ge.index(h),
                              np.array([col[v] for v in cands], dtype=np.int64))
    if not math.isfinite(ll0):
        return None
    # NaN marks an expansion that leaves no back-off mass
    return (lls - ll0).tolist()


@njit(cache=True)
def _xlx(x):
    return x * math.log(x) if x > 0 else 0.0


@njit(cache=True)
def _flat_ll(member, k, tot, n_w, N, T):
    """Maximized log likelihood of a model whose histories back off to unigrams.

    ``member[g, w]`` marks w in S_g, ``k[g, w]`` counts w at positions g
    governs, ``tot[g]`` is the number of such positions. Returns NaN where
    the Python solver would raise.
    """
    G, W = member.shape
    inU = np.zeros(W, dtype=np.bool_)
    cv = n_w.copy()
    R = tot.copy()
    live = np.zeros(G, dtype=np.bool_)
    for g in range(G):
        if tot[g] <= 0:
            continue
        for w in range(W):
            if member[g, w]:
                live[g] = True
                inU[w] = True
                cv[w] -= k[g, w]
                R[g] -= k[g, w]
    c_out = N
    for w in range(W):
        if inU[w]:
            c_out -= n_w[w]
        else:
            cv[w] = 0.0
    B = c_out
    for w in range(W):
        B += cv[w]
    if B <= 0:
        return np.nan
    pi = cv / B
    lam = B
    trunc = np.zeros(G, dtype=np.bool_)
    any_trunc = False
    for g in range(G):
        if live[g] and R[g] > 0:
            trunc[g] = True
            any_trunc = True
    if any_trunc:
        s = np.zeros(W)
        for _ in range(100000):
            s[:] = 0.0
            for g in range(G):
                if trunc[g]:
                    pa = 0.0
                    for w in range(W):
                        if member[g, w]:
                            pa += pi[w]
                    if pa >= 1.0:
                        return np.nan
                    t = R[g] / (1.0 - pa)
                    for w in range(W):
                        if member[g, w]:
                            s[w] += t
            lam = _lambda_root(cv, s, c_out, B)
            diff = 0.0
            top = 1.0
            for w in range(W):
                new = cv[w] / (lam - s[w]) if cv[w] > 0 else 0.0
                d = abs(new - pi[w])
                if d > diff:
                    diff = d
                if pi[w] > top:
                    top = pi[w]
                pi[w] = new
            if diff <= 1e-15 * top:
                break
    ll = T
    for w in range(W):
        if inU[w]:
            ll -= _xlx(n_w[w])
            if cv[w] > 0:
                ll += cv[w] * math.log(pi[w])
    for g in range(G):
        if not live[g]:
            continue
        pa = 0.0
        for w in range(W):
            if member[g, w]:
                pa += pi[w]
                if k[g, w] > 0:
                    ll += k[g, w] * math.log(k[g, w] / tot[g])
        den = 1.0 - pa
        if den <= 1e-12:
            return np.nan
        if R[g] > 0:
            ll += R[g] * math.log((R[g] / tot[g]) / den)
    if c_out > 0:
        ll -= c_out * math.log(lam)
    return ll


@njit(cache=True)
def _lambda_root(cv, s, c_out, B):
    m = 0.0
    seen = False
    for w in range(len(cv)):
        if cv[w] > 0 and (not seen or s[w] > m):
            m = s[w]
            seen = True
    lam = max(B, m * (1 + 1e-12) + 1e-300)
    for _ in range(200):
        f = c_out / lam - 1.0
        fp = -c_out / lam ** 2
        for w in range(len(cv)):
            if cv[w] > 0:
                d = lam - s[w]
                f += cv[w] / d
                fp -= cv[w] / d ** 2
        lam_new = lam - f / fp
        if not lam_new > m:
            lam_new = 0.5 * (lam + m)
        if abs(lam_new - lam) <= 1e-15 * lam:
            return lam_new
        lam = lam_new
    return lam


@njit(cache=True)
def _flat_candidate_lls(member, k, tot, n_w, N, T, gh, cols):
    out = np.empty(len(cols))
    for i in range(len(cols)):
        j = cols[i]
        member[gh, j] = True
        out[i] = _flat_ll(member, k, tot, n_w, N, T)
        member[gh, j] = False
    return out


def _single_history_lr(view: StreamView, table: Dict[int, int], S, cands) -> np.ndarray:
    """Closed-form LR when ``h`` is the only endowed history.

    With one endowed history the maximized log likelihood of endowed set A is
    T - f(n_h) - f(G) + Σ_A[f(n_hw) + f(n_w - n_hw) - f(n_w)]
      + f(R_A) + f(G - c(A)) - f(N - n(A)),  f(x) = x log x, G = N - n_h.
    """
    N, counts = view.N, view.counts
    n_h = sum(table.values())
    G = N - n_h
    nS = sum(table.get(s, 0) for s in S)
    R = n_h - nS
    cS = sum(int(counts[s]) - table.get(s, 0) for s in S)
    nAS = sum(int(counts[s]) for s in S)
    k = np.array([table[v] for v in cands], dtype=float)
    nv = counts[np.array(cands)].astype(float)
    cv = nv - k
    lr = (xlogx(k) + xlogx(cv) - xlogx(nv)
          + xlogx(R - k) - xlogx(float(R))
          + xlogx(G - cS - cv) - xlogx(float(G - cS))
          - xlogx(N - nAS - nv) + xlogx(float(N - nAS)))
    # no word left outside the endowed set: nothing to back off to
    lr[N - nAS - nv <= 0] = np.nan
    return lr


def best_expansion(view: StreamView, endowed, h: History, min_count=2, candidates=None):
    """(lr, v, n_hv) of the highest-scoring continuation; ties go to the lowest id."""
    scores = score_candidates(view, endowed, h, min_count, candidates)
    if not scores:
        return None
    v = max(scores, key=lambda w: (scores[w][0], -w))
    return scores[v][0], v, scores[v][1]
