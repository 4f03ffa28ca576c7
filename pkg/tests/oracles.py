"""Independent reference computations the package is checked against."""

import math

import numpy as np
from scipy import integrate, optimize

from turbo_topics.backoff import History, backoff


def chisq1_tail_quad(x):
    """Upper chi-square(1) tail by integrating the density."""
    if x <= 0:
        return 1.0
    dens = lambda t: math.exp(-t / 2) / math.sqrt(2 * math.pi * t)
    if x < 1:
        head, _ = integrate.quad(dens, 0, x, epsabs=1e-14, epsrel=1e-12, limit=200)
        return 1.0 - head
    tail, _ = integrate.quad(dens, x, math.inf, epsabs=0, epsrel=1e-12, limit=200)
    return tail


def brute_prob(endowed, cond, unigram, gamma, h, v):
    """Back-off recursion written out directly."""
    scale = 1.0
    while True:
        S = endowed.get(h, ())
        if v in S:
            return scale * cond[h][v]
        if S:
            scale *= gamma[h]
        if not h.words:
            return scale * unigram[v]
        h = backoff(h)


def brute_loglik(model, stream):
    """Σ log p over positions, matching histories against each document separately."""
    total = 0.0
    for doc_ids, doc_anc in _documents(stream):
        for i, w in enumerate(doc_ids):
            best = History((), None)
            for h in model.endowed:
                L = len(h.words)
                if L > i or L < len(best.words):
                    continue
                if list(doc_ids[i - L:i]) != list(h.words):
                    continue
                if h.seed is not None and not doc_anc[i - L + h.seed]:
                    continue
                if L > len(best.words) or _later(h, best):
                    best = h
            p = brute_prob(model.endowed, model.cond, model.unigram, model.gamma, best, w)
            total += math.log(p)
    return total


def _later(h, other):
    ks = lambda x: (x.words, -1 if x.seed is None else x.seed)
    return ks(h) > ks(other)


def _documents(stream):
    ids, anc = stream.ids.tolist(), stream.anchor.tolist()
    out, cur_i, cur_a = [], [], []
    for w, a in zip(ids, anc):
        if w < 0:
            out.append((cur_i, cur_a))
            cur_i, cur_a = [], []
        else:
            cur_i.append(w)
            cur_a.append(a)
    out.append((cur_i, cur_a))
    return out


def numeric_bigram_mle(ids, u, v, V):
    """Maximize the one-bigram back-off likelihood by BFGS over (π_{v|u}, π).

    Positions after ``u`` emit ``v`` with probability q and any other word w
    with probability (1 - q) π_w / (1 - π_v); all other positions draw from π.
    """
    ids = np.asarray(ids)
    after = np.zeros(len(ids), dtype=bool)
    after[1:] = ids[:-1] == u
    k = int(np.count_nonzero(after & (ids == v)))
    rest = np.bincount(ids[after & (ids != v)], minlength=V).astype(float)
    free = np.bincount(ids[~after], minlength=V).astype(float)
    n_rest = rest.sum()

    def nll(x):
        a, b = x[0], x[1:]
        logq = -np.logaddexp(0.0, -a)
        log1mq = -np.logaddexp(0.0, a)
        logpi = b - np.logaddexp.reduce(b)
        log1mpv = np.log1p(-np.exp(logpi[v]))
        return -(k * logq + n_rest * (log1mq - log1mpv) + rest @ logpi + free @ logpi)

    x0 = np.zeros(V + 1)
    res = optimize.minimize(nll, x0, method="BFGS", options={"gtol": 1e-10, "maxiter": 10000})
    res = optimize.minimize(nll, res.x, method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 40000, "maxfev": 40000})
    a, b = res.x[0], res.x[1:]
    return 1 / (1 + math.exp(-a)), np.exp(b - np.logaddexp.reduce(b))
