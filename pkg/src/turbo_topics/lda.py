"""Collapsed Gibbs sampling for LDA, and per-token topic annotation."""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .corpus import AnnotatedToken, CorpusError, Token, Vocabulary


@dataclass(frozen=True)
class LdaConfig:
    K: int = 10
    alpha: Optional[float] = None   # None means 50 / K
    eta: float = 0.01
    sweeps: int = 1000
    burn_in: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.sweeps < 1 or not 0 <= self.burn_in < self.sweeps:
            raise ValueError("need sweeps >= 1 and 0 <= burn_in < sweeps")

    @property
    def alpha_value(self) -> float:
        return 50.0 / self.K if self.alpha is None else float(self.alpha)


@dataclass(frozen=True)
class LdaState:
    config: LdaConfig
    positions: np.ndarray           # index into the token sequence of each in-vocabulary token
    words: np.ndarray               # vocabulary id per in-vocabulary token
    docs: np.ndarray                # dense document index per in-vocabulary token
    assignments: np.ndarray         # last sampled topic per in-vocabulary token
    topic_word_counts: np.ndarray   # K x V
    doc_topic_counts: np.ndarray    # D x K
    annotation_tally: np.ndarray    # per token, post-burn-in topic histogram
    n_tokens: int                   # length of the token sequence it was fitted on
    fingerprint: str

    def topic_word_probs(self) -> np.ndarray:
        """Smoothed topic-word estimates (n_kw + eta) / (n_k + V eta)."""
        eta = self.config.eta
        nkw = self.topic_word_counts.astype(float) + eta
        return nkw / nkw.sum(axis=1, keepdims=True)

    def doc_topic_probs(self) -> np.ndarray:
        a = self.config.alpha_value
        ndk = self.doc_topic_counts.astype(float) + a
        return ndk / ndk.sum(axis=1, keepdims=True)

    def modes(self) -> np.ndarray:
        # argmax returns the first maximum, i.e. the lowest topic id on ties
        return np.argmax(self.annotation_tally, axis=1)


def _fingerprint(tokens: Sequence[Token]) -> str:
    h = hashlib.sha256()
    for t in tokens:
        h.update(f"{t.doc_id}\t{t.position}\t{t.surface}\n".encode())
    return h.hexdigest()


def _encode(tokens: Sequence[Token], vocab: Vocabulary):
    pos, words, docs = [], [], []
    doc_index = {}
    for i, t in enumerate(tokens):
        if t.surface in vocab and t.surface not in vocab.stopwords:
            pos.append(i)
            words.append(vocab.index(t.surface))
            docs.append(doc_index.setdefault(t.doc_id, len(doc_index)))
    return (np.asarray(pos, dtype=np.int64), np.asarray(words, dtype=np.int64),
            np.asarray(docs, dtype=np.int64), len(doc_index))


@njit(cache=True)
def _gibbs(words, docs, K, V, D, alpha, eta, sweeps, burn_in, seed):
    np.random.seed(seed)
    N = len(words)
    z = np.empty(N, dtype=np.int64)
    nkw = np.zeros((K, V), dtype=np.int64)
    ndk = np.zeros((D, K), dtype=np.int64)
    nk = np.zeros(K, dtype=np.int64)
    tally = np.zeros((N, K), dtype=np.int32)
    for i in range(N):
        k = np.random.randint(0, K)
        z[i] = k
        nkw[k, words[i]] += 1
        ndk[docs[i], k] += 1
        nk[k] += 1
    p = np.empty(K)
    Veta = V * eta
    for s in range(sweeps):
        for i in range(N):
            w, d, k = words[i], docs[i], z[i]
            nkw[k, w] -= 1
            ndk[d, k] -= 1
            nk[k] -= 1
            total = 0.0
            for j in range(K):
                total += (ndk[d, j] + alpha) * (nkw[j, w] + eta) / (nk[j] + Veta)
                p[j] = total
            u = np.random.random() * total
            k = 0
            while k < K - 1 and p[k] <= u:
                k += 1
            z[i] = k
            nkw[k, w] += 1
            ndk[d, k] += 1
            nk[k] += 1
            if s >= burn_in:
                tally[i, k] += 1
    return z, nkw, ndk, tally


def fit_lda(tokens: Sequence[Token], vocab: Vocabulary, config: LdaConfig = LdaConfig()) -> LdaState:
    """Run ``config.sweeps`` collapsed Gibbs sweeps; deterministic given the seed.

    Only vocabulary terms that are not stop words are modeled.
    """
    pos, words, docs, D = _encode(tokens, vocab)
    if len(words) == 0:
        raise CorpusError("no in-vocabulary tokens to fit")
    n_types = len(np.unique(words))
    if config.K > n_types:
        warnings.warn(f"K={config.K} exceeds the {n_types} word types in use", stacklevel=2)
    seed32 = int(np.random.SeedSequence(config.seed).generate_state(1)[0])
    z, nkw, ndk, tally = _gibbs(words, docs, config.K, len(vocab), D, config.alpha_value,
                                config.eta, config.sweeps, config.burn_in, seed32)
    return LdaState(config, pos, words, docs, z, nkw, ndk, tally, len(tokens), _fingerprint(tokens))


def annotate_corpus(tokens: Sequence[Token], vocab: Vocabulary, state: LdaState) -> list:
    """Label each modeled token with its post-burn-in modal topic; others get None."""
    if len(tokens) != state.n_tokens or _fingerprint(tokens) != state.fingerprint:
        raise CorpusError("token sequence does not match the one the model was fitted on")
    topics = [None] * len(tokens)
    for i, k in zip(state.positions.tolist(), state.modes().tolist()):
        topics[i] = k
    return [AnnotatedToken(t, z) for t, z in zip(tokens, topics)]


def top_words(state: LdaState, vocab: Vocabulary, M: int = 20) -> list:
    """Per topic, the M terms with the largest assignment counts (ties by term id)."""
    out = []
    for row in state.topic_word_counts:
        order = np.lexsort((np.arange(len(row)), -row))[:M]
        out.append([(vocab.terms[i], int(row[i])) for i in order if row[i] > 0])
    return out


def model_dump(state: LdaState, vocab: Vocabulary, M: int = 20, manifest=None) -> dict:
    out = {
        "config": asdict(state.config) | {"alpha": state.config.alpha_value},
        "n_modeled_tokens": int(len(state.words)),
        "vocabulary_size": len(vocab),
        "topics": [{"topic": k, "n_assigned": int(state.topic_word_counts[k].sum()),
                    "top_words": [[w, c] for w, c in tw]}
                   for k, tw in enumerate(top_words(state, vocab, M))],
    }
    if manifest is not None:
        out["manifest"] = manifest
    return out


def dumps_model(state: LdaState, vocab: Vocabulary, M: int = 20, manifest=None) -> str:
    return json.dumps(model_dump(state, vocab, M, manifest), indent=1, sort_keys=True, ensure_ascii=False)


# -- evaluation ---------------------------------------------------------------------


def fold_in_theta(phi: np.ndarray, doc_words: np.ndarray, alpha: float, iters: int = 50) -> np.ndarray:
    """Topic proportions of a new document given fixed topics (EM on the mixture)."""
    K = phi.shape[0]
    theta = np.full(K, 1.0 / K)
    if len(doc_words) == 0:
        return theta
    lik = phi[:, doc_words]                    # K x n
    for _ in range(iters):
        r = theta[:, None] * lik
        r /= r.sum(axis=0, keepdims=True)
        theta = r.sum(axis=1) + alpha
        theta /= theta.sum()
    return theta


def heldout_log_likelihood(phi: np.ndarray, docs: Sequence[np.ndarray], alpha: float) -> float:
    """Per-token document-completion log likelihood.

    Proportions are folded in on the even positions of each document and
    the odd positions are scored under them.
    """
    total, n = 0.0, 0
    for w in docs:
        w = np.asarray(w, dtype=np.int64)
        obs, test = w[0::2], w[1::2]
        if len(test) == 0:
            continue
        theta = fold_in_theta(phi, obs, alpha)
        total += float(np.log(theta @ phi[:, test]).sum())
        n += len(test)
    return total / max(n, 1)


def sample_lda_corpus(n_docs: int, doc_len: int, K: int, V: int, alpha: float, eta: float, seed: int):
    """Documents drawn from the LDA generative process; returns (docs, beta, theta, z)."""
    rng = np.random.default_rng(seed)
    beta = rng.dirichlet(np.full(V, eta), size=K)
    theta = rng.dirichlet(np.full(K, alpha), size=n_docs)
    docs, zs = [], []
    for d in range(n_docs):
        z = rng.choice(K, size=doc_len, p=theta[d])
        w = np.array([rng.choice(V, p=beta[k]) for k in z], dtype=np.int64)
        docs.append(w)
        zs.append(z)
    return docs, beta, theta, zs
