"""Permutation p-values on streams with no planted structure should look uniform."""

import argparse

import numpy as np
from scipy import stats

from turbo_topics.backoff import History
from turbo_topics.corpus import CodedStream
from turbo_topics.significance import PermutationConfig, permutation_test_max_lr


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=200)
    ap.add_argument("--vocab", type=int, default=20)
    ap.add_argument("--tokens", type=int, default=1000)
    ap.add_argument("--permutations", type=int, default=200)
    args = ap.parse_args()

    ps = []
    for run in range(args.runs):
        rng = np.random.default_rng(run)
        s = CodedStream.from_words([f"w{i}" for i in rng.integers(0, args.vocab, size=args.tokens)])
        v = permutation_test_max_lr({}, History((s.index["w0"],)), s,
                                    PermutationConfig(M=args.permutations, seed=run))
        ps.append(v.p_value)
    ps = np.asarray(ps)
    print(f"mean p {ps.mean():.3f}; below 0.05: {np.mean(ps < 0.05):.3f}; below 0.01: {np.mean(ps < 0.01):.3f}")
    print(f"KS against uniform: p = {stats.kstest(ps, 'uniform').pvalue:.3f}")
    counts, _ = np.histogram(ps, bins=10, range=(0, 1))
    print("decile counts:", " ".join(map(str, counts)))


if __name__ == "__main__":
    main()
