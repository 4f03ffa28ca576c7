"""Multi-word topic summaries from a unigram topic model.

A topic model labels tokens; a sparse back-off language model grown by
recursive permutation tests then finds the phrases around each topic's words.
"""

__version__ = "0.1.0"
