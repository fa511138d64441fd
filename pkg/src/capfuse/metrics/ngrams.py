"""N-gram counting helpers shared by the metric implementations."""

from __future__ import annotations

from collections import Counter
from typing import Sequence


def ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    """Counter of n-grams (as tuples) of a single order."""
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def all_ngram_counts(tokens: Sequence[str], max_n: int = 4) -> dict[int, Counter]:
    """Counters for every order 1..max_n."""
    return {n: ngram_counts(tokens, n) for n in range(1, max_n + 1)}
