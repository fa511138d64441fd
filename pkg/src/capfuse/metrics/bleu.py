"""BLEU with clipped modified n-gram precision.

Corpus BLEU pools clipped counts over all segments, takes the geometric
mean of orders 1..max_n and applies the brevity penalty
min(1, e^(1 - r/c)). The reference length r uses the shortest reference
of each segment, which makes the score monotone non-decreasing when a
reference is added (clipping caps can only grow and r can only shrink).

Sentence BLEU is the same formula on one segment with every precision
floored at a small epsilon so a single missing order does not zero the
score.
"""

from __future__ import annotations

import math
from typing import Sequence

from ..errors import EmptyCandidateList, EmptyReferenceSet, LengthMismatch
from .ngrams import ngram_counts
from .tokenizer import TokenStream, as_tokens, each_tokens

EPSILON = 1e-9

Tokensish = "TokenStream | Sequence[str]"


def _clipped_counts(
    cand: Sequence[str], refs: list[list[str]], n: int
) -> tuple[int, int]:
    """(clipped matches, candidate n-gram total) for one segment and order."""
    counts = ngram_counts(cand, n)
    if not counts:
        return 0, 0
    caps: dict[tuple, int] = {}
    for ref in refs:
        for gram, count in ngram_counts(ref, n).items():
            if count > caps.get(gram, 0):
                caps[gram] = count
    matched = sum(min(count, caps.get(gram, 0)) for gram, count in counts.items())
    return matched, sum(counts.values())


def _brevity(c: int, r: int) -> float:
    if c == 0:
        return 0.0
    if c > r:
        return 1.0
    return math.exp(1.0 - r / c)


def bleu_corpus(
    candidates: Sequence[Tokensish],
    references: Sequence[Sequence[Tokensish]],
    max_n: int = 4,
) -> float:
    """Corpus-level BLEU over aligned candidates and reference sets.

    Args:
        candidates: one token stream per segment.
        references: one non-empty list of token streams per segment.
        max_n: highest n-gram order (default 4).

    Raises:
        EmptyCandidateList: if there are no candidates.
        LengthMismatch: if candidates and references differ in length.
        EmptyReferenceSet: if any segment has no references.
    """
    if not candidates:
        raise EmptyCandidateList("no candidates")
    if len(candidates) != len(references):
        raise LengthMismatch(
            f"{len(candidates)} candidates vs {len(references)} reference sets"
        )
    cands = each_tokens(candidates)
    refs_per = []
    for i, refs in enumerate(references):
        if not refs:
            raise EmptyReferenceSet(i)
        refs_per.append(each_tokens(refs))

    matched = [0] * max_n
    totals = [0] * max_n
    c_len = 0
    r_len = 0
    for cand, refs in zip(cands, refs_per):
        c_len += len(cand)
        r_len += min(len(r) for r in refs)
        for n in range(1, max_n + 1):
            m, t = _clipped_counts(cand, refs, n)
            matched[n - 1] += m
            totals[n - 1] += t

    log_sum = 0.0
    for m, t in zip(matched, totals):
        if m == 0 or t == 0:
            return 0.0
        log_sum += math.log(m / t)
    return _brevity(c_len, r_len) * math.exp(log_sum / max_n)


def bleu_sentence(
    candidate: Tokensish,
    references: Sequence[Tokensish],
    max_n: int = 4,
    epsilon: float = EPSILON,
) -> float:
    """Sentence-level BLEU with epsilon-floored precisions.

    Precisions of orders with no match (or no candidate n-grams at all)
    are floored at ``epsilon`` instead of zeroing the geometric mean. An
    empty candidate scores 0.

    Raises:
        EmptyReferenceSet: if no references are given.
    """
    if not references:
        raise EmptyReferenceSet(0)
    cand = as_tokens(candidate)
    refs = each_tokens(references)
    if not cand:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        m, t = _clipped_counts(cand, refs, n)
        p = m / t if t else 0.0
        log_sum += math.log(max(p, epsilon))
    r = min(len(ref) for ref in refs)
    return _brevity(len(cand), r) * math.exp(log_sum / max_n)
