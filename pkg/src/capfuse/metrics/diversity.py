"""Diversity of caption sets: mutual overlap and distinct n-gram ratios."""

from __future__ import annotations

import math
from typing import Sequence

from ..errors import EmptySet, SetTooSmall
from .bleu import bleu_sentence
from .ngrams import ngram_counts
from .tokenizer import each_tokens

Tokensish = "Sequence[str]"


def mbleu(caption_sets: Sequence[Sequence[Tokensish]]) -> float:
    """Mutual overlap of each caption set, averaged over sets.

    For every caption the remaining captions of its set act as references
    for sentence BLEU; scores average within the set and then across
    sets. Lower values mean more diverse sets; identical captions give
    exactly 1.

    Raises:
        EmptySet: if no caption sets are given.
        SetTooSmall: if any set has fewer than two captions.
    """
    if not caption_sets:
        raise EmptySet("no caption sets")
    per_set = []
    for i, captions in enumerate(caption_sets):
        if len(captions) < 2:
            raise SetTooSmall(i, len(captions))
        tokens = each_tokens(captions)
        scores = []
        for j, cand in enumerate(tokens):
            refs = tokens[:j] + tokens[j + 1 :]
            scores.append(bleu_sentence(cand, refs))
        per_set.append(math.fsum(scores) / len(scores))
    return math.fsum(per_set) / len(per_set)


def div_n(caption_sets: Sequence[Sequence[Tokensish]], n: int = 1) -> float:
    """Distinct n-grams per token within each set, averaged over sets.

    Higher values mean more diverse sets. A set whose captions contain no
    tokens contributes 0.

    Raises:
        EmptySet: if no caption sets are given or any set is empty.
        ValueError: if n < 1.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not caption_sets:
        raise EmptySet("no caption sets")
    per_set = []
    for i, captions in enumerate(caption_sets):
        if not captions:
            raise EmptySet(f"caption set {i} is empty")
        tokens = each_tokens(captions)
        distinct: set[tuple] = set()
        total_tokens = 0
        for toks in tokens:
            distinct.update(ngram_counts(toks, n))
            total_tokens += len(toks)
        per_set.append(len(distinct) / total_tokens if total_tokens else 0.0)
    return math.fsum(per_set) / len(per_set)
