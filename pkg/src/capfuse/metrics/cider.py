"""Consensus-based caption scoring over TF-IDF n-gram vectors.

Each image's references contribute to a document frequency table (one
document per image). Candidate and reference captions become TF-IDF
vectors per n-gram order 1..4 with idf = log(|I|) - log(max(1, df)).
The default variant clips candidate term frequencies at the reference's
(so stuffing a matched n-gram cannot inflate the score) and applies a
Gaussian penalty on the token length difference with sigma = 6. Per-image
scores average the per-order cosines over references, scaled by 10; the
corpus score is the mean over images.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from typing import Sequence

from ..errors import EmptyCandidateList, EmptyReferenceSet, LengthMismatch
from .ngrams import all_ngram_counts
from .tokenizer import as_tokens, each_tokens

SIGMA = 6.0
MAX_N = 4

Tokensish = "Sequence[str]"


def _vectorize(
    counts: dict[int, Counter], df: dict[tuple, float], log_corpus: float
) -> tuple[dict[int, dict[tuple, float]], list[float], int]:
    """TF-IDF vectors per order plus squared norms and the token length."""
    vec: dict[int, dict[tuple, float]] = {n: {} for n in range(1, MAX_N + 1)}
    norm_sq = [0.0] * (MAX_N + 1)
    for n in range(1, MAX_N + 1):
        for gram, count in counts[n].items():
            idf = log_corpus - math.log(max(1.0, df.get(gram, 0.0)))
            weight = count * idf
            vec[n][gram] = weight
            norm_sq[n] += weight * weight
    length = sum(counts[1].values())
    return vec, norm_sq, length


def _similarity(
    cand_vec, cand_norm_sq, cand_len, ref_vec, ref_norm_sq, ref_len, clip: bool, sigma: float
) -> list[float]:
    """Per-order cosine of candidate and reference vectors."""
    delta = float(cand_len - ref_len)
    sims = []
    for n in range(1, MAX_N + 1):
        num = 0.0
        rv = ref_vec[n]
        for gram, weight in cand_vec[n].items():
            if gram in rv:
                w = min(weight, rv[gram]) if clip else weight
                num += w * rv[gram]
        denom_sq = cand_norm_sq[n] * ref_norm_sq[n]
        sim = num / math.sqrt(denom_sq) if denom_sq > 0 else 0.0
        if clip:
            sim *= math.exp(-(delta * delta) / (2.0 * sigma * sigma))
        sims.append(sim)
    return sims


def cider(
    candidates: Sequence[Tokensish],
    references: Sequence[Sequence[Tokensish]],
    variant: str = "cider-d",
    sigma: float = SIGMA,
) -> float:
    """Corpus score of candidates against per-image reference sets.

    Args:
        candidates: one token stream per image.
        references: one non-empty list of token streams per image.
        variant: "cider-d" (clipped counts, length penalty) or "cider"
            (plain TF-IDF cosine).
        sigma: width of the length penalty (cider-d only).

    Returns:
        Mean per-image score, scaled by 10.

    Raises:
        EmptyCandidateList: if there are no candidates.
        LengthMismatch: if candidates and references differ in length.
        EmptyReferenceSet: if any image has no references.
        ValueError: on an unknown variant.
    """
    if variant not in ("cider-d", "cider"):
        raise ValueError(f"unknown variant {variant!r}")
    if not candidates:
        raise EmptyCandidateList("no candidates")
    if len(candidates) != len(references):
        raise LengthMismatch(
            f"{len(candidates)} candidates vs {len(references)} reference sets"
        )
    clip = variant == "cider-d"
    cand_tokens = [as_tokens(c) for c in candidates]
    ref_tokens: list[list[list[str]]] = []
    for i, refs in enumerate(references):
        if not refs:
            raise EmptyReferenceSet(i)
        ref_tokens.append(each_tokens(refs))

    # One document per image: every distinct reference n-gram counts once.
    df: dict[tuple, float] = defaultdict(float)
    ref_counts_per_image = []
    for refs in ref_tokens:
        counts_list = [all_ngram_counts(r, MAX_N) for r in refs]
        ref_counts_per_image.append(counts_list)
        seen: set[tuple] = set()
        for counts in counts_list:
            for n in range(1, MAX_N + 1):
                seen.update(counts[n])
        for gram in seen:
            df[gram] += 1.0

    log_corpus = math.log(float(len(candidates)))
    total = 0.0
    for cand, ref_counts in zip(cand_tokens, ref_counts_per_image):
        c_vec, c_norm_sq, c_len = _vectorize(all_ngram_counts(cand, MAX_N), df, log_corpus)
        per_n = [0.0] * MAX_N
        for counts in ref_counts:
            r_vec, r_norm_sq, r_len = _vectorize(counts, df, log_corpus)
            sims = _similarity(
                c_vec, c_norm_sq, c_len, r_vec, r_norm_sq, r_len, clip, sigma
            )
            for n in range(MAX_N):
                per_n[n] += sims[n]
        image_score = math.fsum(s / len(ref_counts) for s in per_n) / MAX_N
        total += image_score * 10.0
    return total / len(candidates)
