"""Brute-force reference implementations used to cross-check the metrics.

Deliberately written in the most literal way possible (nested loops,
explicit dictionaries, Fractions for the count ratios) so they share no
code or structure with the package implementations.
"""

from __future__ import annotations

import math
from fractions import Fraction


def grams(tokens, n):
    out = []
    for i in range(len(tokens)):
        if i + n <= len(tokens):
            out.append(tuple(tokens[i : i + n]))
    return out


def count(items):
    table = {}
    for item in items:
        table[item] = table.get(item, 0) + 1
    return table


def clipped_precision(candidate, references, n):
    """(matched, total) clipped n-gram counts for one segment."""
    cand_counts = count(grams(candidate, n))
    matched = 0
    for gram, c in cand_counts.items():
        best = 0
        for ref in references:
            r = count(grams(ref, n)).get(gram, 0)
            if r > best:
                best = r
        matched += min(c, best)
    return matched, sum(cand_counts.values())


def oracle_bleu_corpus(candidates, references, max_n=4):
    numerators = [0] * max_n
    denominators = [0] * max_n
    cand_len = 0
    ref_len = 0
    for cand, refs in zip(candidates, references):
        cand_len += len(cand)
        shortest = None
        for ref in refs:
            if shortest is None or len(ref) < shortest:
                shortest = len(ref)
        ref_len += shortest
        for n in range(1, max_n + 1):
            m, t = clipped_precision(cand, refs, n)
            numerators[n - 1] += m
            denominators[n - 1] += t
    product = Fraction(1)
    for m, t in zip(numerators, denominators):
        if m == 0 or t == 0:
            return 0.0
        product *= Fraction(m, t)
    geo = float(product) ** (1.0 / max_n)
    if cand_len == 0:
        return 0.0
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return bp * geo


def oracle_bleu_sentence(candidate, references, max_n=4, epsilon=1e-9):
    if len(candidate) == 0:
        return 0.0
    logs = 0.0
    for n in range(1, max_n + 1):
        m, t = clipped_precision(candidate, references, n)
        p = m / t if t > 0 else 0.0
        if p < epsilon:
            p = epsilon
        logs += math.log(p)
    shortest = min(len(ref) for ref in references)
    bp = 1.0 if len(candidate) > shortest else math.exp(1.0 - shortest / len(candidate))
    return bp * math.exp(logs / max_n)


def oracle_cider(candidates, references, variant="cider-d", sigma=6.0, max_n=4):
    n_images = len(candidates)
    doc_freq = {}
    for refs in references:
        seen = set()
        for ref in refs:
            for n in range(1, max_n + 1):
                for gram in grams(ref, n):
                    seen.add(gram)
        for gram in seen:
            doc_freq[gram] = doc_freq.get(gram, 0) + 1

    def tfidf(tokens, n):
        vec = {}
        for gram, c in count(grams(tokens, n)).items():
            df = doc_freq.get(gram, 0)
            if df < 1:
                df = 1
            vec[gram] = c * (math.log(n_images) - math.log(df))
        return vec

    total = 0.0
    for cand, refs in zip(candidates, references):
        per_image = 0.0
        for n in range(1, max_n + 1):
            acc = 0.0
            for ref in refs:
                cv = tfidf(cand, n)
                rv = tfidf(ref, n)
                num = 0.0
                for gram, w in cv.items():
                    if gram in rv:
                        if variant == "cider-d":
                            num += min(w, rv[gram]) * rv[gram]
                        else:
                            num += w * rv[gram]
                nc = sum(w * w for w in cv.values())
                nr = sum(w * w for w in rv.values())
                sim = num / math.sqrt(nc * nr) if nc > 0 and nr > 0 else 0.0
                if variant == "cider-d":
                    delta = len(cand) - len(ref)
                    sim *= math.exp(-(delta ** 2) / (2 * sigma ** 2))
                acc += sim
            per_image += acc / len(refs)
        total += (per_image / max_n) * 10.0
    return total / n_images


def oracle_mbleu(caption_sets):
    per_set = []
    for captions in caption_sets:
        values = []
        for i in range(len(captions)):
            rest = [captions[j] for j in range(len(captions)) if j != i]
            values.append(oracle_bleu_sentence(captions[i], rest))
        per_set.append(sum(values) / len(values))
    return sum(per_set) / len(per_set)


def oracle_div_n(caption_sets, n):
    per_set = []
    for captions in caption_sets:
        distinct = set()
        tokens = 0
        for caption in captions:
            tokens += len(caption)
            for gram in grams(caption, n):
                distinct.add(gram)
        per_set.append(len(distinct) / tokens if tokens else 0.0)
    return sum(per_set) / len(per_set)


def oracle_quartiles(values):
    """(q1, median, q3) by splitting around the median, middle excluded."""
    ordered = sorted(values)
    n = len(ordered)

    def mid(xs):
        k = len(xs)
        if k % 2 == 1:
            return float(xs[k // 2])
        return (xs[k // 2 - 1] + xs[k // 2]) / 2.0

    if n == 1:
        return float(ordered[0]), float(ordered[0]), float(ordered[0])
    half = n // 2
    lower = ordered[:half]
    upper = ordered[-half:]
    return mid(lower), mid(ordered), mid(upper)
