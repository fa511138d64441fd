"""Candidate scoring and ranking.

A caption's score is the mean of two signals from an image-text matcher:
the matching probability and the cosine similarity of the paired
embeddings. Backends either return both numbers directly or return the
embeddings and leave the cosine to us. Ranking sorts candidates by score
descending and exposes the top two for fusion.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence, runtime_checkable

from .corpus import Candidate, ImageEntry, iter_jsonl
from .errors import (
    BackendUnavailable,
    DimensionMismatch,
    EmptyGroup,
    EmptyInput,
    MalformedRecord,
    MissingScore,
    NotNormalized,
    OutOfRange,
    TooFewCandidates,
)

logger = logging.getLogger(__name__)

_NORM_TOL = 1e-6


@dataclass
class ItmScore:
    """Raw matcher outputs for one (image, caption) pair."""

    matching_probability: float
    cosine_similarity: float


@dataclass
class EmbeddingPair:
    """Unit-normalized image and text embeddings of equal dimension."""

    image: list[float]
    text: list[float]


@dataclass
class ScoredCaption:
    model_id: str
    text: str
    itm: ItmScore
    blip_score: float


@dataclass
class RankedSet:
    """Candidates of one image ordered by score.

    ``order`` holds indices into the scored list, best first. ``top2`` are
    the two best scored captions, the fusion inputs.
    """

    image_id: str
    order: list[int]
    top2: tuple[ScoredCaption, ScoredCaption]


@dataclass
class BackendScore:
    """What a backend knows about one pair.

    Either ``cosine_similarity`` is set (direct form) or ``embeddings`` is
    set (embedding form); ``matching_probability`` is always present.
    """

    matching_probability: float
    cosine_similarity: float | None = None
    embeddings: EmbeddingPair | None = None


@runtime_checkable
class ScorerBackend(Protocol):
    """Lookup or computation of matcher outputs for (image, caption) pairs."""

    max_concurrency: int | None

    def score(self, image: ImageEntry, candidate: Candidate) -> BackendScore | None:
        """Return the backend's score for the pair, or None if unknown."""
        ...


def _check_unit(vector: Sequence[float]) -> None:
    norm = math.sqrt(math.fsum(x * x for x in vector))
    if abs(norm - 1.0) > _NORM_TOL:
        raise NotNormalized(norm)


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    """Cosine similarity of two unit-normalized vectors.

    Raises:
        DimensionMismatch: if the vectors differ in length.
        NotNormalized: if either norm is off 1 by more than 1e-6.
    """
    if len(a) != len(b):
        raise DimensionMismatch(f"dimensions {len(a)} and {len(b)} differ")
    if not a:
        raise DimensionMismatch("vectors are empty")
    _check_unit(a)
    _check_unit(b)
    dot = math.fsum(x * y for x, y in zip(a, b))
    return max(-1.0, min(1.0, dot))


def blip_score(itm: ItmScore) -> float:
    """Mean of matching probability and cosine similarity.

    Raises:
        OutOfRange: if the probability is outside [0, 1] or the cosine is
            outside [-1, 1].
    """
    p = itm.matching_probability
    s = itm.cosine_similarity
    if not 0.0 <= p <= 1.0:
        raise OutOfRange("matching_probability", p)
    if not -1.0 <= s <= 1.0:
        raise OutOfRange("cosine_similarity", s)
    return (p + s) / 2.0


def score_candidates(
    image: ImageEntry,
    candidates: Sequence[Candidate],
    backend: ScorerBackend,
) -> list[ScoredCaption]:
    """Score every candidate of an image, preserving candidate order.

    Raises:
        MissingScore: if the backend has no answer for a pair.
        BackendUnavailable: passed through with image/model context.
    """
    scored: list[ScoredCaption] = []
    for cand in candidates:
        try:
            result = backend.score(image, cand)
        except BackendUnavailable as exc:
            raise BackendUnavailable(
                f"image {image.image_id!r}, model {cand.model_id!r}: {exc}"
            ) from exc
        if result is None:
            raise MissingScore(image.image_id, cand.model_id)
        if result.cosine_similarity is not None:
            similarity = result.cosine_similarity
        elif result.embeddings is not None:
            similarity = cosine(result.embeddings.image, result.embeddings.text)
        else:
            raise MissingScore(image.image_id, cand.model_id)
        itm = ItmScore(result.matching_probability, similarity)
        scored.append(ScoredCaption(cand.model_id, cand.text, itm, blip_score(itm)))
    return scored


def rank(scored: Sequence[ScoredCaption], image_id: str = "") -> RankedSet:
    """Order scored captions best-first; ties break by model_id ascending.

    Raises:
        TooFewCandidates: if fewer than two captions are given.
    """
    if len(scored) < 2:
        raise TooFewCandidates(image_id, len(scored))
    order = sorted(
        range(len(scored)),
        key=lambda i: (-scored[i].blip_score, scored[i].model_id),
    )
    return RankedSet(
        image_id=image_id,
        order=order,
        top2=(scored[order[0]], scored[order[1]]),
    )


def pair_frequency(ranked: Sequence[RankedSet]) -> dict[tuple[str, str], float]:
    """Percentage of images on which each unordered model pair is the top two.

    Raises:
        EmptyInput: if no ranked sets are given.
    """
    if not ranked:
        raise EmptyInput("pair_frequency needs at least one ranked set")
    counts: dict[tuple[str, str], int] = {}
    for entry in ranked:
        first, second = entry.top2
        key = tuple(sorted((first.model_id, second.model_id)))
        counts[key] = counts.get(key, 0) + 1
    total = len(ranked)
    return {pair: 100.0 * n / total for pair, n in sorted(counts.items())}


@dataclass
class ScoreSummary:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    mean: float


def _median(values: Sequence[float]) -> float:
    mid = len(values) // 2
    if len(values) % 2:
        return values[mid]
    return (values[mid - 1] + values[mid]) / 2.0


def score_distribution(
    groups: Mapping[str, Sequence[float]]
) -> dict[str, ScoreSummary]:
    """Five-number summary plus mean per model.

    Quartiles use the median-of-halves convention with the middle element
    excluded for odd counts, so [1, 2, 3, 4] gives q1=1.5, median=2.5,
    q3=3.5.

    Raises:
        EmptyGroup: if a model has no scores.
    """
    out: dict[str, ScoreSummary] = {}
    for model_id, values in groups.items():
        if not values:
            raise EmptyGroup(model_id)
        ordered = sorted(values)
        n = len(ordered)
        lower = ordered[: n // 2]
        upper = ordered[(n + 1) // 2 :]
        out[model_id] = ScoreSummary(
            min=ordered[0],
            q1=_median(lower) if lower else ordered[0],
            median=_median(ordered),
            q3=_median(upper) if upper else ordered[-1],
            max=ordered[-1],
            mean=math.fsum(ordered) / n,
        )
    return out


class FileScorerBackend:
    """Scores preloaded from a JSONL file.

    Lines come in two shapes, keyed by (image_id, model_id): the direct
    form carries ``matching_probability`` and ``cosine_similarity``; the
    embedding form carries ``matching_probability`` plus
    ``image_embedding`` and ``text_embedding``.
    """

    max_concurrency: int | None = None

    def __init__(self, path: str):
        self._table: dict[tuple[str, str], BackendScore] = {}
        for line_no, record in iter_jsonl(path):
            try:
                image_id = record["image_id"]
                model_id = record["model_id"]
                p = float(record["matching_probability"])
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedRecord(line_no, f"bad score record: {exc}") from exc
            if "cosine_similarity" in record:
                entry = BackendScore(p, cosine_similarity=float(record["cosine_similarity"]))
            elif "image_embedding" in record and "text_embedding" in record:
                entry = BackendScore(
                    p,
                    embeddings=EmbeddingPair(
                        [float(x) for x in record["image_embedding"]],
                        [float(x) for x in record["text_embedding"]],
                    ),
                )
            else:
                raise MalformedRecord(
                    line_no, "score record has neither similarity nor embeddings"
                )
            self._table[(image_id, model_id)] = entry

    def score(self, image: ImageEntry, candidate: Candidate) -> BackendScore | None:
        return self._table.get((image.image_id, candidate.model_id))


class RemoteScorerBackend:
    """Scorer served over HTTP: POST {image_uri, caption} to an endpoint."""

    def __init__(
        self,
        url: str,
        timeout: float = 30.0,
        max_concurrency: int | None = 4,
        session=None,
    ):
        import requests

        self.url = url
        self.timeout = timeout
        self.max_concurrency = max_concurrency
        self._session = session or requests.Session()
        self._requests = requests

    def score(self, image: ImageEntry, candidate: Candidate) -> BackendScore | None:
        try:
            response = self._session.post(
                self.url,
                json={"image_uri": image.uri, "caption": candidate.text},
                timeout=self.timeout,
            )
        except self._requests.RequestException as exc:
            raise BackendUnavailable(str(exc)) from exc
        if response.status_code // 100 != 2:
            raise BackendUnavailable(f"scorer returned HTTP {response.status_code}")
        try:
            body = response.json()
            return BackendScore(
                matching_probability=float(body["matching_probability"]),
                cosine_similarity=float(body["cosine_similarity"]),
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise BackendUnavailable(f"malformed scorer response: {exc}") from exc
