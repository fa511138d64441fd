"""Corpus records, JSONL loading and deterministic splits."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .errors import (
    DuplicateId,
    DuplicateImageId,
    DuplicateModelId,
    MalformedRecord,
    SizeMismatch,
)
from .rng import SplitMix64

logger = logging.getLogger(__name__)


@dataclass
class ImageEntry:
    """One corpus image with its reference captions."""

    image_id: str
    uri: str
    ground_truths: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "uri": self.uri,
            "ground_truths": list(self.ground_truths),
        }


@dataclass
class Candidate:
    """A caption proposed for an image by one captioning model."""

    model_id: str
    text: str

    def to_dict(self) -> dict:
        return {"model_id": self.model_id, "text": self.text}


@dataclass
class CandidateSet:
    """All candidate captions for one image."""

    image_id: str
    candidates: list[Candidate] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "candidates": [c.to_dict() for c in self.candidates],
        }


@dataclass
class Splits:
    """Disjoint id lists produced by :func:`make_splits`."""

    seed: int
    train: list[str]
    val: list[str]
    test: list[str]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "train": list(self.train),
            "val": list(self.val),
            "test": list(self.test),
        }


def iter_jsonl(path: str) -> Iterator[tuple[int, dict]]:
    """Yield (line_no, record) pairs; blank lines are skipped.

    Raises:
        MalformedRecord: if a line is not a JSON object.
    """
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise MalformedRecord(line_no, "record is not an object")
            yield line_no, record


def write_jsonl(path: str, records: Iterable[dict]) -> int:
    """Write records as one JSON object per line; returns the count."""
    count = 0
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False))
            fh.write("\n")
            count += 1
    os.replace(tmp, path)
    return count


def _require_str(record: dict, key: str, line_no: int) -> str:
    value = record.get(key)
    if not isinstance(value, str) or not value:
        raise MalformedRecord(line_no, f"field {key!r} must be a non-empty string")
    return value


def load_corpus(path: str) -> list[ImageEntry]:
    """Load corpus entries from a JSONL file.

    Each line must carry a unique ``image_id``, a ``uri`` and a non-empty
    ``ground_truths`` list of non-empty strings.

    Raises:
        MalformedRecord: on any structurally invalid line.
        DuplicateImageId: if an image_id repeats.
    """
    entries: list[ImageEntry] = []
    seen: set[str] = set()
    for line_no, record in iter_jsonl(path):
        image_id = _require_str(record, "image_id", line_no)
        uri = _require_str(record, "uri", line_no)
        truths = record.get("ground_truths")
        if not isinstance(truths, list) or not truths:
            raise MalformedRecord(
                line_no, "field 'ground_truths' must be a non-empty list"
            )
        for truth in truths:
            if not isinstance(truth, str) or not truth.strip():
                raise MalformedRecord(
                    line_no, "ground truths must be non-empty strings"
                )
        if image_id in seen:
            raise DuplicateImageId(image_id)
        seen.add(image_id)
        entries.append(ImageEntry(image_id, uri, list(truths)))
    logger.info("loaded %d corpus entries from %s", len(entries), path)
    return entries


def load_candidates(path: str) -> list[CandidateSet]:
    """Load per-image candidate captions from a JSONL file.

    Raises:
        MalformedRecord: on any structurally invalid line.
        DuplicateImageId: if an image_id repeats across lines.
        DuplicateModelId: if a model_id repeats within one image.
    """
    sets: list[CandidateSet] = []
    seen_images: set[str] = set()
    for line_no, record in iter_jsonl(path):
        image_id = _require_str(record, "image_id", line_no)
        if image_id in seen_images:
            raise DuplicateImageId(image_id)
        seen_images.add(image_id)
        raw = record.get("candidates")
        if not isinstance(raw, list) or not raw:
            raise MalformedRecord(
                line_no, "field 'candidates' must be a non-empty list"
            )
        candidates: list[Candidate] = []
        models: set[str] = set()
        for item in raw:
            if not isinstance(item, dict):
                raise MalformedRecord(line_no, "candidate entries must be objects")
            model_id = _require_str(item, "model_id", line_no)
            text = _require_str(item, "text", line_no)
            if model_id in models:
                raise DuplicateModelId(image_id, model_id)
            models.add(model_id)
            candidates.append(Candidate(model_id, text))
        sets.append(CandidateSet(image_id, candidates))
    logger.info("loaded candidates for %d images from %s", len(sets), path)
    return sets


def candidates_by_image(sets: Sequence[CandidateSet]) -> dict[str, CandidateSet]:
    return {s.image_id: s for s in sets}


def make_splits(ids: Sequence[str], sizes: tuple[int, int, int], seed: int) -> Splits:
    """Partition ids into train/val/test via a seeded uniform shuffle.

    The shuffle is SplitMix64 + Fisher-Yates, so the same (ids, sizes, seed)
    triple yields the same partition on any platform. The three splits are
    disjoint, preserve no input order, and their sizes match ``sizes``
    exactly.

    Raises:
        DuplicateId: if ids contains repeats.
        SizeMismatch: if sizes do not sum to len(ids) or any size is negative.
    """
    if len(set(ids)) != len(ids):
        raise DuplicateId("split input contains duplicate ids")
    n_train, n_val, n_test = sizes
    if min(sizes) < 0 or n_train + n_val + n_test != len(ids):
        raise SizeMismatch(
            f"sizes {sizes} do not partition {len(ids)} ids"
        )
    order = list(ids)
    SplitMix64(seed).shuffle(order)
    return Splits(
        seed=seed,
        train=order[:n_train],
        val=order[n_train : n_train + n_val],
        test=order[n_train + n_val :],
    )


def save_splits(path: str, splits: Splits) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(splits.to_dict(), fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def load_splits(path: str) -> Splits:
    with open(path, encoding="utf-8") as fh:
        record = json.load(fh)
    try:
        return Splits(
            seed=int(record["seed"]),
            train=list(record["train"]),
            val=list(record["val"]),
            test=list(record["test"]),
        )
    except (KeyError, TypeError) as exc:
        raise MalformedRecord(0, f"invalid splits file: {exc}") from exc
