"""Blinded human preference study over caption candidates.

Workers see an image and a shuffled list of captions under opaque nonce
keys; which model produced which caption never leaves the server. Votes
append to a JSONL log with the model resolved server-side, so summaries
survive restarts while outstanding ballots deliberately do not (a ballot
issued before a restart is gone, the worker just fetches a new one).
"""

from __future__ import annotations

import json
import threading
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .corpus import ImageEntry
from .errors import (
    ClassQuotaExceeded,
    DuplicateVote,
    EmptyInput,
    InvalidChoice,
    TooFewOptions,
    UnknownBallot,
    UnresolvableKey,
)
from .rng import SplitMix64

WORKER_CLASSES = ("generic", "expert")
DEFAULT_CLASS_QUOTA = 3


@dataclass
class BallotOption:
    option_key: str
    text: str


@dataclass
class Ballot:
    ballot_id: str
    image_id: str
    image_uri: str
    options: list[BallotOption]
    worker_id: str
    worker_class: str

    def public_dict(self) -> dict:
        """Wire form of the ballot; carries no model identifiers."""
        return {
            "ballot_id": self.ballot_id,
            "image_id": self.image_id,
            "image_uri": self.image_uri,
            "options": [
                {"option_key": o.option_key, "text": o.text} for o in self.options
            ],
            "worker": self.worker_id,
            "class": self.worker_class,
        }


@dataclass
class Vote:
    ballot_id: str
    worker_id: str
    worker_class: str
    choice: str
    timestamp: float = 0.0


def make_ballot(
    image_id: str,
    image_uri: str,
    captions_by_model: Mapping[str, str],
    rng: SplitMix64,
    worker_id: str = "",
    worker_class: str = "generic",
) -> tuple[Ballot, dict[str, str]]:
    """Build a blinded ballot for one image.

    Captions enter in sorted model order and are then shuffled, so the
    on-screen position carries no information about the model. Returns
    the ballot plus the private option_key -> model_id mapping, which the
    caller must keep server-side.

    Raises:
        TooFewOptions: with fewer than two captions.
    """
    if len(captions_by_model) < 2:
        raise TooFewOptions(
            f"image {image_id!r} has {len(captions_by_model)} caption(s)"
        )
    ballot_id = f"ballot-{rng.next():016x}"
    options: list[BallotOption] = []
    key_to_model: dict[str, str] = {}
    for model_id in sorted(captions_by_model):
        key = f"{rng.next():016x}"
        options.append(BallotOption(key, captions_by_model[model_id]))
        key_to_model[key] = model_id
    rng.shuffle(options)
    ballot = Ballot(ballot_id, image_id, image_uri, options, worker_id, worker_class)
    return ballot, key_to_model


class VoteStore:
    """Ballot registry plus an append-only vote log.

    Records are plain JSON objects, one per line, with the chosen model
    resolved at write time. When constructed over an existing log the
    aggregate state (quotas, per-worker history) is rebuilt from it.
    """

    def __init__(self, path: str | None = None, quota: int = DEFAULT_CLASS_QUOTA):
        self.path = path
        self.quota = quota
        self.lock = threading.Lock()
        self.records: list[dict] = []
        self._ballots: dict[str, tuple[Ballot, dict[str, str]]] = {}
        self._answered: set[str] = set()
        self._class_counts: Counter = Counter()
        self._worker_images: set[tuple[str, str]] = set()
        if path:
            self._replay(path)

    def _replay(self, path: str) -> None:
        try:
            fh = open(path, encoding="utf-8")
        except FileNotFoundError:
            return
        with fh:
            for line in fh:
                if not line.strip():
                    continue
                record = json.loads(line)
                self._absorb(record)

    def _absorb(self, record: dict) -> None:
        self.records.append(record)
        self._class_counts[(record["image_id"], record["worker_class"])] += 1
        self._worker_images.add((record["worker_id"], record["image_id"]))

    def register(self, ballot: Ballot, key_to_model: Mapping[str, str]) -> None:
        with self.lock:
            self._ballots[ballot.ballot_id] = (ballot, dict(key_to_model))

    def class_count(self, image_id: str, worker_class: str) -> int:
        return self._class_counts[(image_id, worker_class)]

    def has_voted(self, worker_id: str, image_id: str) -> bool:
        return (worker_id, image_id) in self._worker_images

    def _append(self, record: dict) -> None:
        if self.path:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
                fh.flush()
        self._absorb(record)


def record_vote(vote: Vote, store: VoteStore) -> dict:
    """Validate and persist one vote; returns the stored record.

    Raises:
        UnknownBallot: the ballot was never issued (or predates a restart).
        DuplicateVote: the ballot was already answered, or this worker
            already voted on this image (any worker class).
        InvalidChoice: the choice is not an option key of the ballot.
        ClassQuotaExceeded: the image already holds the per-class quota.
    """
    with store.lock:
        issued = store._ballots.get(vote.ballot_id)
        if issued is None:
            raise UnknownBallot(vote.ballot_id)
        ballot, key_to_model = issued
        if vote.worker_id and vote.worker_id != ballot.worker_id:
            raise UnknownBallot(vote.ballot_id)
        if vote.ballot_id in store._answered:
            raise DuplicateVote(f"ballot {vote.ballot_id!r} was already answered")
        if store.has_voted(ballot.worker_id, ballot.image_id):
            raise DuplicateVote(
                f"worker {ballot.worker_id!r} already voted on image "
                f"{ballot.image_id!r}"
            )
        if vote.choice not in key_to_model:
            raise InvalidChoice(vote.choice)
        if store.class_count(ballot.image_id, ballot.worker_class) >= store.quota:
            raise ClassQuotaExceeded(
                ballot.image_id, ballot.worker_class, store.quota
            )
        record = {
            "ballot_id": vote.ballot_id,
            "image_id": ballot.image_id,
            "worker_id": ballot.worker_id,
            "worker_class": ballot.worker_class,
            "choice": vote.choice,
            "model_id": key_to_model[vote.choice],
            "timestamp": vote.timestamp or time.time(),
        }
        store._answered.add(vote.ballot_id)
        store._append(record)
        return record


@dataclass
class ModelVotes:
    model_id: str
    generic_count: int
    expert_count: int
    generic_pct: float
    expert_pct: float | None
    average_pct: float


@dataclass
class VoteSummary:
    rows: dict[str, ModelVotes]
    generic_total: int
    expert_total: int

    @property
    def has_expert(self) -> bool:
        return self.expert_total > 0


def summarize_votes(
    votes: Sequence[Vote], key_to_model: Mapping[str, str]
) -> VoteSummary:
    """Aggregate votes into per-model percentages by worker class.

    Percentages are per class (each class column sums to 100). The
    average column is the mean of the two class percentages; with no
    expert votes the expert column is absent and the average falls back
    to the generic percentage. A class with no votes never drags the
    average down, so the average column always sums to 100 as well.

    Raises:
        EmptyInput: with no votes.
        UnresolvableKey: if a choice has no model mapping.
    """
    if not votes:
        raise EmptyInput("no votes to summarize")
    counts: Counter = Counter()
    class_totals: Counter = Counter()
    for vote in votes:
        model = key_to_model.get(vote.choice)
        if model is None:
            raise UnresolvableKey(vote.choice)
        counts[(model, vote.worker_class)] += 1
        class_totals[vote.worker_class] += 1
    generic_total = class_totals["generic"]
    expert_total = class_totals["expert"]
    rows: dict[str, ModelVotes] = {}
    for model in sorted(set(key_to_model.values())):
        g_count = counts[(model, "generic")]
        e_count = counts[(model, "expert")]
        g_pct = 100.0 * g_count / generic_total if generic_total else 0.0
        e_pct = 100.0 * e_count / expert_total if expert_total else None
        if e_pct is None:
            avg = g_pct
        elif not generic_total:
            avg = e_pct
        else:
            avg = (g_pct + e_pct) / 2.0
        rows[model] = ModelVotes(model, g_count, e_count, g_pct, e_pct, avg)
    return VoteSummary(rows, generic_total, expert_total)


def agreement_histogram(
    votes_by_image: Mapping[str, Iterable[str]]
) -> dict[int, int]:
    """Histogram of per-image agreement.

    For each image the agreement level is the largest number of votes any
    single model received. Images with no votes are skipped.
    """
    histogram: Counter = Counter()
    for _, models in sorted(votes_by_image.items()):
        counts = Counter(models)
        if counts:
            histogram[max(counts.values())] += 1
    return dict(sorted(histogram.items()))


class StudyService:
    """Task issuance and vote collection for one study.

    Tasks walk the corpus in order, skipping images whose per-class quota
    is met or that the requesting worker already voted on. Every issued
    ballot gets fresh nonce keys from the service RNG.
    """

    def __init__(
        self,
        entries: Sequence[ImageEntry],
        options_by_image: Mapping[str, Mapping[str, str]],
        store: VoteStore,
        rng: SplitMix64 | None = None,
    ):
        self.entries = list(entries)
        self.options_by_image = {k: dict(v) for k, v in options_by_image.items()}
        self.store = store
        self.rng = rng or SplitMix64()
        self._by_id = {e.image_id: e for e in self.entries}
        models = sorted({
            m for opts in self.options_by_image.values() for m in opts
        })
        self._alias = {
            model: f"model-{i + 1:02d}" for i, model in enumerate(models)
        }

    def next_task(self, worker_id: str, worker_class: str) -> Ballot | None:
        """Issue a ballot for the first eligible image, or None."""
        if worker_class not in WORKER_CLASSES:
            raise ValueError(f"unknown worker class {worker_class!r}")
        if not worker_id:
            raise ValueError("worker id must be non-empty")
        with self.store.lock:
            for entry in self.entries:
                options = self.options_by_image.get(entry.image_id)
                if not options or len(options) < 2:
                    continue
                if self.store.class_count(entry.image_id, worker_class) >= self.store.quota:
                    continue
                if self.store.has_voted(worker_id, entry.image_id):
                    continue
                ballot, key_to_model = make_ballot(
                    entry.image_id, entry.uri, options, self.rng,
                    worker_id, worker_class,
                )
                self.store._ballots[ballot.ballot_id] = (ballot, key_to_model)
                return ballot
        return None

    def submit(self, ballot_id: str, choice: str) -> dict:
        """Record a vote on a previously issued ballot."""
        return record_vote(Vote(ballot_id, "", "", choice), self.store)

    def blinded_results(self) -> dict:
        """Aggregate results with model identities replaced by aliases."""
        records = self.store.records
        counts: Counter = Counter()
        class_totals: Counter = Counter()
        for record in records:
            counts[(record["model_id"], record["worker_class"])] += 1
            class_totals[record["worker_class"]] += 1
        summary = {}
        for model, alias in self._alias.items():
            g = counts[(model, "generic")]
            e = counts[(model, "expert")]
            g_pct = 100.0 * g / class_totals["generic"] if class_totals["generic"] else 0.0
            e_pct = 100.0 * e / class_totals["expert"] if class_totals["expert"] else None
            if e_pct is None:
                avg = g_pct
            elif not class_totals["generic"]:
                avg = e_pct
            else:
                avg = (g_pct + e_pct) / 2.0
            summary[alias] = {
                "generic_pct": g_pct,
                "expert_pct": e_pct,
                "average_pct": avg,
                "votes": g + e,
            }
        by_image: dict[str, list[str]] = {}
        for record in records:
            by_image.setdefault(record["image_id"], []).append(record["model_id"])
        return {
            "summary": summary,
            "votes_total": len(records),
            "class_totals": {
                "generic": class_totals["generic"],
                "expert": class_totals["expert"],
            },
            "agreement": {
                str(level): n
                for level, n in agreement_histogram(by_image).items()
            },
        }

    def true_summary(self) -> VoteSummary:
        """Per-model summary with real identities; offline use only."""
        votes = [
            Vote(
                ballot_id=record["ballot_id"],
                worker_id=record["worker_id"],
                worker_class=record["worker_class"],
                choice=record["model_id"],
                timestamp=record["timestamp"],
            )
            for record in self.store.records
        ]
        identity = {record["model_id"]: record["model_id"] for record in self.store.records}
        for model in self._alias:
            identity[model] = model
        return summarize_votes(votes, identity)
