import json
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from capfuse.corpus import Candidate, CandidateSet, ImageEntry


MODELS = ["blip2", "expnet-v2", "git", "ofa", "vit-gpt2"]

# Per-image candidate captions and precomputed matcher outputs. Scores are
# arranged so that each image has a clear winner and runner-up and one image
# (img-3) has a collapsed top-2 pair.
FIXTURE = {
    "img-1": {
        "truths": [
            "a bunch of stuffed animals sitting around an open book",
            "several plush toys gathered next to a book on a bed",
        ],
        "captions": {
            "blip2": "A bunch of stuffed animals sitting around a book.",
            "ofa": "Stuffed animals gathered around an open book.",
            "git": "a group of teddy bears on a bed",
            "expnet-v2": "some stuffed toys near a book",
            "vit-gpt2": "a cat laying on a couch",
        },
        "scores": {
            "blip2": (0.9907, 0.4846),
            "ofa": (0.9745, 0.4891),
            "git": (0.7402, 0.4180),
            "expnet-v2": (0.5186, 0.4272),
            "vit-gpt2": (0.0689, 0.3646),
        },
    },
    "img-2": {
        "truths": [
            "a metal cup filled with scissors and spoons",
            "utensils and scissors stored in a steel cup",
        ],
        "captions": {
            "blip2": "A metal cup filled with scissors.",
            "ofa": "A cup holding utensils such as spoons.",
            "git": "a container with tools on a table",
            "expnet-v2": "scissors in a metal cup",
            "vit-gpt2": "a vase with flowers on a table",
        },
        "scores": {
            "blip2": (0.9120, 0.5011),
            "ofa": (0.9473, 0.4702),
            "git": (0.6233, 0.4105),
            "expnet-v2": (0.7004, 0.4513),
            "vit-gpt2": (0.1277, 0.3310),
        },
    },
    "img-3": {
        "truths": [
            "a giraffe standing in the middle of a grassy field",
            "a single giraffe stands in an open field",
        ],
        "captions": {
            "blip2": "a giraffe standing in the middle of a field",
            "ofa": "A giraffe standing in the middle of a field.",
            "git": "a giraffe in a zoo enclosure",
            "expnet-v2": "a tall giraffe near some trees",
            "vit-gpt2": "a horse grazing in a field",
        },
        "scores": {
            "blip2": (0.9310, 0.5102),
            "ofa": (0.9288, 0.5001),
            "git": (0.8104, 0.4410),
            "expnet-v2": (0.7751, 0.4388),
            "vit-gpt2": (0.3009, 0.3811),
        },
    },
    "img-4": {
        "truths": [
            "two ducks swimming together in a small pond",
            "a pair of ducks float on calm water",
        ],
        "captions": {
            "blip2": "Two ducks swimming in a pond.",
            "ofa": "A pair of ducks floating on the water.",
            "git": "birds swimming in water",
            "expnet-v2": "two ducks on a pond",
            "vit-gpt2": "a dog running on grass",
        },
        "scores": {
            "blip2": (0.9622, 0.5240),
            "ofa": (0.9101, 0.4933),
            "git": (0.8412, 0.4821),
            "expnet-v2": (0.8933, 0.4612),
            "vit-gpt2": (0.2204, 0.3509),
        },
    },
}

IMAGE_IDS = list(FIXTURE)


def corpus_entries() -> list[ImageEntry]:
    return [
        ImageEntry(image_id, f"images/{image_id}.jpg", list(item["truths"]))
        for image_id, item in FIXTURE.items()
    ]


def candidate_sets() -> list[CandidateSet]:
    return [
        CandidateSet(
            image_id,
            [Candidate(m, item["captions"][m]) for m in MODELS],
        )
        for image_id, item in FIXTURE.items()
    ]


def score_rows(include_fused: bool = False) -> list[dict]:
    rows = []
    for image_id, item in FIXTURE.items():
        for model in MODELS:
            p, s = item["scores"][model]
            rows.append({
                "image_id": image_id,
                "model_id": model,
                "matching_probability": p,
                "cosine_similarity": s,
            })
    if include_fused:
        for image_id in FIXTURE:
            rows.append({
                "image_id": image_id,
                "model_id": "fusion",
                "matching_probability": 0.95,
                "cosine_similarity": 0.52,
            })
    return rows


@pytest.fixture
def workspace(tmp_path):
    """Corpus, candidates and scores written to disk plus a run config."""
    corpus_path = tmp_path / "corpus.jsonl"
    with corpus_path.open("w") as fh:
        for entry in corpus_entries():
            fh.write(json.dumps(entry.to_dict()) + "\n")
    candidates_path = tmp_path / "candidates.jsonl"
    with candidates_path.open("w") as fh:
        for cand_set in candidate_sets():
            fh.write(json.dumps(cand_set.to_dict()) + "\n")
    scores_path = tmp_path / "scores.jsonl"
    with scores_path.open("w") as fh:
        for row in score_rows(include_fused=True):
            fh.write(json.dumps(row) + "\n")
    config = {
        "paths": {
            "corpus": str(corpus_path),
            "candidates": str(candidates_path),
            "out_dir": str(tmp_path / "out"),
        },
        "scorer": {"backend": "file", "path": str(scores_path)},
        "fusion": {"client": "mock", "backoff_base": 0.0},
        "seeds": {"split": 7, "study": 11},
        "workers": 2,
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config, indent=2))
    return {
        "dir": tmp_path,
        "corpus": str(corpus_path),
        "candidates": str(candidates_path),
        "scores": str(scores_path),
        "config": str(config_path),
        "out": str(tmp_path / "out"),
    }
