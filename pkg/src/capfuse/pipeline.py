"""End-to-end orchestration: score, rank, fuse, evaluate.

Work is parallel per image but every output file is written in corpus
order, so repeated runs over the same inputs produce byte-identical
ranked/fused/report files. Runs resume by default: images already in
fused.jsonl are not recomputed unless forced. When an image fails, the
successes are persisted before the failure propagates.
"""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone

from .config import RunConfig, config_hash
from .corpus import (
    Candidate,
    CandidateSet,
    ImageEntry,
    candidates_by_image,
    iter_jsonl,
    load_candidates,
    load_corpus,
    write_jsonl,
)
from .errors import (
    CapfuseError,
    ConfigError,
    KeyMismatch,
    PipelineStageError,
)
from .fuser import FusionConfig, HttpFusionClient, MockFusionClient, fuse
from .metrics.report import eval_report, render_markdown
from .scorer import (
    FileScorerBackend,
    RemoteScorerBackend,
    ScoredCaption,
    rank,
    score_candidates,
)

logger = logging.getLogger(__name__)


@dataclass
class Manifest:
    config_hash: str
    run_count: int
    seeds: dict
    counts: dict
    started: str
    elapsed_s: float

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "run_count": self.run_count,
            "seeds": self.seeds,
            "counts": self.counts,
            "started": self.started,
            "elapsed_s": self.elapsed_s,
        }


def build_backend(cfg: RunConfig):
    if cfg.scorer.backend == "file":
        if not cfg.scorer.path:
            raise ConfigError("file scorer needs scorer.path")
        return FileScorerBackend(cfg.scorer.path)
    return RemoteScorerBackend(
        cfg.scorer.url,
        timeout=cfg.scorer.timeout,
        max_concurrency=cfg.scorer.max_concurrency,
    )


def build_fusion_client(cfg: RunConfig):
    if cfg.fusion.client == "mock":
        if cfg.fusion.rules:
            return MockFusionClient.from_file(cfg.fusion.rules)
        return MockFusionClient()
    return HttpFusionClient(cfg.fusion.url, timeout=cfg.fusion.timeout)


def fusion_config(cfg: RunConfig) -> FusionConfig:
    return FusionConfig(
        template=cfg.fusion.template,
        temperature=cfg.fusion.temperature,
        max_tokens=cfg.fusion.max_tokens,
        retries=cfg.fusion.retries,
        backoff_base=cfg.fusion.backoff_base,
        strip_prefixes=tuple(cfg.fusion.strip_prefixes),
        skip_on_collapse=cfg.fusion.skip_on_collapse,
    )


def ranked_record(image_id: str, scored: list[ScoredCaption], order: list[int],
                  top2: tuple[ScoredCaption, ScoredCaption]) -> dict:
    return {
        "image_id": image_id,
        "ranking": [
            {
                "model_id": scored[i].model_id,
                "text": scored[i].text,
                "matching_probability": scored[i].itm.matching_probability,
                "cosine_similarity": scored[i].itm.cosine_similarity,
                "blip_score": scored[i].blip_score,
            }
            for i in order
        ],
        "top2": [top2[0].model_id, top2[1].model_id],
    }


def _load_existing(path: str) -> dict[str, dict]:
    if not os.path.exists(path):
        return {}
    return {record["image_id"]: record for _, record in iter_jsonl(path)}


def _process_image(entry: ImageEntry, cand_set: CandidateSet, backend,
                   client, fuse_cfg: FusionConfig) -> tuple[dict, dict]:
    try:
        scored = score_candidates(entry, cand_set.candidates, backend)
    except CapfuseError as exc:
        raise PipelineStageError("score", entry.image_id, exc) from exc
    try:
        ranked = rank(scored, entry.image_id)
    except CapfuseError as exc:
        raise PipelineStageError("rank", entry.image_id, exc) from exc
    first, second = ranked.top2
    try:
        result = fuse(first.text, second.text, client, fuse_cfg)
    except CapfuseError as exc:
        raise PipelineStageError("fuse", entry.image_id, exc) from exc
    fused = {
        "image_id": entry.image_id,
        "caption1": first.text,
        "caption2": second.text,
        "raw": result.raw,
        "cleaned": result.cleaned,
        "flags": result.flags.to_dict(),
    }
    return ranked_record(entry.image_id, scored, ranked.order, ranked.top2), fused


def add_fused_scores(
    backend,
    corpus: list[ImageEntry],
    fused_map: dict[str, str],
    scores: dict[tuple[str, str], float],
    fused_model_id: str,
) -> None:
    """Score fused captions where the backend can; skip quietly otherwise."""
    for entry in corpus:
        fused_text = fused_map.get(entry.image_id)
        if not fused_text:
            continue
        try:
            result = backend.score(entry, Candidate(fused_model_id, fused_text))
        except CapfuseError:
            continue
        if result is not None and result.cosine_similarity is not None:
            score = (result.matching_probability + result.cosine_similarity) / 2.0
            scores[(entry.image_id, fused_model_id)] = score


def _read_run_count(path: str) -> int:
    if not os.path.exists(path):
        return 0
    try:
        with open(path, encoding="utf-8") as fh:
            return int(json.load(fh).get("run_count", 0))
    except (ValueError, OSError):
        return 0


def run_pipeline(cfg: RunConfig, force: bool = False) -> Manifest:
    """Run score, rank, fuse and evaluation; returns the manifest.

    Raises:
        KeyMismatch: if corpus and candidates do not cover each other.
        PipelineStageError: when any image fails in any stage; all other
            images' results are persisted first.
    """
    started = time.monotonic()
    started_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
    corpus = load_corpus(cfg.paths.corpus)
    cand_sets = load_candidates(cfg.paths.candidates)
    by_image = candidates_by_image(cand_sets)
    for entry in corpus:
        if entry.image_id not in by_image:
            raise KeyMismatch(f"image {entry.image_id!r} has no candidates")
    corpus_ids = {entry.image_id for entry in corpus}
    for image_id in by_image:
        if image_id not in corpus_ids:
            raise KeyMismatch(f"candidates for unknown image {image_id!r}")

    out_dir = cfg.paths.out_dir
    os.makedirs(out_dir, exist_ok=True)
    ranked_path = os.path.join(out_dir, "ranked.jsonl")
    fused_path = os.path.join(out_dir, "fused.jsonl")
    manifest_path = os.path.join(out_dir, "manifest.json")

    existing_fused = {} if force else _load_existing(fused_path)
    existing_ranked = {} if force else _load_existing(ranked_path)
    pending = [
        entry for entry in corpus
        if entry.image_id not in existing_fused
        or entry.image_id not in existing_ranked
    ]
    logger.info(
        "pipeline: %d images, %d to compute, %d resumed",
        len(corpus), len(pending), len(corpus) - len(pending),
    )

    backend = build_backend(cfg)
    client = build_fusion_client(cfg)
    fuse_cfg = fusion_config(cfg)

    pool_size = cfg.workers
    if getattr(backend, "max_concurrency", None):
        pool_size = min(pool_size, backend.max_concurrency)

    failures: list[PipelineStageError] = []
    ranked_by_id = dict(existing_ranked)
    fused_by_id = dict(existing_fused)
    if pending:
        with ThreadPoolExecutor(max_workers=pool_size) as pool:
            futures = [
                (entry, pool.submit(
                    _process_image, entry, by_image[entry.image_id],
                    backend, client, fuse_cfg,
                ))
                for entry in pending
            ]
            for entry, future in futures:
                try:
                    ranked_rec, fused_rec = future.result()
                except PipelineStageError as exc:
                    failures.append(exc)
                    continue
                ranked_by_id[entry.image_id] = ranked_rec
                fused_by_id[entry.image_id] = fused_rec

    done_ids = [
        entry.image_id for entry in corpus
        if entry.image_id in ranked_by_id and entry.image_id in fused_by_id
    ]
    write_jsonl(ranked_path, (ranked_by_id[i] for i in done_ids))
    write_jsonl(fused_path, (fused_by_id[i] for i in done_ids))
    if failures:
        first = failures[0]
        logger.error("pipeline aborted: %s", first)
        raise first

    # Evaluation inputs come out of the persisted records so that resumed
    # and forced runs agree byte for byte.
    scores: dict[tuple[str, str], float] = {}
    for image_id in done_ids:
        for item in ranked_by_id[image_id]["ranking"]:
            scores[(image_id, item["model_id"])] = item["blip_score"]
    fused_map = {image_id: fused_by_id[image_id]["cleaned"] for image_id in done_ids}
    fused_model_id = cfg.metrics.fused_model_id
    add_fused_scores(backend, corpus, fused_map, scores, fused_model_id)

    report = eval_report(
        corpus, cand_sets, fused_map, scores,
        variant=cfg.metrics.variant, fused_model_id=fused_model_id,
    )
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    with open(os.path.join(out_dir, "report.md"), "w", encoding="utf-8") as fh:
        fh.write(render_markdown(report))

    manifest = Manifest(
        config_hash=config_hash(cfg),
        run_count=_read_run_count(manifest_path) + 1,
        seeds={"split": cfg.seeds.split, "study": cfg.seeds.study},
        counts={
            "images": len(corpus),
            "computed": len(pending),
            "resumed": len(corpus) - len(pending),
        },
        started=started_at,
        elapsed_s=round(time.monotonic() - started, 3),
    )
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest.to_dict(), fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    return manifest
