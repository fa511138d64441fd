"""Command line interface.

Subcommands mirror the pipeline stages (ingest, split, score, rank,
fuse, eval, report, run) plus the study service. Exit codes: 0 success,
2 configuration problems, 3 backend failures, 4 data problems.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from .config import RunConfig, load_config, validate
from .corpus import (
    candidates_by_image,
    iter_jsonl,
    load_candidates,
    load_corpus,
    make_splits,
    save_splits,
    write_jsonl,
)
from .errors import (
    BackendError,
    CapfuseError,
    ConfigError,
    DataError,
    PipelineStageError,
)
from .metrics.report import EvalReport, eval_report, render_markdown
from .pipeline import (
    add_fused_scores,
    build_backend,
    build_fusion_client,
    fusion_config,
    ranked_record,
    run_pipeline,
)
from .rng import SplitMix64
from .scorer import FileScorerBackend, pair_frequency, rank, score_candidates
from .study import StudyService, VoteStore, agreement_histogram
from .fuser import fuse

logger = logging.getLogger(__name__)


def _add_config_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--seed", type=int, help="override both seeds")
    parser.add_argument("--workers", type=int, help="override the worker count")
    parser.add_argument(
        "--deterministic", action="store_true",
        help="require explicit seeds and offline backends",
    )


def _load(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.seeds.split = args.seed
        cfg.seeds.study = args.seed
    if getattr(args, "workers", None):
        cfg.workers = args.workers
    if getattr(args, "deterministic", False):
        cfg.deterministic = True
    validate(cfg)
    return cfg


def _out_path(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.paths.out_dir, exist_ok=True)
    return os.path.join(cfg.paths.out_dir, name)


def cmd_ingest(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    cand_sets = load_candidates(args.candidates)
    by_image = candidates_by_image(cand_sets)
    missing = [e.image_id for e in corpus if e.image_id not in by_image]
    extra = [i for i in by_image if i not in {e.image_id for e in corpus}]
    if missing:
        raise DataError(f"{len(missing)} corpus image(s) lack candidates: {missing[:5]}")
    if extra:
        raise DataError(f"candidates reference {len(extra)} unknown image(s): {extra[:5]}")
    models = sorted({c.model_id for s in cand_sets for c in s.candidates})
    print(f"corpus: {len(corpus)} images")
    print(f"candidates: {len(cand_sets)} images, models: {', '.join(models)}")
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    try:
        sizes = tuple(int(p) for p in args.sizes.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad --sizes value {args.sizes!r}") from exc
    if len(sizes) != 3:
        raise ConfigError("--sizes needs three comma-separated integers")
    splits = make_splits([e.image_id for e in corpus], sizes, args.seed)
    save_splits(args.out, splits)
    print(
        f"splits: train={len(splits.train)} val={len(splits.val)} "
        f"test={len(splits.test)} seed={splits.seed} -> {args.out}"
    )
    return 0


def _scored_records(cfg: RunConfig):
    corpus = load_corpus(cfg.paths.corpus)
    by_image = candidates_by_image(load_candidates(cfg.paths.candidates))
    backend = build_backend(cfg)
    for entry in corpus:
        cand_set = by_image.get(entry.image_id)
        if cand_set is None:
            raise DataError(f"image {entry.image_id!r} has no candidates")
        yield entry, score_candidates(entry, cand_set.candidates, backend)


def cmd_score(args: argparse.Namespace) -> int:
    cfg = _load(args)
    path = _out_path(cfg, "scores.jsonl")
    count = write_jsonl(path, (
        {
            "image_id": entry.image_id,
            "model_id": sc.model_id,
            "matching_probability": sc.itm.matching_probability,
            "cosine_similarity": sc.itm.cosine_similarity,
            "blip_score": sc.blip_score,
        }
        for entry, scored in _scored_records(cfg)
        for sc in scored
    ))
    print(f"scored {count} captions -> {path}")
    return 0


def cmd_rank(args: argparse.Namespace) -> int:
    cfg = _load(args)
    scores_path = _out_path(cfg, "scores.jsonl")
    if os.path.exists(scores_path):
        cfg.scorer.backend = "file"
        cfg.scorer.path = scores_path
    records = []
    ranked_sets = []
    for entry, scored in _scored_records(cfg):
        ranked = rank(scored, entry.image_id)
        ranked_sets.append(ranked)
        records.append(ranked_record(entry.image_id, scored, ranked.order, ranked.top2))
    path = _out_path(cfg, "ranked.jsonl")
    write_jsonl(path, records)
    print(f"ranked {len(records)} images -> {path}")
    for (first, second), pct in pair_frequency(ranked_sets).items():
        print(f"  top-2 pair {first} + {second}: {pct:.1f}%")
    return 0


def cmd_fuse(args: argparse.Namespace) -> int:
    cfg = _load(args)
    ranked_path = _out_path(cfg, "ranked.jsonl")
    if not os.path.exists(ranked_path):
        raise DataError(f"{ranked_path} not found; run the rank stage first")
    client = build_fusion_client(cfg)
    fuse_cfg = fusion_config(cfg)
    records = []
    for _, record in iter_jsonl(ranked_path):
        ranking = record["ranking"]
        caption1, caption2 = ranking[0]["text"], ranking[1]["text"]
        result = fuse(caption1, caption2, client, fuse_cfg)
        records.append({
            "image_id": record["image_id"],
            "caption1": caption1,
            "caption2": caption2,
            "raw": result.raw,
            "cleaned": result.cleaned,
            "flags": result.flags.to_dict(),
        })
    path = _out_path(cfg, "fused.jsonl")
    write_jsonl(path, records)
    print(f"fused {len(records)} images -> {path}")
    return 0


def _eval_inputs(cfg: RunConfig):
    corpus = load_corpus(cfg.paths.corpus)
    cand_sets = load_candidates(cfg.paths.candidates)
    ranked_path = _out_path(cfg, "ranked.jsonl")
    fused_path = _out_path(cfg, "fused.jsonl")
    for path in (ranked_path, fused_path):
        if not os.path.exists(path):
            raise DataError(f"{path} not found; run the pipeline stages first")
    scores = {}
    for _, record in iter_jsonl(ranked_path):
        for item in record["ranking"]:
            scores[(record["image_id"], item["model_id"])] = item["blip_score"]
    fused = {}
    for _, record in iter_jsonl(fused_path):
        fused[record["image_id"]] = record["cleaned"]
    return corpus, cand_sets, fused, scores


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _load(args)
    corpus, cand_sets, fused, scores = _eval_inputs(cfg)
    try:
        backend = build_backend(cfg)
    except CapfuseError:
        backend = None
    if backend is not None:
        add_fused_scores(backend, corpus, fused, scores, cfg.metrics.fused_model_id)
    report = eval_report(
        corpus, cand_sets, fused, scores,
        variant=cfg.metrics.variant, fused_model_id=cfg.metrics.fused_model_id,
    )
    json_path = _out_path(cfg, "report.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    md_path = _out_path(cfg, "report.md")
    with open(md_path, "w", encoding="utf-8") as fh:
        fh.write(render_markdown(report))
    print(f"report -> {json_path}, {md_path}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    try:
        with open(args.report, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError as exc:
        raise DataError(f"report not found: {args.report}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"report is not valid JSON: {exc}") from exc
    print(render_markdown(EvalReport.from_dict(data)))
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _load(args)
    manifest = run_pipeline(cfg, force=args.force)
    print(
        f"run {manifest.run_count}: {manifest.counts['images']} images "
        f"({manifest.counts['computed']} computed, "
        f"{manifest.counts['resumed']} resumed) in {manifest.elapsed_s}s"
    )
    print(f"config hash {manifest.config_hash}")
    return 0


def build_study_service(cfg: RunConfig) -> StudyService:
    corpus = load_corpus(cfg.paths.corpus)
    by_image = candidates_by_image(load_candidates(cfg.paths.candidates))
    options = {}
    for entry in corpus:
        cand_set = by_image.get(entry.image_id)
        if cand_set is None:
            raise DataError(f"image {entry.image_id!r} has no candidates")
        options[entry.image_id] = {c.model_id: c.text for c in cand_set.candidates}
    fused_path = os.path.join(cfg.paths.out_dir, "fused.jsonl")
    if os.path.exists(fused_path):
        for _, record in iter_jsonl(fused_path):
            image_id = record["image_id"]
            if image_id in options and record["cleaned"]:
                options[image_id][cfg.metrics.fused_model_id] = record["cleaned"]
    votes_path = cfg.paths.votes_log or os.path.join(cfg.paths.out_dir, "votes.log")
    os.makedirs(os.path.dirname(votes_path) or ".", exist_ok=True)
    store = VoteStore(votes_path)
    rng = SplitMix64(cfg.seeds.study)
    return StudyService(corpus, options, store, rng)


def cmd_serve_study(args: argparse.Namespace) -> int:
    import uvicorn
    from .study_service import create_app

    cfg = _load(args)
    service = build_study_service(cfg)
    app = create_app(service, asset_root=args.asset_root)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_study_results(args: argparse.Namespace) -> int:
    store = VoteStore(args.votes)
    if not store.records:
        print("no votes recorded")
        return 0
    counts: dict[tuple[str, str], int] = {}
    totals: dict[str, int] = {"generic": 0, "expert": 0}
    for record in store.records:
        key = (record["model_id"], record["worker_class"])
        counts[key] = counts.get(key, 0) + 1
        totals[record["worker_class"]] = totals.get(record["worker_class"], 0) + 1
    models = sorted({model for model, _ in counts})
    print(f"{'model':<24} {'generic%':>9} {'expert%':>9} {'average%':>9}")
    for model in models:
        g = counts.get((model, "generic"), 0)
        e = counts.get((model, "expert"), 0)
        g_pct = 100.0 * g / totals["generic"] if totals["generic"] else 0.0
        if totals["expert"]:
            e_pct = 100.0 * e / totals["expert"]
            avg = e_pct if not totals["generic"] else (g_pct + e_pct) / 2.0
            print(f"{model:<24} {g_pct:>9.2f} {e_pct:>9.2f} {avg:>9.2f}")
        else:
            print(f"{model:<24} {g_pct:>9.2f} {'-':>9} {g_pct:>9.2f}")
    by_image: dict[str, list[str]] = {}
    for record in store.records:
        by_image.setdefault(record["image_id"], []).append(record["model_id"])
    histogram = agreement_histogram(by_image)
    if histogram:
        levels = ", ".join(f"{level}: {n}" for level, n in histogram.items())
        print(f"agreement (max votes on one model per image): {levels}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capfuse",
        description="Caption ensembling: score, rank, fuse and evaluate.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="log at INFO level"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate corpus and candidate files")
    p.add_argument("--corpus", required=True)
    p.add_argument("--candidates", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", help="write seed-reproducible id splits")
    p.add_argument("--corpus", required=True)
    p.add_argument("--sizes", required=True, help="train,val,test sizes")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    for name, func, extra in (
        ("score", cmd_score, None),
        ("rank", cmd_rank, None),
        ("fuse", cmd_fuse, None),
        ("eval", cmd_eval, None),
    ):
        p = sub.add_parser(name, help=f"run the {name} stage")
        _add_config_options(p)
        p.set_defaults(func=func)

    p = sub.add_parser("report", help="render a stored report as markdown")
    p.add_argument("--report", required=True, help="path to report.json")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", help="run the full pipeline")
    _add_config_options(p)
    p.add_argument("--force", action="store_true", help="recompute everything")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("serve-study", help="serve the human study API")
    _add_config_options(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--asset-root", default=None)
    p.set_defaults(func=cmd_serve_study)

    p = sub.add_parser("study-results", help="summarize a votes log")
    p.add_argument("--votes", required=True)
    p.set_defaults(func=cmd_study_results)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PipelineStageError as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return 3 if isinstance(exc.cause, BackendError) else 4
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 3
    except CapfuseError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
