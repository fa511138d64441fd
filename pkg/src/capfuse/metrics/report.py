"""Evaluation report: quality, diversity and richness tables.

Rows cover each captioning model, the best-ranked candidate per image
("Our (Best)") and the fused caption ("Our (Fusion)"). Diversity columns
measure a row's caption against the candidate pool of the same image:
for a model row the pool is the other models' captions, for the two
"Our" rows it is all candidate captions. Numbers render on the scales
used in the literature (BLEU x100, CIDEr x10) with best and second-best
values marked.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from decimal import ROUND_HALF_DOWN, Decimal
from typing import Mapping, Sequence

from ..corpus import CandidateSet, ImageEntry
from ..errors import KeyMismatch, TooFewCandidates
from .bleu import bleu_corpus, bleu_sentence
from .cider import cider
from .diversity import div_n
from .pos import PosProfile, PosTagger, CATEGORY_ORDER, pos_profile
from .tokenizer import tokenize

BEST_LABEL = "Our (Best)"
FUSION_LABEL = "Our (Fusion)"
GROUND_TRUTH_LABEL = "Ground-Truth"


def render_score(value: float, places: int = 4) -> str:
    """Render a score with fixed decimals, exact ties rounding toward zero.

    Rounding goes through the shortest decimal form of the float so that
    a value whose true decimal expansion ends exactly in 5 at the cut
    (e.g. a mean of two 4-decimal numbers) rounds down, matching how the
    reference tables were printed.
    """
    quantum = Decimal(1).scaleb(-places)
    return str(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_DOWN))


@dataclass
class MetricRow:
    label: str
    bleu4: float
    cider: float
    blip_mean: float | None
    mbleu: float
    div1: float
    div2: float
    sample_count: int

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "bleu4": self.bleu4,
            "cider": self.cider,
            "blip_mean": self.blip_mean,
            "mbleu": self.mbleu,
            "div1": self.div1,
            "div2": self.div2,
            "sample_count": self.sample_count,
        }


@dataclass
class RichnessRow:
    label: str
    sample_count: int
    token_mean: float
    token_std: float
    categories: dict[str, tuple[float, float]]

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "sample_count": self.sample_count,
            "token_mean": self.token_mean,
            "token_std": self.token_std,
            "categories": {
                name: [mean, std] for name, (mean, std) in self.categories.items()
            },
        }


@dataclass
class EvalReport:
    metric_rows: list[MetricRow]
    richness_rows: list[RichnessRow]
    highlights: dict[str, tuple[str, str | None]] = field(default_factory=dict)
    conventions: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "metrics": [row.to_dict() for row in self.metric_rows],
            "richness": [row.to_dict() for row in self.richness_rows],
            "highlights": {
                column: list(pair) for column, pair in self.highlights.items()
            },
            "conventions": dict(self.conventions),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        metric_rows = [
            MetricRow(
                label=row["label"],
                bleu4=row["bleu4"],
                cider=row["cider"],
                blip_mean=row["blip_mean"],
                mbleu=row["mbleu"],
                div1=row["div1"],
                div2=row["div2"],
                sample_count=row["sample_count"],
            )
            for row in data.get("metrics", [])
        ]
        richness_rows = [
            RichnessRow(
                label=row["label"],
                sample_count=row["sample_count"],
                token_mean=row["token_mean"],
                token_std=row["token_std"],
                categories={
                    name: (pair[0], pair[1])
                    for name, pair in row.get("categories", {}).items()
                },
            )
            for row in data.get("richness", [])
        ]
        highlights = {
            column: (pair[0], pair[1] if len(pair) > 1 else None)
            for column, pair in data.get("highlights", {}).items()
        }
        return cls(metric_rows, richness_rows, highlights, data.get("conventions", {}))


_COLUMN_DIRECTION = {
    "bleu4": "max",
    "cider": "max",
    "blip_mean": "max",
    "mbleu": "min",
    "div1": "max",
    "div2": "max",
}


def _highlights(rows: Sequence[MetricRow]) -> dict[str, tuple[str, str | None]]:
    out: dict[str, tuple[str, str | None]] = {}
    for column, direction in _COLUMN_DIRECTION.items():
        scored = [
            (getattr(row, column), row.label)
            for row in rows
            if getattr(row, column) is not None
        ]
        if not scored:
            continue
        ordered = sorted(
            range(len(scored)),
            key=lambda i: -scored[i][0] if direction == "max" else scored[i][0],
        )
        best = scored[ordered[0]][1]
        second = scored[ordered[1]][1] if len(ordered) > 1 else None
        out[column] = (best, second)
    return out


def eval_report(
    corpus: Sequence[ImageEntry],
    candidates: Sequence[CandidateSet],
    fused: Mapping[str, str] | None = None,
    scores: Mapping[tuple[str, str], float] | None = None,
    *,
    variant: str = "cider-d",
    fused_model_id: str = "fusion",
    tagger: PosTagger | None = None,
) -> EvalReport:
    """Build the evaluation report over an aligned corpus.

    Args:
        corpus: images with ground-truth captions.
        candidates: per-image candidate sets; every image needs the same
            models.
        fused: cleaned fused caption per image (enables the fusion row).
        scores: caption score per (image_id, model_id) (enables the
            best-candidate row and the score column; fused captions show
            a score when ``(image_id, fused_model_id)`` entries exist).
        variant: consensus metric variant, "cider-d" or "cider".
        fused_model_id: score table key under which fused captions were
            scored.
        tagger: part-of-speech tagger for the richness table.

    Raises:
        KeyMismatch: if candidates, fused or scores do not align with the
            corpus.
        TooFewCandidates: if fewer than two models are present.
    """
    if not corpus:
        raise KeyMismatch("corpus is empty")
    by_image = {c.image_id: c for c in candidates}
    image_ids = [entry.image_id for entry in corpus]
    for image_id in image_ids:
        if image_id not in by_image:
            raise KeyMismatch(f"image {image_id!r} has no candidates")

    model_ids = sorted({c.model_id for c in by_image[image_ids[0]].candidates})
    if len(model_ids) < 2:
        raise TooFewCandidates(image_ids[0], len(model_ids))
    texts: dict[str, dict[str, str]] = {m: {} for m in model_ids}
    for image_id in image_ids:
        entry_models = sorted(c.model_id for c in by_image[image_id].candidates)
        if entry_models != model_ids:
            raise KeyMismatch(
                f"image {image_id!r} has models {entry_models}, expected {model_ids}"
            )
        for cand in by_image[image_id].candidates:
            texts[cand.model_id][image_id] = cand.text

    if fused is not None:
        for image_id in image_ids:
            if image_id not in fused:
                raise KeyMismatch(f"image {image_id!r} has no fused caption")
    if scores is not None:
        for image_id in image_ids:
            for model_id in model_ids:
                if (image_id, model_id) not in scores:
                    raise KeyMismatch(
                        f"no score for image {image_id!r}, model {model_id!r}"
                    )

    refs_tok = [
        [tokenize(gt).tokens for gt in entry.ground_truths] for entry in corpus
    ]
    caps_tok = {
        m: [tokenize(texts[m][image_id]).tokens for image_id in image_ids]
        for m in model_ids
    }
    pool_tok = [
        [caps_tok[m][i] for m in model_ids] for i in range(len(image_ids))
    ]

    def diversity_pair(row_tok, pools):
        sets = [[row_tok[i]] + pools[i] for i in range(len(row_tok))]
        mb = statistics.fmean(
            bleu_sentence(row_tok[i], pools[i]) for i in range(len(row_tok))
        )
        return mb, div_n(sets, 1), div_n(sets, 2)

    n_images = len(image_ids)
    metric_rows: list[MetricRow] = []
    for m in model_ids:
        others = [
            [caps_tok[other][i] for other in model_ids if other != m]
            for i in range(n_images)
        ]
        mb, d1, d2 = diversity_pair(caps_tok[m], others)
        blip = (
            statistics.fmean(scores[(image_id, m)] for image_id in image_ids)
            if scores is not None
            else None
        )
        metric_rows.append(
            MetricRow(
                label=m,
                bleu4=bleu_corpus(caps_tok[m], refs_tok),
                cider=cider(caps_tok[m], refs_tok, variant),
                blip_mean=blip,
                mbleu=mb,
                div1=d1,
                div2=d2,
                sample_count=n_images,
            )
        )

    richness_texts: dict[str, list[str]] = {
        m: [texts[m][image_id] for image_id in image_ids] for m in model_ids
    }

    if scores is not None:
        best_ids = []
        for image_id in image_ids:
            best = min(model_ids, key=lambda m: (-scores[(image_id, m)], m))
            best_ids.append(best)
        best_texts = [
            texts[best_ids[i]][image_ids[i]] for i in range(n_images)
        ]
        best_tok = [tokenize(t).tokens for t in best_texts]
        mb, d1, d2 = diversity_pair(best_tok, pool_tok)
        metric_rows.append(
            MetricRow(
                label=BEST_LABEL,
                bleu4=bleu_corpus(best_tok, refs_tok),
                cider=cider(best_tok, refs_tok, variant),
                blip_mean=statistics.fmean(
                    scores[(image_ids[i], best_ids[i])] for i in range(n_images)
                ),
                mbleu=mb,
                div1=d1,
                div2=d2,
                sample_count=n_images,
            )
        )
        richness_texts[BEST_LABEL] = best_texts

    if fused is not None:
        fused_texts = [fused[image_id] for image_id in image_ids]
        fused_tok = [tokenize(t).tokens for t in fused_texts]
        mb, d1, d2 = diversity_pair(fused_tok, pool_tok)
        fused_blip = None
        if scores is not None and all(
            (image_id, fused_model_id) in scores for image_id in image_ids
        ):
            fused_blip = statistics.fmean(
                scores[(image_id, fused_model_id)] for image_id in image_ids
            )
        metric_rows.append(
            MetricRow(
                label=FUSION_LABEL,
                bleu4=bleu_corpus(fused_tok, refs_tok),
                cider=cider(fused_tok, refs_tok, variant),
                blip_mean=fused_blip,
                mbleu=mb,
                div1=d1,
                div2=d2,
                sample_count=n_images,
            )
        )
        richness_texts[FUSION_LABEL] = fused_texts

    richness_texts[GROUND_TRUTH_LABEL] = [
        gt for entry in corpus for gt in entry.ground_truths
    ]
    profiles = pos_profile(richness_texts, tagger)
    richness_rows = [
        RichnessRow(
            label=label,
            sample_count=profile.sample_count,
            token_mean=profile.token_mean,
            token_std=profile.token_std,
            categories=profile.categories,
        )
        for label, profile in profiles.items()
    ]

    return EvalReport(
        metric_rows=metric_rows,
        richness_rows=richness_rows,
        highlights=_highlights(metric_rows),
        conventions={
            "bleu4_scale": "x100",
            "cider_variant": variant,
            "cider_scale": "x10",
            "mbleu": "lower is more diverse; pool is the other models' "
                     "captions for model rows, all candidates for Our rows",
            "deviation": "population",
        },
    )


def _fmt(row: MetricRow, column: str, highlights) -> str:
    value = getattr(row, column)
    if value is None:
        return "-"
    if column == "bleu4":
        text = f"{value * 100:.1f}"
    elif column == "cider":
        text = f"{value:.1f}"
    elif column == "blip_mean":
        text = render_score(value)
    else:
        text = f"{value:.2f}"
    best, second = highlights.get(column, (None, None))
    if row.label == best:
        return f"**{text}**"
    if row.label == second:
        return f"*{text}*"
    return text


def render_markdown(report: EvalReport) -> str:
    """Render the report as two markdown tables with a conventions footer."""
    lines = ["# Evaluation report", "", "## Caption quality and diversity", ""]
    lines.append("| Model | B@4 | CIDEr | Score | mBLEU | Div-1 | Div-2 | N |")
    lines.append("| --- | --- | --- | --- | --- | --- | --- | --- |")
    for row in report.metric_rows:
        cells = [
            row.label,
            _fmt(row, "bleu4", report.highlights),
            _fmt(row, "cider", report.highlights),
            _fmt(row, "blip_mean", report.highlights),
            _fmt(row, "mbleu", report.highlights),
            _fmt(row, "div1", report.highlights),
            _fmt(row, "div2", report.highlights),
            str(row.sample_count),
        ]
        lines.append("| " + " | ".join(cells) + " |")
    lines.extend(["", "## Caption richness", ""])
    header = ["Model", "Tokens"] + CATEGORY_ORDER + ["N"]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + " --- |" * len(header))
    for row in report.richness_rows:
        cells = [row.label, f"{row.token_mean:.1f} ± {row.token_std:.1f}"]
        for category in CATEGORY_ORDER:
            if category in row.categories:
                mean, std = row.categories[category]
                cells.append(f"{mean:.1f} ± {std:.1f}")
            else:
                cells.append("-")
        cells.append(str(row.sample_count))
        lines.append("| " + " | ".join(cells) + " |")
    lines.extend([
        "",
        "Bold marks the best value per column, italics the second best; "
        "mBLEU is better when lower. B@4 is scaled by 100 and the consensus "
        "metric by 10. Deviations are population deviations.",
        "",
    ])
    return "\n".join(lines)
