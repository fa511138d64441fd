"""Caption quality, diversity and richness metrics."""

from .tokenizer import TokenStream, tokenize
from .bleu import bleu_corpus, bleu_sentence
from .cider import cider
from .diversity import div_n, mbleu
from .pos import (
    CATEGORY_OF_TAG,
    CATEGORY_ORDER,
    UNIVERSAL_TAGS,
    LexiconPosTagger,
    LineProtocolTagger,
    PosProfile,
    categorize,
    pos_profile,
)
from .report import EvalReport, eval_report, render_markdown, render_score

__all__ = [
    "TokenStream",
    "tokenize",
    "bleu_corpus",
    "bleu_sentence",
    "cider",
    "div_n",
    "mbleu",
    "CATEGORY_OF_TAG",
    "CATEGORY_ORDER",
    "UNIVERSAL_TAGS",
    "LexiconPosTagger",
    "LineProtocolTagger",
    "PosProfile",
    "categorize",
    "pos_profile",
    "EvalReport",
    "eval_report",
    "render_markdown",
    "render_score",
]
