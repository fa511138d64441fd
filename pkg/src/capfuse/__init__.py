"""Training-free caption ensembling.

Score candidate captions with an image-text matcher, rank them, fuse the
top two through an LLM, evaluate the result, and run blinded human
preference studies over the outputs.
"""

from .corpus import (
    Candidate,
    CandidateSet,
    ImageEntry,
    Splits,
    load_candidates,
    load_corpus,
    load_splits,
    make_splits,
    save_splits,
)
from .errors import BackendError, CapfuseError, ConfigError, DataError
from .fuser import (
    DEFAULT_PROMPT_TEMPLATE,
    DEFAULT_STRIP_PREFIXES,
    FusionConfig,
    FusionResult,
    HttpFusionClient,
    MockFusionClient,
    captions_collapse,
    fuse,
    make_rule_key,
    postprocess,
    render_prompt,
)
from .metrics import (
    bleu_corpus,
    bleu_sentence,
    cider,
    div_n,
    eval_report,
    mbleu,
    pos_profile,
    render_markdown,
    render_score,
    tokenize,
)
from .rng import SplitMix64
from .scorer import (
    FileScorerBackend,
    ItmScore,
    RankedSet,
    RemoteScorerBackend,
    ScoredCaption,
    blip_score,
    cosine,
    pair_frequency,
    rank,
    score_candidates,
    score_distribution,
)
from .study import (
    Ballot,
    StudyService,
    Vote,
    VoteStore,
    agreement_histogram,
    make_ballot,
    record_vote,
    summarize_votes,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Candidate", "CandidateSet", "ImageEntry", "Splits",
    "load_candidates", "load_corpus", "load_splits", "make_splits", "save_splits",
    "BackendError", "CapfuseError", "ConfigError", "DataError",
    "DEFAULT_PROMPT_TEMPLATE", "DEFAULT_STRIP_PREFIXES",
    "FusionConfig", "FusionResult", "HttpFusionClient", "MockFusionClient",
    "captions_collapse", "fuse", "make_rule_key", "postprocess", "render_prompt",
    "bleu_corpus", "bleu_sentence", "cider", "div_n", "eval_report", "mbleu",
    "pos_profile", "render_markdown", "render_score", "tokenize",
    "SplitMix64",
    "FileScorerBackend", "ItmScore", "RankedSet", "RemoteScorerBackend",
    "ScoredCaption", "blip_score", "cosine", "pair_frequency", "rank",
    "score_candidates", "score_distribution",
    "Ballot", "StudyService", "Vote", "VoteStore", "agreement_histogram",
    "make_ballot", "record_vote", "summarize_votes",
]
