"""Rule-based part-of-speech tagging and per-model grammar profiles.

The built-in tagger is deterministic and dependency-free: a closed-class
lexicon tuned to caption text plus suffix heuristics, emitting the
17-tag universal tagset. Report tables group those tags into ten word
categories. External taggers can be plugged in through a subprocess line
protocol when higher fidelity is needed.
"""

from __future__ import annotations

import re
import statistics
import subprocess
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

from ..errors import EmptySet, TaggerFailure
from .tokenizer import tokenize

UNIVERSAL_TAGS = frozenset({
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
})

# Ten report categories; tags outside this mapping (INTJ, PUNCT, SYM, X)
# are counted as tokens but belong to no category.
CATEGORY_OF_TAG = {
    "ADJ": "Adjective",
    "ADP": "Adposition",
    "ADV": "Adverb",
    "CCONJ": "Conjunction",
    "SCONJ": "Conjunction",
    "DET": "Determiner",
    "NOUN": "Noun",
    "PROPN": "Noun",
    "NUM": "Numeral",
    "PART": "Particles",
    "PRON": "Pronouns",
    "VERB": "Verb",
    "AUX": "Verb",
}

CATEGORY_ORDER = [
    "Adjective", "Adposition", "Adverb", "Conjunction", "Determiner",
    "Noun", "Numeral", "Particles", "Pronouns", "Verb",
]

_NUMERIC = re.compile(r"^\d+([.,:/-]\d+)*(st|nd|rd|th)?$")


def _build_lexicon() -> dict[str, str]:
    groups: dict[str, str] = {}

    def add(tag: str, words: str) -> None:
        for word in words.split():
            groups[word] = tag

    add("DET", "a an the this these those that each every some any no "
               "another both all either neither")
    add("ADP", "in on at by of off for with without from into onto over "
               "under above below behind beside between near through around "
               "across against along inside outside atop beneath underneath "
               "during after before up down out toward towards upon within "
               "among amid past")
    add("AUX", "is are was were be been being am has have had do does did "
               "can could will would shall should may might must")
    add("CCONJ", "and or but nor")
    add("SCONJ", "while because although though if since when as whereas "
                 "unless until")
    add("PRON", "i you he she it we they me him her us them his hers its "
                "their theirs my mine your yours our ours who whom whose "
                "which what someone something anyone anything everyone "
                "everything nobody nothing itself himself herself themselves")
    add("PART", "to not")
    add("NUM", "zero one two three four five six seven eight nine ten eleven "
               "twelve thirteen fourteen fifteen sixteen seventeen eighteen "
               "nineteen twenty thirty forty fifty sixty seventy eighty "
               "ninety hundred thousand million")
    add("ADV", "very quite too also just only really almost nearly together "
               "apart away here there now then again still well often always "
               "never sometimes perhaps maybe")
    add("INTJ", "oh wow hey yeah hello hi")
    add("ADJ", "red blue green yellow black white brown orange purple pink "
               "gray grey golden silver old young new big small large little "
               "tall short long wide narrow high low open closed empty full "
               "busy quiet dirty clean dark bright hot cold warm cool wet dry "
               "fresh ripe raw sharp flat round striped wooden pretty cute "
               "nice good bad great modern vintage antique giant huge double "
               "single upper lower left right other such same different many "
               "few several furry fluffy shiny grassy snowy rainy sunny "
               "cloudy foggy rocky sandy muddy tiny happy sleepy early jolly "
               "silly hilly curly woolly ugly bigger smaller larger older "
               "younger taller higher closer")
    add("VERB", "sit sits sat stand stands stood run runs ran walk walks "
                "hold holds held ride rides rode look looks play plays eat "
                "eats ate drink drinks fly flies flew swim swims swam jump "
                "jumps hang hangs hung lie lies lay graze grazes wear wears "
                "wore worn carry carries drive drives drove dive sleep "
                "sleeps slept watch watches smile smiles pose poses rest "
                "rests wait waits stare stares catch catches caught throw "
                "throws threw cut cuts fill fills make makes made take takes "
                "took go goes went come comes came put puts set sets get "
                "gets got see sees saw show shows gather gathers perch "
                "perches float floats lean leans surf surfs ski skis skate "
                "skates read reads write writes talk talks speak speaks "
                "point points")
    # Nouns that suffix rules would otherwise mis-tag.
    add("NOUN", "building buildings ceiling painting clothing morning "
                "evening lightning wedding parking living dining frosting "
                "icing seasoning dressing pudding string ring king wing "
                "thing spring swing sibling ending feeling railing siding "
                "awning landing crossing head bread shed seed weed reed sled "
                "speed family belly jelly butterfly dragonfly lily bully "
                "radish rubbish olive hive table cable stable gable fable "
                "vegetable forest guest chest crest harvest interest light "
                "glass stone leather metal plastic square top front back "
                "middle side")
    return groups


_LEXICON = _build_lexicon()

_ING_MIN = 5
_SUFFIX_RULES: tuple[tuple[tuple[str, ...], int, str], ...] = (
    (("ly",), 4, "ADV"),
    (("ing",), _ING_MIN, "VERB"),
    (("ed",), 4, "VERB"),
    (("tion", "sion", "ness", "ment", "ship", "hood"), 5, "NOUN"),
    (("ful", "ous", "ive", "less", "able", "ible"), 5, "ADJ"),
    (("ish", "est"), 5, "ADJ"),
)

_SYMBOLS = set("$%&+=<>^|~")


class PosTagger(Protocol):
    """Maps a token sequence to one universal tag per token."""

    def tag(self, tokens: Sequence[str]) -> list[str]:
        ...


class LexiconPosTagger:
    """Closed-class lexicon plus suffix heuristics; default tag NOUN."""

    def tag(self, tokens: Sequence[str]) -> list[str]:
        return [self._tag_one(token) for token in tokens]

    @staticmethod
    def _tag_one(token: str) -> str:
        word = token.lower()
        if not word:
            return "X"
        if word in _LEXICON:
            return _LEXICON[word]
        if _NUMERIC.match(word):
            return "NUM"
        if len(word) == 1 and not word.isalnum():
            return "SYM" if word in _SYMBOLS else "PUNCT"
        for suffixes, min_len, tag in _SUFFIX_RULES:
            if len(word) >= min_len and word.endswith(suffixes):
                return tag
        return "NOUN"


class LineProtocolTagger:
    """Adapter for an external tagger run as a subprocess.

    The child receives one token per line on stdin and must reply with
    ``token<TAB>tag`` lines in the same order, tags drawn from the
    universal tagset.
    """

    def __init__(self, command: Sequence[str], timeout: float = 30.0):
        self.command = list(command)
        self.timeout = timeout

    def tag(self, tokens: Sequence[str]) -> list[str]:
        if not tokens:
            return []
        try:
            proc = subprocess.run(
                self.command,
                input="\n".join(tokens) + "\n",
                capture_output=True,
                text=True,
                timeout=self.timeout,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise TaggerFailure(str(exc)) from exc
        if proc.returncode != 0:
            raise TaggerFailure(
                f"exit code {proc.returncode}: {proc.stderr.strip()[:200]}"
            )
        lines = [line for line in proc.stdout.splitlines() if line.strip()]
        if len(lines) != len(tokens):
            raise TaggerFailure(
                f"expected {len(tokens)} tagged lines, got {len(lines)}"
            )
        tags = []
        for token, line in zip(tokens, lines):
            parts = line.split("\t")
            if len(parts) != 2 or parts[0] != token:
                raise TaggerFailure(f"bad line {line!r} for token {token!r}")
            if parts[1] not in UNIVERSAL_TAGS:
                raise TaggerFailure(f"unknown tag {parts[1]!r}")
            tags.append(parts[1])
        return tags


@dataclass
class PosProfile:
    """Per-model token and word-category statistics.

    Means and standard deviations are per caption; deviations are
    population deviations. Categories that never occur are omitted.
    """

    sample_count: int
    token_mean: float
    token_std: float
    categories: dict[str, tuple[float, float]]


def categorize(tags: Sequence[str]) -> dict[str, int]:
    """Count report categories in a tag sequence; uncategorized tags drop."""
    counts: dict[str, int] = {}
    for tag in tags:
        category = CATEGORY_OF_TAG.get(tag)
        if category is not None:
            counts[category] = counts.get(category, 0) + 1
    return counts


def pos_profile(
    captions_by_model: Mapping[str, Sequence[str]],
    tagger: PosTagger | None = None,
) -> dict[str, PosProfile]:
    """Grammar profile of each model's captions.

    Args:
        captions_by_model: raw caption texts grouped by model.
        tagger: tagger to use; defaults to the built-in lexicon tagger.

    Raises:
        EmptySet: if the mapping is empty or any model has no captions.
        TaggerFailure: if the tagger returns misaligned output.
    """
    if not captions_by_model:
        raise EmptySet("no models given")
    tagger = tagger or LexiconPosTagger()
    profiles: dict[str, PosProfile] = {}
    for model_id, captions in captions_by_model.items():
        if not captions:
            raise EmptySet(f"model {model_id!r} has no captions")
        token_counts: list[int] = []
        per_category: dict[str, list[int]] = {c: [] for c in CATEGORY_ORDER}
        for text in captions:
            tokens = tokenize(text).tokens
            tags = tagger.tag(tokens)
            if len(tags) != len(tokens):
                raise TaggerFailure(
                    f"{len(tokens)} tokens but {len(tags)} tags"
                )
            token_counts.append(len(tokens))
            counts = categorize(tags)
            for category in CATEGORY_ORDER:
                per_category[category].append(counts.get(category, 0))
        categories = {}
        for category in CATEGORY_ORDER:
            values = per_category[category]
            if any(values):
                categories[category] = (
                    statistics.fmean(values),
                    statistics.pstdev(values),
                )
        profiles[model_id] = PosProfile(
            sample_count=len(token_counts),
            token_mean=statistics.fmean(token_counts),
            token_std=statistics.pstdev(token_counts),
            categories=categories,
        )
    return profiles
