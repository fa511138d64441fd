"""Fusion of the two best captions through an instruction-following LLM.

The prompt template is fixed text with two slots. Raw completions are
normalized by stripping a known preamble, surrounding whitespace and
quotes, then capitalizing the first character and ensuring terminal
punctuation. When both inputs are the same sentence (a frequent failure
of ranked ensembles on easy images) the pair is flagged as collapsed and
fusion can optionally be skipped.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from typing import Protocol

from .errors import (
    BadTemplate,
    ClientRefused,
    ClientTimeout,
    EmptyCaption,
    EmptyResponse,
)

logger = logging.getLogger(__name__)

DEFAULT_PROMPT_TEMPLATE = (
    "Combine the meaning of these 2 sentences into 1 sentence, considering "
    "the semantic meaning and the syntactic meaning. The sentences are: "
    "{caption1}; {caption2}. These sentences describe an image, I want to "
    "get the best caption of the image, using the information in these two "
    "sentences."
)

DEFAULT_STRIP_PREFIXES = ("The caption for the image could be:",)

_QUOTE_CHARS = "\"'“”‘’"
_TERMINAL = ".!?"


@dataclass
class FusionFlags:
    prefix_stripped: bool = False
    collapsed: bool = False
    truncated: bool = False

    def to_dict(self) -> dict:
        return {
            "prefix_stripped": self.prefix_stripped,
            "collapsed": self.collapsed,
            "truncated": self.truncated,
        }


@dataclass
class FusionResult:
    raw: str
    cleaned: str
    flags: FusionFlags


@dataclass
class FusionConfig:
    template: str = DEFAULT_PROMPT_TEMPLATE
    temperature: float = 0.0
    max_tokens: int = 64
    retries: int = 3
    backoff_base: float = 0.5
    strip_prefixes: tuple[str, ...] = DEFAULT_STRIP_PREFIXES
    skip_on_collapse: bool = False


class FusionClient(Protocol):
    """Completion endpoint for a single prompt."""

    def complete(self, prompt: str, temperature: float, max_tokens: int) -> str:
        ...


def render_prompt(caption1: str, caption2: str, template: str | None = None) -> str:
    """Fill both caption slots of the template.

    Raises:
        EmptyCaption: if either caption is empty or whitespace.
        BadTemplate: unless each slot occurs exactly once.
    """
    if not caption1.strip() or not caption2.strip():
        raise EmptyCaption("both captions must be non-empty")
    tpl = DEFAULT_PROMPT_TEMPLATE if template is None else template
    for slot in ("{caption1}", "{caption2}"):
        if tpl.count(slot) != 1:
            raise BadTemplate(f"template must contain {slot} exactly once")
    return tpl.replace("{caption1}", caption1).replace("{caption2}", caption2)


def captions_collapse(caption1: str, caption2: str) -> bool:
    """True when the two captions are the same sentence.

    Equality ignores case, runs of whitespace and terminal punctuation.
    """
    def norm(text: str) -> str:
        return " ".join(text.lower().split()).rstrip(_TERMINAL + " ")

    return norm(caption1) == norm(caption2)


def postprocess(
    raw: str, prefixes: tuple[str, ...] = DEFAULT_STRIP_PREFIXES
) -> tuple[str, FusionFlags]:
    """Normalize a raw completion into a presentable caption.

    Strips whitespace, surrounding quotes and any configured preamble
    (case-insensitive) until stable, then capitalizes the first character
    and appends a period when no terminal punctuation is present. The
    function is idempotent: feeding a cleaned caption back through changes
    nothing. An input that normalizes to nothing yields "" with the
    truncated flag set.
    """
    flags = FusionFlags()
    text = raw
    lowered_prefixes = [p.lower() for p in prefixes if p]
    while True:
        previous = text
        text = text.strip().strip(_QUOTE_CHARS).strip()
        low = text.lower()
        for original, lowered in zip([p for p in prefixes if p], lowered_prefixes):
            if low.startswith(lowered):
                text = text[len(original):]
                flags.prefix_stripped = True
                break
        if text == previous:
            break
    if not text:
        flags.truncated = True
        return "", flags
    text = text[0].upper() + text[1:]
    if text[-1] not in _TERMINAL:
        text += "."
    return text, flags


def _call_with_retries(
    client: FusionClient, prompt: str, config: FusionConfig
) -> str:
    attempts = max(1, config.retries)
    for attempt in range(attempts):
        try:
            return client.complete(prompt, config.temperature, config.max_tokens)
        except ClientTimeout as exc:
            exc.prompt = exc.prompt or prompt
            if attempt + 1 >= attempts:
                raise
            delay = config.backoff_base * (2 ** attempt)
            logger.warning(
                "fusion timeout (attempt %d/%d), retrying in %.2fs",
                attempt + 1, attempts, delay,
            )
            if delay > 0:
                time.sleep(delay)
    raise AssertionError("unreachable")


def fuse(
    caption1: str,
    caption2: str,
    client: FusionClient,
    config: FusionConfig | None = None,
) -> FusionResult:
    """Fuse two captions into one via the client.

    The collapsed flag is always computed. With ``skip_on_collapse`` set
    and a collapsed pair, the client is never called and caption1 passes
    through verbatim. Timeouts are retried with exponential backoff up to
    ``config.retries`` attempts; refusals are not retried.

    Raises:
        EmptyCaption, BadTemplate: from prompt rendering.
        ClientTimeout, ClientRefused: from the client, prompt attached.
        EmptyResponse: if the completion is empty or whitespace.
    """
    cfg = config or FusionConfig()
    collapsed = captions_collapse(caption1, caption2)
    if collapsed and cfg.skip_on_collapse:
        return FusionResult(
            raw="",
            cleaned=caption1,
            flags=FusionFlags(collapsed=True),
        )
    prompt = render_prompt(caption1, caption2, cfg.template)
    try:
        raw = _call_with_retries(client, prompt, cfg)
    except ClientRefused as exc:
        exc.prompt = exc.prompt or prompt
        raise
    if raw is None or not raw.strip():
        raise EmptyResponse("fusion returned an empty completion", prompt=prompt)
    cleaned, flags = postprocess(raw, cfg.strip_prefixes)
    flags.collapsed = collapsed
    if not cleaned:
        flags.truncated = True
    return FusionResult(raw=raw, cleaned=cleaned, flags=flags)


def make_rule_key(prompt: str) -> str:
    """Stable lookup key for mock rules: sha256 of the exact prompt."""
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class HttpFusionClient:
    """LLM endpoint speaking JSON: POST {prompt, temperature, max_tokens}."""

    def __init__(self, url: str, timeout: float = 60.0, session=None):
        import requests

        self.url = url
        self.timeout = timeout
        self._session = session or requests.Session()
        self._requests = requests

    def complete(self, prompt: str, temperature: float, max_tokens: int) -> str:
        try:
            response = self._session.post(
                self.url,
                json={
                    "prompt": prompt,
                    "temperature": temperature,
                    "max_tokens": max_tokens,
                },
                timeout=self.timeout,
            )
        except self._requests.Timeout as exc:
            raise ClientTimeout(str(exc), prompt=prompt) from exc
        except self._requests.RequestException as exc:
            raise ClientRefused(str(exc), prompt=prompt) from exc
        if response.status_code // 100 != 2:
            raise ClientRefused(
                f"fusion endpoint returned HTTP {response.status_code}", prompt=prompt
            )
        try:
            text = response.json()["text"]
        except (ValueError, KeyError) as exc:
            raise ClientRefused(f"malformed fusion response: {exc}", prompt=prompt) from exc
        if not isinstance(text, str):
            raise ClientRefused("fusion response text is not a string", prompt=prompt)
        return text


class MockFusionClient:
    """Deterministic offline stand-in for the LLM.

    Rules map ``make_rule_key(prompt)`` to a canned completion. Prompts
    without a rule fall back to echoing the two captions extracted from
    the prompt, joined with " and ", which keeps unscripted pipelines
    hermetic and reproducible.
    """

    def __init__(self, rules: dict[str, str] | None = None):
        self.rules = dict(rules or {})
        self.calls = 0

    @classmethod
    def from_file(cls, path: str) -> "MockFusionClient":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def complete(self, prompt: str, temperature: float, max_tokens: int) -> str:
        self.calls += 1
        key = make_rule_key(prompt)
        if key in self.rules:
            return self.rules[key]
        return self._echo(prompt)

    @staticmethod
    def _echo(prompt: str) -> str:
        _, found, rest = prompt.partition("The sentences are: ")
        if not found:
            return prompt
        segment, found, _ = rest.partition(". These sentences")
        if not found:
            return rest
        first, found, second = segment.partition("; ")
        if not found:
            return segment
        return f"{first} and {second}"
