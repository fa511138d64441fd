"""Shared caption tokenizer.

Lowercases, splits on whitespace, and detaches every punctuation
character as its own token. All metrics tokenize through here so that
candidate and reference texts are segmented identically.
"""

from __future__ import annotations

import string
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Sequence

_ASCII_PUNCT = set(string.punctuation)


def _is_punct(ch: str) -> bool:
    return ch in _ASCII_PUNCT or unicodedata.category(ch).startswith("P")


@dataclass
class TokenStream:
    """Tokens of one text plus a record of how punctuation was handled."""

    tokens: list[str] = field(default_factory=list)
    punctuation_removed: bool = True


def tokenize(text: str, keep_punct: bool = False) -> TokenStream:
    """Tokenize a caption.

    Args:
        text: raw caption text.
        keep_punct: when true, punctuation characters stay in the stream
            as single-character tokens; otherwise they are dropped.

    Returns:
        TokenStream with lowercase tokens.
    """
    tokens: list[str] = []
    buf: list[str] = []

    def flush() -> None:
        if buf:
            tokens.append("".join(buf))
            buf.clear()

    for ch in text.lower():
        if ch.isspace():
            flush()
        elif _is_punct(ch):
            flush()
            if keep_punct:
                tokens.append(ch)
        else:
            buf.append(ch)
    flush()
    return TokenStream(tokens=tokens, punctuation_removed=not keep_punct)


def as_tokens(value: "TokenStream | Sequence[str]") -> list[str]:
    """Accept a TokenStream or a plain token sequence."""
    if isinstance(value, TokenStream):
        return list(value.tokens)
    return list(value)


def each_tokens(values: Iterable["TokenStream | Sequence[str]"]) -> list[list[str]]:
    return [as_tokens(v) for v in values]
