"""Pluggable tokenizers for code-length measurement.

Token counts drive candidate filtering and complexity tiering, so they must
be reproducible: every sample records the tokenizer id that produced its
count.  The default tokenizer is a deterministic word/punctuation splitter
with no external dependencies.
"""

from __future__ import annotations

import re
from typing import Callable

DEFAULT_TOKENIZER = "whitespace-punct-v1"

# A token is either a run of word characters or a single non-space symbol.
_WORD_OR_PUNCT = re.compile(r"\w+|[^\w\s]")

_REGISTRY: dict[str, Callable[[str], int]] = {}


class UnknownTokenizerError(KeyError):
    pass


def register_tokenizer(tokenizer_id: str, fn: Callable[[str], int]) -> None:
    _REGISTRY[tokenizer_id] = fn


def count_tokens(code: str, tokenizer_id: str = DEFAULT_TOKENIZER) -> int:
    """Count tokens in `code` with the named tokenizer. Deterministic."""
    try:
        fn = _REGISTRY[tokenizer_id]
    except KeyError:
        raise UnknownTokenizerError(tokenizer_id) from None
    n = fn(code)
    if n < 0:
        raise ValueError(f"tokenizer {tokenizer_id!r} returned negative count")
    return n


register_tokenizer(DEFAULT_TOKENIZER, lambda code: len(_WORD_OR_PUNCT.findall(code)))
