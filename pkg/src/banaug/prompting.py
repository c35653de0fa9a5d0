"""Paraphrase prompt construction and tagged-output parsing.

The generation contract with the LLM is purely textual: the instruction asks
for a fixed number of paraphrases of one article, each wrapped in the ASCII
tags ``[BEGINARTICLE]`` / ``[ENDARTICLE]``. Those tags must never be
localized or restyled; every byte matters to the parser.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from enum import Enum

from .corpus import Article
from .errors import ParameterError

log = logging.getLogger(__name__)

BEGIN_TAG = "[BEGINARTICLE]"
END_TAG = "[ENDARTICLE]"

# Instruction sent to the model; {n} is the number of paraphrases requested
# and {text} the source article body.
PARAPHRASE_TEMPLATE = (
    "Paraphrase the following news article delimited by triple backquotes in "
    "{n} different ways. The generated articles must retain the exact same "
    "meaning, facts, and label (real/fake) as the original article. Maintain "
    "the article format and length. Only return the articles and no extra "
    "explanation. Enclose each paraphrased article within [BEGINARTICLE] and "
    "[ENDARTICLE] tags.\n"
    "\n"
    "```{text}```\n"
    "\n"
    "NUMBERED GENERATED ARTICLES:"
)


class PromptMode(str, Enum):
    ZERO_SHOT = "zero_shot"
    FEW_SHOT = "few_shot"


class ParseStatus(str, Enum):
    COMPLETE = "complete"
    PARTIAL = "partial"
    FAILED = "failed"


@dataclass(frozen=True)
class PromptRequest:
    """One article to paraphrase, plus how to ask."""

    source: Article
    n_variants: int = 5
    mode: PromptMode = PromptMode.ZERO_SHOT
    exemplars: tuple[Article, ...] = ()

    def __post_init__(self):
        if self.n_variants < 1:
            raise ParameterError("n_variants must be >= 1")
        if not self.source.content.strip():
            raise ParameterError("source article has empty content")
        if self.mode is PromptMode.FEW_SHOT:
            if not self.exemplars:
                raise ParameterError("few-shot request needs at least one exemplar")
            bad = [e.id for e in self.exemplars if e.label is not self.source.label]
            if bad:
                raise ParameterError(
                    f"exemplar label mismatch for: {', '.join(bad)}"
                )


@dataclass(frozen=True)
class RequestTemplate:
    """Request parameters shared across a whole run; bind() attaches a source."""

    mode: PromptMode = PromptMode.ZERO_SHOT
    n_variants: int = 5
    exemplars: tuple[Article, ...] = ()

    def bind(self, source: Article) -> PromptRequest:
        return PromptRequest(
            source=source,
            n_variants=self.n_variants,
            mode=self.mode,
            exemplars=self.exemplars,
        )


_BACKQUOTE_RUN = re.compile(r"`{3,}")


def sanitize_for_prompt(text: str) -> str:
    """Break delimiter tokens occurring inside article text.

    A space is inserted inside any literal tag, and backquote runs of three
    or more are split into space-separated singles, so the source text can
    never terminate the prompt's delimiters or fake a parsed candidate. The
    change is logged, not silently swallowed.
    """
    cleaned = text
    for token, broken in ((BEGIN_TAG, "[BEGINARTICLE ]"), (END_TAG, "[ENDARTICLE ]")):
        if token in cleaned:
            while token in cleaned:
                cleaned = cleaned.replace(token, broken)
            log.warning("prompt sanitizer broke %r occurrences in source text", token)
    if _BACKQUOTE_RUN.search(cleaned):
        cleaned = _BACKQUOTE_RUN.sub(lambda m: " ".join("`" * len(m.group())), cleaned)
        log.warning("prompt sanitizer split backquote runs in source text")
    return cleaned


def build_zero_shot(req: PromptRequest) -> str:
    """Render the paraphrase instruction for one article, no exemplars."""
    if req.mode is not PromptMode.ZERO_SHOT:
        raise ParameterError(f"build_zero_shot got mode {req.mode}")
    text = sanitize_for_prompt(req.source.content)
    return PARAPHRASE_TEMPLATE.format(n=req.n_variants, text=text)


def build_few_shot(req: PromptRequest) -> str:
    """Zero-shot instruction preceded by an EXAMPLES: block of same-label articles."""
    if req.mode is not PromptMode.FEW_SHOT:
        raise ParameterError(f"build_few_shot got mode {req.mode}")
    blocks = "\n\n".join(
        f"```{sanitize_for_prompt(e.content)}```" for e in req.exemplars
    )
    body = PARAPHRASE_TEMPLATE.format(
        n=req.n_variants, text=sanitize_for_prompt(req.source.content)
    )
    return f"EXAMPLES:\n\n{blocks}\n\n{body}"


def build_prompt(req: PromptRequest) -> str:
    if req.mode is PromptMode.FEW_SHOT:
        return build_few_shot(req)
    return build_zero_shot(req)


@dataclass(frozen=True)
class CandidateSet:
    """Parsed generations for one source article.

    ``surplus`` counts tag pairs beyond the requested N; over-generation is
    not an error, so such sets are still complete and keep every candidate
    (len(candidates) == requested_n + surplus when complete).
    """

    source_id: str
    raw_response: str
    candidates: tuple[str, ...]
    parse_status: ParseStatus
    requested_n: int
    surplus: int = 0

    def __post_init__(self):
        if self.requested_n < 1:
            raise ParameterError("requested_n must be >= 1")


# leading enumeration markers: western or Bangla digits followed by . ) । or :
_ENUM_MARKER = re.compile(r"^\s*(?:[0-9০-৯]{1,4}\s*[.)।:]\s*)+")


def _strip_enumeration(text: str) -> str:
    return _ENUM_MARKER.sub("", text.strip()).strip()


def parse_candidates(source_id: str, raw: str, requested_n: int) -> CandidateSet:
    """Extract candidates from the tag-wrapped model output.

    Takes every non-overlapping well-paired `[BEGINARTICLE]...[ENDARTICLE]`
    span in order, strips leading enumeration markers and whitespace, and
    drops empty extractions. Never raises on malformed input; the raw
    response is retained for audit regardless of parse status.
    """
    candidates: list[str] = []
    pos = 0
    while True:
        start = raw.find(BEGIN_TAG, pos)
        if start < 0:
            break
        end = raw.find(END_TAG, start + len(BEGIN_TAG))
        if end < 0:
            break  # unclosed trailing tag: not a pair
        body = _strip_enumeration(raw[start + len(BEGIN_TAG): end])
        if body:
            candidates.append(body)
        pos = end + len(END_TAG)

    n_found = len(candidates)
    if n_found == 0:
        status = ParseStatus.FAILED
    elif n_found < requested_n:
        status = ParseStatus.PARTIAL
    else:
        status = ParseStatus.COMPLETE
    surplus = max(0, n_found - requested_n)
    if surplus:
        log.info("source %s: %d candidate(s) beyond the %d requested",
                 source_id, surplus, requested_n)
    return CandidateSet(
        source_id=source_id,
        raw_response=raw,
        candidates=tuple(candidates),
        parse_status=status,
        requested_n=requested_n,
        surplus=surplus,
    )


def wrap_candidates(texts: list[str] | tuple[str, ...]) -> str:
    """Inverse of parse_candidates for well-formed inputs; used by mocks and tests."""
    return "\n".join(f"{BEGIN_TAG}{t}{END_TAG}" for t in texts)
