#!/usr/bin/env python3
"""Build zero-shot and few-shot paraphrase prompts, then parse a model reply.

The output contract is textual: every paraphrase comes back wrapped in
[BEGINARTICLE]/[ENDARTICLE] tags, and the parser tolerates preambles,
numbering, and truncated junk without ever raising.
"""

from banaug.corpus import Article, Label
from banaug.prompting import (
    PromptMode,
    PromptRequest,
    build_few_shot,
    build_zero_shot,
    parse_candidates,
)

source = Article(
    id="f1", headline="Prices to fall", category="economy", label=Label.FAKE,
    content="Officials claim market prices will drop by half next week. "
            "Experts the report quotes do not exist.",
)

zs = build_zero_shot(PromptRequest(source=source, n_variants=5))
print("--- zero-shot prompt " + "-" * 40)
print(zs)

exemplars = tuple(
    Article(id=f"e{i}", headline="", category="economy", label=Label.FAKE,
            content=f"Exemplar fabricated story number {i}.")
    for i in range(1, 4)
)
fs = build_few_shot(PromptRequest(source=source, n_variants=5,
                                  mode=PromptMode.FEW_SHOT, exemplars=exemplars))
print("\n--- few-shot prompt (first 400 chars) " + "-" * 24)
print(fs[:400] + " ...")

reply = """Sure! Here are the articles:
[BEGINARTICLE]1. Market watchers say prices are set to halve within days.[ENDARTICLE]
[BEGINARTICLE]2. A report insists costs will soon be cut in half; its experts are unverifiable.[ENDARTICLE]
[BEGINARTICLE]3. Unnamed officials promise
"""
cs = parse_candidates(source.id, reply, requested_n=5)
print("\n--- parsed reply " + "-" * 44)
print(f"status: {cs.parse_status.value} ({len(cs.candidates)} of {cs.requested_n})")
for i, c in enumerate(cs.candidates, 1):
    print(f"  {i}: {c}")
print("the unclosed third article is dropped; the raw reply is kept for audit")
