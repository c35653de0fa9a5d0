"""banaug: LLM-paraphrase augmentation for imbalanced news classification corpora.

Pipeline: load/split a labeled corpus, generate N paraphrase candidates per
minority-class article through a chat-completions endpoint (or an offline
mock), select K of them (randomly or by embedding similarity), assemble the
augmented training set under an explicit composition contract, train a
classifier, and report per-class and support-weighted metrics.
"""

from .corpus import (
    Article,
    Corpus,
    Label,
    Provenance,
    SplitSpec,
    composition,
    load_csv,
    stratified_split,
    write_csv,
)
from .errors import PipelineError
from .genclient import GenConfig, GenRecord, MockBackend, generate, mock_generate
from .metrics import ConfusionMatrix, EvalReport, confusion, evaluate, report_table
from .planner import AugmentPolicy, AugmentedPlan, build_augmented, expected_composition
from .prompting import (
    CandidateSet,
    PromptMode,
    PromptRequest,
    build_few_shot,
    build_zero_shot,
    parse_candidates,
)
from .selection import SelectionPolicy, Strategy, apply_policy, select_random, select_similar

__version__ = "0.1.0"

__all__ = [
    "Article", "Corpus", "Label", "Provenance", "SplitSpec",
    "composition", "load_csv", "stratified_split", "write_csv",
    "PipelineError",
    "GenConfig", "GenRecord", "MockBackend", "generate", "mock_generate",
    "ConfusionMatrix", "EvalReport", "confusion", "evaluate", "report_table",
    "AugmentPolicy", "AugmentedPlan", "build_augmented", "expected_composition",
    "CandidateSet", "PromptMode", "PromptRequest",
    "build_few_shot", "build_zero_shot", "parse_candidates",
    "SelectionPolicy", "Strategy", "apply_policy", "select_random", "select_similar",
    "__version__",
]
