"""intentbench: a benchmark harness for LLM-based intent translation.

Translates 5G service orders (CFS) into per-NF resource configurations (RFS)
through pluggable LLM backends under zero-/one-/few-shot prompting, and scores
every translation with the FEACI metric suite plus BLEU/ROUGE baselines.
"""

__version__ = "0.1.0"

from .backends import BackendDescriptor, CompletionResult, MockPolicy, Usage, complete, trial_cost
from .catalog import builtin_backends_path, builtin_catalog_dir, load_catalog, match_product
from .model import Catalog, NFConfig, ProductSpec, ReferenceSet, ResourceConfig, ServiceOrder, flatten_config
from .prompts import Exemplar, PromptMessages, PromptMode, build_prompt, load_exemplars
from .report import ReportBundle, aggregate, render
from .runner import RunManifest, TrialPlan, TrialRecord, execute, plan_trials
from .scoring import (
    AggregateScore,
    Thresholds,
    TrialScore,
    Weights,
    accuracy_score,
    eval_score,
    explanation_judge,
    extract_config,
    normalize_cost,
    normalize_inference,
)
from .textmetrics import RougeVariant, bleu, rouge

__all__ = [
    "AggregateScore",
    "BackendDescriptor",
    "Catalog",
    "CompletionResult",
    "Exemplar",
    "MockPolicy",
    "NFConfig",
    "ProductSpec",
    "PromptMessages",
    "PromptMode",
    "ReferenceSet",
    "ReportBundle",
    "ResourceConfig",
    "RougeVariant",
    "RunManifest",
    "ServiceOrder",
    "Thresholds",
    "TrialPlan",
    "TrialRecord",
    "TrialScore",
    "Usage",
    "Weights",
    "accuracy_score",
    "aggregate",
    "bleu",
    "build_prompt",
    "builtin_backends_path",
    "builtin_catalog_dir",
    "complete",
    "eval_score",
    "execute",
    "explanation_judge",
    "extract_config",
    "flatten_config",
    "load_catalog",
    "load_exemplars",
    "match_product",
    "normalize_cost",
    "normalize_inference",
    "plan_trials",
    "render",
    "rouge",
    "trial_cost",
]
