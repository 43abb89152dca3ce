"""Six-agent generation chain: providers, prompts, contracts, orchestration."""

from .jsonl import parse_agent_jsonl
from .pipeline import (
    PipelineReport,
    call_agent,
    collect_context,
    draft_queries,
    filter_answer,
    refine_question,
    retrieve_answer,
    run_pipeline,
)
from .prompts import load_template, render_prompt
from .providers import (
    BaseProvider,
    DeterministicMockProvider,
    LiveHttpProvider,
    ProviderBinding,
    ProviderError,
    ProviderKind,
    ProviderResponse,
    ReplayProvider,
    build_provider,
)
from .selfcontain import (
    SelfContainmentReport,
    bare_number_references,
    check_self_containment,
    cited_formulas,
    defined_symbols,
    math_symbols,
    undefined_symbols,
)

__all__ = [
    "parse_agent_jsonl",
    "PipelineReport",
    "call_agent",
    "collect_context",
    "draft_queries",
    "filter_answer",
    "refine_question",
    "retrieve_answer",
    "run_pipeline",
    "load_template",
    "render_prompt",
    "BaseProvider",
    "DeterministicMockProvider",
    "LiveHttpProvider",
    "ProviderBinding",
    "ProviderError",
    "ProviderKind",
    "ProviderResponse",
    "ReplayProvider",
    "build_provider",
    "SelfContainmentReport",
    "bare_number_references",
    "check_self_containment",
    "cited_formulas",
    "defined_symbols",
    "math_symbols",
    "undefined_symbols",
]
