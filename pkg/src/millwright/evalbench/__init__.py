"""Evaluation harnesses: tool-depth benchmark, paired critic ablation, and
knowledge-grounded QA scoring."""

from millwright.evalbench.ablation import (
    PairedTrial,
    critic_value_metrics,
    degrade_routing,
    run_critic_ablation,
    score_tool_selection,
)
from millwright.evalbench.depth import BenchQuery, run_depth_benchmark, synthesize_depth_suite
from millwright.evalbench.qa import QAItem, generate_mcq, run_qa, score_qa

__all__ = [
    "BenchQuery",
    "run_depth_benchmark",
    "synthesize_depth_suite",
    "PairedTrial",
    "degrade_routing",
    "score_tool_selection",
    "critic_value_metrics",
    "run_critic_ablation",
    "QAItem",
    "score_qa",
    "generate_mcq",
    "run_qa",
]
