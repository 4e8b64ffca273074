"""Deterministic tool layer: registry, argument schemas, implementations."""

from millwright.tools.registry import ParamSpec, ToolRegistry, ToolSpec, load_manifest
from millwright.tools.impl import ToolContext, build_registry

__all__ = [
    "ParamSpec",
    "ToolSpec",
    "ToolRegistry",
    "load_manifest",
    "ToolContext",
    "build_registry",
]
