"""Configuration loading, normalization and compilation."""

from .canonical import CanonicalConfig, Framework, Hint, MemorySpec, ModelSpec, to_document
from .compiler import CompileError, compile_config, type_context
from .frameworks import ConfigError, detect_framework, load_config, load_document, normalize

__all__ = [
    "CanonicalConfig", "CompileError", "ConfigError", "Framework", "Hint", "MemorySpec",
    "ModelSpec", "compile_config", "detect_framework", "load_config", "load_document",
    "normalize", "to_document", "type_context",
]
