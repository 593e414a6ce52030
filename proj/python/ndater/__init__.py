# SPDX-License-Identifier: Apache-2.0
"""Python bindings for the ndater document-dating engine."""

from ._core import (
    CheckpointError,
    ConfigError,
    DimensionError,
    Model,
    ValidationError,
    canonicalize,
    derive_year,
    generate_synthetic,
    gradcheck,
    has_year_mention,
    offset_document,
    run_cli,
    score,
)

__all__ = [
    "CheckpointError",
    "ConfigError",
    "DimensionError",
    "Model",
    "ValidationError",
    "canonicalize",
    "derive_year",
    "generate_synthetic",
    "gradcheck",
    "has_year_mention",
    "offset_document",
    "run_cli",
    "score",
]
