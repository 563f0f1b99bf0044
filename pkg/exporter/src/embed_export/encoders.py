"""Encoder resolution and the built-in reference encoder.

An encoder is any callable taking one preprocessed image array and returning
a fixed-length one-dimensional feature vector. Real models are injected via
an import spec of the form 'package.module:attribute'; this package never
bundles one. The identity encoder simply flattens its input and exists as
the deterministic reference for round-trip and golden-file checks.
"""

from __future__ import annotations

import importlib
from typing import Callable

import numpy as np

from .errors import SchemaError


def identity_encoder(array: np.ndarray) -> np.ndarray:
    """Flatten the input array row-major; d equals h*w or h*w*c."""
    return np.asarray(array, dtype=np.float32).reshape(-1)


def resolve_encoder(spec: str) -> Callable[[np.ndarray], np.ndarray]:
    """Import 'package.module:attribute' and return the callable it names.

    The attribute part may be dotted to reach into classes or namespaces.
    """
    module_name, sep, attr_path = spec.partition(":")
    if not sep or not module_name or not attr_path:
        raise SchemaError(
            f"encoder spec {spec!r} must look like 'package.module:callable'"
        )
    try:
        module = importlib.import_module(module_name)
    except ImportError as exc:
        raise SchemaError(f"cannot import encoder module {module_name!r}: {exc}") from exc
    target: object = module
    for part in attr_path.split("."):
        try:
            target = getattr(target, part)
        except AttributeError as exc:
            raise SchemaError(
                f"module {module_name!r} has no attribute {attr_path!r}"
            ) from exc
    if not callable(target):
        raise SchemaError(
            f"encoder {spec!r} resolved to non-callable {type(target).__name__}"
        )
    return target
