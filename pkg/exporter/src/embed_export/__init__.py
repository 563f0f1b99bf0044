"""embed-export: run an injected encoder over images, write NPY + manifest.

Bridge between pixels on disk and the embedding-space evaluation toolkit:
it owns preprocessing and serialization only, the encoder is always
user-supplied. The outputs load in that toolkit unchanged.
"""

__version__ = "0.1.0"

from .core import (
    IMAGE_EXTENSIONS,
    SUPPORTED_RESOLUTIONS,
    ExportJob,
    collect_inputs,
    describe_preprocess,
    run_export,
)
from .encoders import identity_encoder, resolve_encoder
from .errors import ComputeError, ExportError, SchemaError
from .preprocess import MODES, fit_with_padding, load_image, normalize, preprocess, resize_image
from .writer import write_embeddings

__all__ = [
    "IMAGE_EXTENSIONS",
    "MODES",
    "SUPPORTED_RESOLUTIONS",
    "ComputeError",
    "ExportError",
    "ExportJob",
    "SchemaError",
    "collect_inputs",
    "describe_preprocess",
    "fit_with_padding",
    "identity_encoder",
    "load_image",
    "normalize",
    "preprocess",
    "resize_image",
    "resolve_encoder",
    "run_export",
    "write_embeddings",
]
