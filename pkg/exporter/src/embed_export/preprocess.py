"""Image loading and preprocessing for encoder input.

Loading scales 8-bit pixel values to float32 in [0, 1]. Preprocessing
resizes to a square working resolution, either by plain bilinear resampling
or, with pad_aspect, by scaling the longer side to the resolution and
center-padding the shorter side with black, then applies mean/std
normalization. Padding happens in [0, 1] space, so padded pixels normalize
to (0 - mean) / std.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import SchemaError

MODES = ("L", "RGB")


def load_image(path: str, mode: str = "L") -> np.ndarray:
    """Read an image file as float32 in [0, 1]: (h, w) for L, (h, w, 3) for RGB."""
    if mode not in MODES:
        raise SchemaError(f"unsupported image mode {mode!r}; expected one of {MODES}")
    try:
        with Image.open(path) as img:
            arr = np.asarray(img.convert(mode), dtype=np.float32)
    except (OSError, ValueError) as exc:
        raise SchemaError(f"cannot read image {path}: {exc}") from exc
    return arr / np.float32(255.0)


def _require_image_array(array: np.ndarray) -> np.ndarray:
    array = np.asarray(array, dtype=np.float32)
    if array.ndim not in (2, 3) or array.shape[0] < 1 or array.shape[1] < 1:
        raise SchemaError(f"expected a (h, w) or (h, w, c) image array, got shape {array.shape}")
    return array


def resize_image(array: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinear resize of a float image array to (height, width[, c])."""
    array = _require_image_array(array)
    if width < 1 or height < 1:
        raise SchemaError(f"target size {width}x{height} must be positive")

    def one_channel(channel: np.ndarray) -> np.ndarray:
        resized = Image.fromarray(np.ascontiguousarray(channel), mode="F").resize(
            (width, height), Image.Resampling.BILINEAR
        )
        return np.asarray(resized, dtype=np.float32)

    if array.ndim == 2:
        return one_channel(array)
    channels = [one_channel(array[..., c]) for c in range(array.shape[2])]
    return np.stack(channels, axis=-1)


def fit_with_padding(array: np.ndarray, resolution: int) -> np.ndarray:
    """Scale the longer side to `resolution`; center-pad the shorter side with 0."""
    array = _require_image_array(array)
    height, width = array.shape[:2]
    if height >= width:
        new_h = resolution
        new_w = max(1, int(width * resolution / height + 0.5))
    else:
        new_w = resolution
        new_h = max(1, int(height * resolution / width + 0.5))
    resized = resize_image(array, new_w, new_h)
    canvas = np.zeros((resolution, resolution) + array.shape[2:], dtype=np.float32)
    top = (resolution - new_h) // 2
    left = (resolution - new_w) // 2
    canvas[top : top + new_h, left : left + new_w] = resized
    return canvas


def normalize(array: np.ndarray, mean: float = 0.5, std: float = 0.25) -> np.ndarray:
    """Shift and scale: (x - mean) / std, kept in float32."""
    if not std > 0:
        raise SchemaError(f"normalization std must be positive, got {std}")
    array = np.asarray(array, dtype=np.float32)
    return np.asarray((array - np.float32(mean)) / np.float32(std), dtype=np.float32)


def preprocess(
    array: np.ndarray,
    resolution: int,
    pad_aspect: bool = False,
    mean: float = 0.5,
    std: float = 0.25,
) -> np.ndarray:
    """Full pipeline from a loaded [0, 1] array to the normalized encoder input."""
    if resolution < 1:
        raise SchemaError(f"resolution must be positive, got {resolution}")
    if pad_aspect:
        resized = fit_with_padding(array, resolution)
    else:
        resized = resize_image(array, resolution, resolution)
    return normalize(resized, mean=mean, std=std)
