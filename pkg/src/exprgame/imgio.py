"""Image helpers: planar float arrays, PNG round-trip, base64 wire decoding.

Images are planar (channel-major) float32 arrays of shape (3, H, W) with
values in [0, 1]; the network boundary requires exactly (3, 64, 64).
8-bit sources are normalized by /255.
"""

from __future__ import annotations

import base64
import io

import numpy as np
from PIL import Image as PILImage

from .errors import ContractError

IMAGE_SHAPE = (3, 64, 64)


def check_image(img, shape=IMAGE_SHAPE) -> np.ndarray:
    """Validate a planar image array: shape (None = any 3-channel), finiteness, [0,1] range."""
    arr = np.asarray(img)
    if shape is None:
        if arr.ndim != 3 or arr.shape[0] != 3:
            raise ContractError(f"expected a (3, H, W) image, got shape {arr.shape}")
    elif arr.shape != shape:
        raise ContractError(f"expected image of shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError("image contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ContractError("image values outside [0, 1]")
    return arr.astype(np.float32, copy=False)


def check_image_batch(X) -> np.ndarray:
    """Validate a batch (n, 3, H, W) of planar images."""
    arr = np.asarray(X)
    if arr.ndim != 4 or arr.shape[1] != 3:
        raise ContractError(f"expected batch of shape (n, 3, H, W), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError("batch contains non-finite values")
    return arr.astype(np.float32, copy=False)


def to_pil(img: np.ndarray) -> PILImage.Image:
    """Planar float [0,1] -> 8-bit RGB PIL image."""
    chw = np.clip(np.asarray(img), 0.0, 1.0)
    hwc = (chw.transpose(1, 2, 0) * 255.0).round().astype(np.uint8)
    return PILImage.fromarray(hwc, mode="RGB")


def from_pil(pim: PILImage.Image) -> np.ndarray:
    """8-bit PIL image -> planar float32 [0,1]."""
    hwc = np.asarray(pim.convert("RGB"), dtype=np.float32) / 255.0
    return np.ascontiguousarray(hwc.transpose(2, 0, 1))


def save_png(img: np.ndarray, path) -> None:
    to_pil(img).save(path, format="PNG")


def load_png(path) -> np.ndarray:
    with PILImage.open(path) as pim:
        return from_pil(pim)


def encode_png_b64(img: np.ndarray) -> str:
    """Planar image -> base64 PNG string (the frame wire encoding)."""
    buf = io.BytesIO()
    to_pil(img).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_frame_b64(payload: str, side: int = 64) -> np.ndarray:
    """Decode a base64 PNG upload and center-crop + resize to the engine input.

    Raises ContractError on undecodable payloads.
    """
    try:
        raw = base64.b64decode(payload, validate=True)
        with PILImage.open(io.BytesIO(raw)) as pim:
            pim = pim.convert("RGB")
            w, h = pim.size
            sq = min(w, h)
            left, top = (w - sq) // 2, (h - sq) // 2
            pim = pim.crop((left, top, left + sq, top + sq))
            pim = pim.resize((side, side), PILImage.BILINEAR)
            return from_pil(pim)
    except ContractError:
        raise
    except Exception as exc:
        raise ContractError(f"undecodable image payload: {exc}") from exc
