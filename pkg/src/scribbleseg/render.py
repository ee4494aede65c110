"""Mask visualization helpers shared by the CLI and the HTTP service."""

from __future__ import annotations

import io

import numpy as np
import scipy.ndimage as ndi
from PIL import Image

from .imgdata import GroundTruthMask, ImageRGB

_BOUNDARY_COLOR = (0, 255, 0)
_TP_COLOR = (0, 200, 0)
_FP_COLOR = (220, 0, 0)
_FN_COLOR = (0, 0, 220)
_ALPHA = 0.5


def mask_boundary(mask: np.ndarray) -> np.ndarray:
    """Pixels of the foreground that touch the background (8-connectivity)."""
    er = ndi.binary_erosion(mask, structure=np.ones((3, 3), dtype=bool), border_value=0)
    return mask & ~er


def boundary_overlay(img: ImageRGB, mask: GroundTruthMask) -> np.ndarray:
    out = np.array(img.pixels, copy=True)
    out[mask_boundary(mask.labels)] = _BOUNDARY_COLOR
    return out


def tinted_overlay(img: ImageRGB, mask: GroundTruthMask, gt: GroundTruthMask) -> np.ndarray:
    """True positive green, false positive red, false negative blue, plus the
    mask boundary drawn on top."""
    out = img.pixels.astype(np.float64)
    m, g = mask.labels, gt.labels
    for sel, color in (
        (m & g, _TP_COLOR),
        (m & ~g, _FP_COLOR),
        (~m & g, _FN_COLOR),
    ):
        out[sel] = (1.0 - _ALPHA) * out[sel] + _ALPHA * np.asarray(color, dtype=np.float64)
    out = np.clip(np.round(out), 0, 255).astype(np.uint8)
    out[mask_boundary(m)] = _BOUNDARY_COLOR
    return out


def png_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    mode = "L" if arr.ndim == 2 else "RGB"
    Image.fromarray(arr, mode=mode).save(buf, format="PNG")
    return buf.getvalue()
