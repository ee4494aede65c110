"""Synthetic inputs: two-region test images with annotations, and 2-D Gaussian
point clouds for the desk-scale classification benchmark."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.ndimage as ndi

from .imgdata import (
    BACKGROUND,
    FOREGROUND,
    GroundTruthMask,
    ImageRGB,
    ScribbleMap,
    save_mask,
    save_scribbles,
)
from PIL import Image


def two_region_image(
    rng: np.random.Generator,
    height: int = 64,
    width: int = 64,
    noise_sigma: float = 5.0,
) -> tuple[ImageRGB, GroundTruthMask]:
    """One solid shape on a solid background, distinct colours, mild noise."""
    while True:
        fg_color = rng.integers(0, 256, size=3)
        bg_color = rng.integers(0, 256, size=3)
        if np.linalg.norm(fg_color.astype(float) - bg_color) > 120:
            break
    gt = np.zeros((height, width), dtype=bool)
    margin_r, margin_c = height // 5, width // 5
    if rng.random() < 0.5:  # rectangle
        r0 = int(rng.integers(margin_r, height // 2 - 2))
        c0 = int(rng.integers(margin_c, width // 2 - 2))
        r1 = int(rng.integers(height // 2 + 2, height - margin_r))
        c1 = int(rng.integers(width // 2 + 2, width - margin_c))
        gt[r0:r1, c0:c1] = True
    else:  # ellipse
        rr, cc = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
        cy, cx = height / 2 + rng.integers(-4, 5), width / 2 + rng.integers(-4, 5)
        ay = rng.uniform(height / 6, height / 2 - margin_r)
        ax = rng.uniform(width / 6, width / 2 - margin_c)
        gt = ((rr - cy) / ay) ** 2 + ((cc - cx) / ax) ** 2 <= 1.0
    pix = np.where(gt[..., None], fg_color, bg_color).astype(np.float64)
    pix += rng.normal(0.0, noise_sigma, size=pix.shape)
    return ImageRGB(np.clip(pix, 0, 255).astype(np.uint8)), GroundTruthMask(gt)


def _stroke_inside(mask: np.ndarray, length: int) -> list[tuple[int, int]]:
    """A horizontal run of pixels around the innermost point of a region."""
    dist = ndi.distance_transform_cdt(mask, metric="chessboard")
    r, c = np.unravel_index(np.argmax(dist), dist.shape)
    pts = []
    for dc in range(-length // 2, length // 2 + 1):
        cc = c + dc
        if 0 <= cc < mask.shape[1] and mask[r, cc]:
            pts.append((int(r), int(cc)))
    return pts or [(int(r), int(c))]


def annotation_scribbles(
    gt: GroundTruthMask, fg_strokes: int = 1, bg_strokes: int = 3, length: int = 9
) -> ScribbleMap:
    """Deterministic seed strokes: one inside the object, three around it."""
    h, w = gt.labels.shape
    labels = np.zeros((h, w), dtype=np.uint8)
    fg = gt.labels
    for r, c in _stroke_inside(fg, length):
        labels[r, c] = FOREGROUND
    bg = ~fg
    # three background strokes: split the background into left/right/top-bottom
    # thirds and mark the innermost run of each part that exists
    parts = [
        bg & (np.arange(w)[None, :] < w // 3),
        bg & (np.arange(w)[None, :] >= 2 * w // 3),
        bg & (np.arange(w)[None, :] >= w // 3) & (np.arange(w)[None, :] < 2 * w // 3),
    ]
    for part in parts[:bg_strokes]:
        if not part.any():
            continue
        for r, c in _stroke_inside(part, length):
            labels[r, c] = BACKGROUND
    return ScribbleMap(labels)


def synthetic_suite(
    n_images: int = 20, seed: int = 7, height: int = 64, width: int = 64
) -> list[tuple[ImageRGB, GroundTruthMask, ScribbleMap]]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_images):
        img, gt = two_region_image(rng, height, width)
        out.append((img, gt, annotation_scribbles(gt)))
    return out


def write_synthetic_dataset(directory, n_images: int = 5, seed: int = 7) -> Path:
    """Materialize a suite as PNGs plus a manifest; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = ["# synthetic two-region suite"]
    for i, (img, gt, scr) in enumerate(synthetic_suite(n_images, seed)):
        sid = f"synth{i:03d}"
        Image.fromarray(np.asarray(img.pixels)).save(directory / f"{sid}.png")
        save_scribbles(scr, directory / f"{sid}_scribbles.png")
        save_mask(gt, directory / f"{sid}_gt.png")
        lines.append(f"{sid}\t{sid}.png\t{sid}_scribbles.png\t{sid}_gt.png")
    manifest = directory / "manifest.tsv"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


def two_gaussians(
    rng: np.random.Generator,
    n: int,
    separation: float = 4.0,
    labels_per_class: int = 2,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """2-D two-cluster toy: points, +-1 targets, and the labeled indices."""
    n0 = n // 2
    n1 = n - n0
    X = np.vstack(
        [
            rng.normal([-separation / 2.0, 0.0], 1.0, size=(n0, 2)),
            rng.normal([+separation / 2.0, 0.0], 1.0, size=(n1, 2)),
        ]
    )
    y = np.concatenate([np.full(n0, 1.0), np.full(n1, -1.0)])
    labeled = np.concatenate(
        [
            rng.choice(n0, labels_per_class, replace=False),
            n0 + rng.choice(n1, labels_per_class, replace=False),
        ]
    )
    return X, y, labeled
