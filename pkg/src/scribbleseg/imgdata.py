"""Raster data model: images, scribble overlays, masks, dataset manifests.

Scribbles travel in a separate overlay raster, never composited onto the
image: pure red (255,0,0) marks background seeds, pure green (0,255,0)
foreground seeds, anything else is unlabeled. Masks are single-channel
{0,255} PNGs. A manifest is a UTF-8 text file with one tab-separated record
per line: ``<id>\\t<image>\\t<scribbles>\\t<groundtruth>``; ``#`` starts a
comment; paths are relative to the manifest's directory.

All types are immutable after construction (arrays are frozen), so they are
safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DecodeError, DimensionError, ManifestError

UNLABELED = 0
FOREGROUND = 1
BACKGROUND = 2

_SCRIBBLE_FG_COLOR = (0, 255, 0)
_SCRIBBLE_BG_COLOR = (255, 0, 0)


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ImageRGB:
    """8-bit RGB raster; ``pixels`` is (height, width, 3) uint8, read-only."""

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3 or p.dtype != np.uint8:
            raise ValueError("pixels must be (h, w, 3) uint8")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        _freeze(p)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def n_pixels(self) -> int:
        return self.height * self.width


@dataclass(frozen=True)
class ScribbleMap:
    """Per-pixel seed labels in {UNLABELED, FOREGROUND, BACKGROUND}."""

    labels: np.ndarray  # (h, w) uint8

    def __post_init__(self):
        l = self.labels
        if l.ndim != 2 or l.dtype != np.uint8:
            raise ValueError("labels must be (h, w) uint8")
        if l.max(initial=0) > BACKGROUND:
            raise ValueError("labels must be in {0, 1, 2}")
        _freeze(l)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def fg_count(self) -> int:
        return int((self.labels == FOREGROUND).sum())

    @property
    def bg_count(self) -> int:
        return int((self.labels == BACKGROUND).sum())

    def merged_with(self, other: "ScribbleMap") -> "ScribbleMap":
        """Union of two scribble maps; the newer map wins where both label."""
        if other.labels.shape != self.labels.shape:
            raise DimensionError("scribble maps differ in size")
        out = self.labels.copy()
        m = other.labels != UNLABELED
        out[m] = other.labels[m]
        return ScribbleMap(out)


@dataclass(frozen=True)
class GroundTruthMask:
    """Binary per-pixel labels; True = foreground."""

    labels: np.ndarray  # (h, w) bool

    def __post_init__(self):
        l = self.labels
        if l.ndim != 2 or l.dtype != np.bool_:
            raise ValueError("labels must be (h, w) bool")
        _freeze(l)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


@dataclass(frozen=True)
class Sample:
    sample_id: str
    image_path: Path
    scribble_path: Path
    ground_truth_path: Path


@dataclass(frozen=True)
class DatasetManifest:
    samples: tuple[Sample, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)


def load_image(path) -> ImageRGB:
    """Decode an 8-bit PNG/raster as RGB; grayscale is promoted by replication."""
    try:
        with Image.open(path) as im:
            if im.mode in ("I", "I;16", "F"):
                raise DecodeError(f"unsupported bit depth {im.mode!r}: {path}")
            if im.mode == "L":
                arr = np.asarray(im, dtype=np.uint8)
                arr = np.repeat(arr[:, :, None], 3, axis=2)
            else:
                arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except DecodeError:
        raise
    except Exception as exc:
        raise DecodeError(f"cannot decode image {path}: {exc}") from exc
    return ImageRGB(np.ascontiguousarray(arr))


def load_scribbles(path, image: ImageRGB | None = None) -> ScribbleMap:
    """Decode a scribble overlay raster.

    Pure red pixels become background seeds, pure green foreground seeds.
    If ``image`` is given, the overlay must match its size exactly.
    """
    rgb = load_image(path).pixels
    if image is not None and rgb.shape[:2] != image.pixels.shape[:2]:
        raise DimensionError(
            f"scribbles {rgb.shape[1]}x{rgb.shape[0]} do not match image "
            f"{image.width}x{image.height}: {path}"
        )
    labels = np.zeros(rgb.shape[:2], dtype=np.uint8)
    labels[np.all(rgb == _SCRIBBLE_FG_COLOR, axis=2)] = FOREGROUND
    labels[np.all(rgb == _SCRIBBLE_BG_COLOR, axis=2)] = BACKGROUND
    return ScribbleMap(labels)


def scribbles_to_rgb(scribbles: ScribbleMap) -> np.ndarray:
    """Inverse of load_scribbles: encode labels as the red/green overlay raster."""
    rgb = np.zeros((scribbles.height, scribbles.width, 3), dtype=np.uint8)
    rgb[scribbles.labels == FOREGROUND] = _SCRIBBLE_FG_COLOR
    rgb[scribbles.labels == BACKGROUND] = _SCRIBBLE_BG_COLOR
    return rgb


def save_scribbles(scribbles: ScribbleMap, path) -> None:
    Image.fromarray(scribbles_to_rgb(scribbles)).save(path, format="PNG")


def save_mask(mask: GroundTruthMask, path) -> None:
    """Write a mask as single-channel PNG, foreground=255 / background=0."""
    arr = np.where(mask.labels, 255, 0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path, format="PNG")


def load_mask(path) -> GroundTruthMask:
    """Read a mask PNG; any nonzero value counts as foreground."""
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("L"))
    except Exception as exc:
        raise DecodeError(f"cannot decode mask {path}: {exc}") from exc
    return GroundTruthMask(arr > 127)


def load_dataset(manifest_path) -> DatasetManifest:
    """Parse and validate a dataset manifest; samples keep file order."""
    manifest_path = Path(manifest_path)
    try:
        text = manifest_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {manifest_path}: {exc}") from exc

    base = manifest_path.parent
    samples: list[Sample] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ManifestError(
                f"{manifest_path}:{lineno}: expected 4 tab-separated fields, got {len(parts)}"
            )
        sid, img, scr, gt = (p.strip() for p in parts)
        if sid in seen:
            raise ManifestError(f"{manifest_path}:{lineno}: duplicate id {sid!r}")
        seen.add(sid)
        paths = [base / img, base / scr, base / gt]
        for p in paths:
            if not p.is_file():
                raise ManifestError(f"{manifest_path}:{lineno}: missing file {p}")
        samples.append(Sample(sid, *paths))
    return DatasetManifest(tuple(samples))
