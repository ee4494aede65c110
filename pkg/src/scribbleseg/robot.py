"""Simulated user placing corrective brush strokes.

Each round, the robot finds the largest 8-connected component of the
mask-vs-ground-truth error, stamps a circular stroke (diameter 17 px) at the
component pixel farthest from its boundary, labels it with the ground truth,
and the segmenter re-solves. All ties break in scan order, so traces are
fully deterministic.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.ndimage as ndi

from .imgdata import BACKGROUND, FOREGROUND, GroundTruthMask, ImageRGB, ScribbleMap
from .segmenter import (
    SegmenterParams,
    segment_incremental,
    segment_single_pass,
    start_session,
)

STROKE_DIAMETER = 17

MODE_NAIVE = "naive"
MODE_INCREMENTAL = "incremental"


@dataclass(frozen=True)
class Stroke:
    center: tuple[int, int]  # (row, col)
    label: int               # FOREGROUND or BACKGROUND
    diameter: int = STROKE_DIAMETER


@dataclass(frozen=True)
class TraceStep:
    step: int
    stroke: Stroke | None  # None for step 0 (the initial scribbles)
    jaccard: float


@dataclass(frozen=True)
class RobotTrace:
    steps: tuple[TraceStep, ...]

    @property
    def jaccards(self) -> np.ndarray:
        return np.array([s.jaccard for s in self.steps])

    def write_csv(self, path, meta: str | None = None) -> None:
        with open(path, "w", newline="") as fh:
            if meta:
                fh.write(f"# {meta}\n")
            w = csv.writer(fh)
            w.writerow(["step", "center_x", "center_y", "label", "jaccard"])
            for s in self.steps:
                if s.stroke is None:
                    w.writerow([s.step, "", "", "", f"{s.jaccard:.6f}"])
                else:
                    r, c = s.stroke.center
                    lbl = "fg" if s.stroke.label == FOREGROUND else "bg"
                    w.writerow([s.step, c, r, lbl, f"{s.jaccard:.6f}"])


def disk_offsets(diameter: int) -> np.ndarray:
    """(k, 2) offsets of the filled disk with the given pixel diameter."""
    radius = diameter // 2
    span = np.arange(-radius, radius + 1)
    dr, dc = np.meshgrid(span, span, indexing="ij")
    keep = dr**2 + dc**2 <= radius**2
    return np.stack([dr[keep], dc[keep]], axis=1)


def stroke_pixels(
    stroke: Stroke, shape: tuple[int, int], gt: GroundTruthMask | None = None
) -> np.ndarray:
    """Disk pixel coordinates clipped to the image bounds.

    With ground truth given, the disk is additionally clipped to the region
    of the center's true class: the simulated user never paints across the
    true boundary, so every stroke pixel carries its correct label.
    """
    pts = disk_offsets(stroke.diameter) + np.asarray(stroke.center)
    keep = (
        (pts[:, 0] >= 0)
        & (pts[:, 0] < shape[0])
        & (pts[:, 1] >= 0)
        & (pts[:, 1] < shape[1])
    )
    pts = pts[keep]
    if gt is not None:
        want = stroke.label == FOREGROUND
        pts = pts[gt.labels[pts[:, 0], pts[:, 1]] == want]
    return pts


def stroke_to_scribbles(
    stroke: Stroke, shape: tuple[int, int], gt: GroundTruthMask | None = None
) -> ScribbleMap:
    labels = np.zeros(shape, dtype=np.uint8)
    pts = stroke_pixels(stroke, shape, gt)
    labels[pts[:, 0], pts[:, 1]] = stroke.label
    return ScribbleMap(labels)


def next_stroke(mask: GroundTruthMask, gt: GroundTruthMask) -> Stroke | None:
    """Corrective stroke at the innermost point of the largest error blob.

    Returns None when the mask already matches the ground truth.
    """
    if mask.labels.shape != gt.labels.shape:
        raise ValueError("mask and ground truth differ in size")
    err = mask.labels ^ gt.labels
    if not err.any():
        return None
    eight = np.ones((3, 3), dtype=bool)
    lbl, n = ndi.label(err, structure=eight)
    areas = np.bincount(lbl.ravel())[1:]
    best_area = areas.max()
    candidates = np.nonzero(areas == best_area)[0] + 1
    if len(candidates) > 1:
        # ties: smallest top-left bounding-box corner in scan order
        boxes = ndi.find_objects(lbl)
        candidates = sorted(
            candidates, key=lambda c: (boxes[c - 1][0].start, boxes[c - 1][1].start)
        )
    comp = lbl == candidates[0]

    dist = ndi.distance_transform_cdt(comp, metric="chessboard")
    flat = np.argmax(dist)  # first max in scan order
    center = np.unravel_index(flat, dist.shape)
    label = FOREGROUND if gt.labels[center] else BACKGROUND
    return Stroke(center=(int(center[0]), int(center[1])), label=label)


def run_robot(
    img: ImageRGB,
    gt: GroundTruthMask,
    initial_scribbles: ScribbleMap,
    params: SegmenterParams | None = None,
    max_strokes: int = 20,
    mode: str = MODE_NAIVE,
    jaccard_fn=None,
) -> RobotTrace:
    """Alternate segmentation and corrective strokes, recording the accuracy."""
    from .evaluation import confusion, jaccard  # cycle: evaluation imports robot types

    params = params or SegmenterParams()
    if jaccard_fn is None:
        jaccard_fn = lambda m: jaccard(confusion(m, gt))

    if mode == MODE_NAIVE:
        scribbles = initial_scribbles
        result = segment_single_pass(img, scribbles, params)
    elif mode == MODE_INCREMENTAL:
        state, result = start_session(img, initial_scribbles, params)
    else:
        raise ValueError(f"unknown robot mode {mode!r}")

    steps = [TraceStep(0, None, jaccard_fn(result.mask))]
    for t in range(1, max_strokes + 1):
        stroke = next_stroke(result.mask, gt)
        if stroke is None:
            break
        patch = stroke_to_scribbles(stroke, (img.height, img.width), gt)
        if mode == MODE_NAIVE:
            scribbles = scribbles.merged_with(patch)
            result = segment_single_pass(img, scribbles, params)
        else:
            state, result = segment_incremental(state, patch)
        steps.append(TraceStep(t, stroke, jaccard_fn(result.mask)))
    return RobotTrace(tuple(steps))
