"""End-to-end segmentation pipelines.

Single pass: sample pivots, build per-scale feature matrices, rotate with
PCA, solve the histogram eigenfunction problem per dimension, interpolate,
solve for the coefficient vector, average the smoothing fields over scales,
threshold at zero and clean the mask. Incremental refinement appends
pixel-to-new-pivot columns to the stored per-scale matrices and re-runs the
solve on the widened matrices, as an interactive session accumulates strokes.
"""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.ndimage as ndi

from .errors import AnnotationError, DegenerateDataError, DimensionError
from .features import (
    MODE_MULTIPLY,
    AffinityConfig,
    FeatureMatrix,
    PivotBatch,
    PivotSet,
    class_contours,
    compose_features,
    compute_pivot_cues,
    contour_arc_length,
    pca_rotate,
    sample_class_pivots,
    sample_pivots,
)
from .imgdata import BACKGROUND, FOREGROUND, GroundTruthMask, ImageRGB, ScribbleMap
from .spectral import (
    DEFAULT_BINS,
    DEFAULT_LAMBDA,
    SmoothnessSolution,
    batched_histograms,
    interpolate_basis,
    select_smallest,
    smoothness,
    solve_alpha,
    solve_eigenfunctions,
)

log = logging.getLogger(__name__)

_AREA_FRACTION = 0.001  # default island/hole threshold: 0.1% of the image
_STROKE_PIVOT_SPACING = 8.0  # min contour arc between incremental-batch pivots


@dataclass(frozen=True)
class SegmenterParams:
    """Pipeline parameters; the defaults are the control-experiment settings."""

    m: int = 100
    affinity: AffinityConfig = field(default_factory=AffinityConfig)
    lam: float = DEFAULT_LAMBDA
    bins: int = DEFAULT_BINS
    mode: str = MODE_MULTIPLY
    island_min_area: int | None = None  # None: 0.1% of image area
    hole_max_area: int | None = None
    jobs: int = 0  # worker threads for per-scale solves; 0 = one per core

    @property
    def k1(self) -> int:
        return self.affinity.k1

    @property
    def k2(self) -> int:
        return self.affinity.k2

    def resolved_areas(self, n_pixels: int) -> tuple[int, int]:
        auto = int(round(_AREA_FRACTION * n_pixels))
        island = self.island_min_area if self.island_min_area is not None else auto
        hole = self.hole_max_area if self.hole_max_area is not None else auto
        return island, hole


@dataclass(frozen=True)
class SegmentationResult:
    mask: GroundTruthMask
    f_field: np.ndarray  # (h, w)
    timings: dict[str, float]
    params: SegmenterParams


@dataclass
class SessionState:
    """Accumulated inputs of an interactive session (single writer)."""

    image: ImageRGB
    params: SegmenterParams
    scribbles: ScribbleMap
    pivots: PivotSet
    prod_columns: dict[float, np.ndarray]  # per scale: (n, pivot count)
    col_tags: tuple[str, ...]
    raw6: np.ndarray
    raw_tags: tuple[str, ...]
    last_result: SegmentationResult


def scribble_labels(scribbles: ScribbleMap) -> tuple[np.ndarray, np.ndarray]:
    """Flat indices and +1/-1 targets of all labeled pixels."""
    flat = scribbles.labels.ravel()
    idx = np.nonzero(flat != 0)[0]
    y = np.where(flat[idx] == FOREGROUND, 1.0, -1.0)
    return idx, y


def smoothness_from_features(
    fm: FeatureMatrix,
    labeled_idx: np.ndarray,
    labeled_y: np.ndarray,
    m: int,
    bins: int = DEFAULT_BINS,
    lam: float = DEFAULT_LAMBDA,
) -> SmoothnessSolution:
    """PCA-rotate, solve per-dimension eigenfunctions, interpolate, fit alpha."""
    rotated, _ = pca_rotate(fm)
    per_dim = []
    for j, hist in enumerate(batched_histograms(rotated.values, bins)):
        if hist is None:
            continue
        per_dim.append(solve_eigenfunctions(hist, dim_index=j))
    efs = select_smallest(per_dim, m)
    if efs.m == 0:
        raise DegenerateDataError("no nontrivial eigenfunctions")
    U, sigma = interpolate_basis(efs, rotated.values)
    alpha = solve_alpha(U, sigma, labeled_idx, labeled_y, lam)
    return SmoothnessSolution(U=U, sigma=sigma, alpha=alpha, f=smoothness(U, alpha), lam=lam)


def _mean_field(fields: list[np.ndarray]) -> np.ndarray:
    fields = [f for f in fields if f is not None]
    if not fields:
        raise DegenerateDataError("every scale degenerated; no smoothing field")
    return np.mean(fields, axis=0)


def _solve_scales(solve_one, scales, jobs: int) -> list[np.ndarray | None]:
    """Run per-scale solves, optionally on worker threads; results in scale order."""
    if jobs <= 0:
        jobs = min(len(scales), os.cpu_count() or 1)
    def guarded(s):
        try:
            return solve_one(s)
        except DegenerateDataError:
            log.warning("scale %g degenerated; averaging over the remaining scales", s)
            return None
    if jobs == 1 or len(scales) == 1:
        return [guarded(s) for s in scales]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(guarded, scales))


def multiscale_smoothness(
    img: ImageRGB,
    scribbles: ScribbleMap,
    pivots: PivotSet,
    cfg: AffinityConfig,
    m: int,
    lam: float = DEFAULT_LAMBDA,
    bins: int = DEFAULT_BINS,
    mode: str = MODE_MULTIPLY,
    jobs: int = 0,
) -> np.ndarray:
    """Mean smoothing field over all spatial scales, as an (h, w) array."""
    cues = compute_pivot_cues(img, pivots, cfg)
    labeled_idx, labeled_y = scribble_labels(scribbles)
    if mode == MODE_MULTIPLY:
        compose_features(cues, cfg, cfg.scales[0], mode)  # warm the shared-block cache

    def solve_one(s):
        fm = compose_features(cues, cfg, s, mode)
        return smoothness_from_features(fm, labeled_idx, labeled_y, m, bins, lam).f

    fields = _solve_scales(solve_one, cfg.scales, jobs)
    return _mean_field(fields).reshape(img.height, img.width)


def postprocess(f_field: np.ndarray, island_min_area: int, hole_max_area: int) -> np.ndarray:
    """Zero-threshold the field (ties to background), then clean the mask.

    Foreground components smaller than island_min_area are dropped; enclosed
    background components (not touching the border) smaller than
    hole_max_area are filled.
    """
    if not np.isfinite(f_field).all():
        raise ValueError("smoothing field must be finite")
    eight = np.ones((3, 3), dtype=bool)
    fg = f_field > 0

    lbl, n = ndi.label(fg, structure=eight)
    if n:
        areas = np.bincount(lbl.ravel())
        small = np.nonzero(areas[1:] < island_min_area)[0] + 1
        if small.size:
            fg[np.isin(lbl, small)] = False

    lbl, n = ndi.label(~fg, structure=eight)
    if n:
        border = np.unique(
            np.concatenate([lbl[0, :], lbl[-1, :], lbl[:, 0], lbl[:, -1]])
        )
        areas = np.bincount(lbl.ravel())
        fill = [
            c
            for c in range(1, n + 1)
            if c not in border and areas[c] < hole_max_area
        ]
        if fill:
            fg[np.isin(lbl, fill)] = True
    return fg


def _validate_inputs(img: ImageRGB, scribbles: ScribbleMap) -> None:
    if (scribbles.height, scribbles.width) != (img.height, img.width):
        raise DimensionError(
            f"scribbles {scribbles.width}x{scribbles.height} do not match "
            f"image {img.width}x{img.height}"
        )
    if scribbles.fg_count == 0 or scribbles.bg_count == 0:
        raise AnnotationError("scribbles must mark at least one FG and one BG pixel")


def segment_single_pass(
    img: ImageRGB, scribbles: ScribbleMap, params: SegmenterParams | None = None
) -> SegmentationResult:
    """Full pipeline on a complete annotation set. Deterministic."""
    params = params or SegmenterParams()
    _validate_inputs(img, scribbles)
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    pivots = sample_pivots(scribbles, params.k1, params.k2)
    timings["pivots"] = time.perf_counter() - t0

    t1 = time.perf_counter()
    f = multiscale_smoothness(
        img,
        scribbles,
        pivots,
        params.affinity,
        params.m,
        params.lam,
        params.bins,
        params.mode,
        params.jobs,
    )
    timings["solve"] = time.perf_counter() - t1

    t2 = time.perf_counter()
    island, hole = params.resolved_areas(img.n_pixels)
    mask = postprocess(f, island, hole)
    timings["postprocess"] = time.perf_counter() - t2
    timings["total"] = time.perf_counter() - t0
    return SegmentationResult(GroundTruthMask(mask), f, timings, params)


# ---------------------------------------------------------------------------
# incremental sessions
# ---------------------------------------------------------------------------

def _solve_session(state: SessionState, t_start: float) -> SegmentationResult:
    labeled_idx, labeled_y = scribble_labels(state.scribbles)
    params = state.params

    def solve_one(s):
        X = np.hstack([state.prod_columns[s], state.raw6])
        fm = FeatureMatrix(X, state.col_tags + state.raw_tags)
        return smoothness_from_features(
            fm, labeled_idx, labeled_y, params.m, params.bins, params.lam
        ).f

    fields = _solve_scales(solve_one, params.affinity.scales, params.jobs)
    f = _mean_field(fields).reshape(state.image.height, state.image.width)
    island, hole = params.resolved_areas(state.image.n_pixels)
    mask = postprocess(f, island, hole)
    t = time.perf_counter() - t_start
    return SegmentationResult(
        GroundTruthMask(mask), f, {"solve": t, "total": t}, params
    )


def start_session(
    img: ImageRGB, scribbles: ScribbleMap, params: SegmenterParams | None = None
) -> tuple[SessionState, SegmentationResult]:
    """Single-pass run that also caches per-scale feature columns for refinement."""
    params = params or SegmenterParams()
    if params.mode != MODE_MULTIPLY:
        raise ValueError("incremental sessions support multiply mode only")
    _validate_inputs(img, scribbles)
    t0 = time.perf_counter()
    pivots = sample_pivots(scribbles, params.k1, params.k2)
    cues = compute_pivot_cues(img, pivots, params.affinity)
    k = pivots.count
    prod_columns = {}
    tags = raw6 = raw_tags = None
    for s in params.affinity.scales:
        fm = compose_features(cues, params.affinity, s, MODE_MULTIPLY)
        prod_columns[s] = fm.values[:, :k].copy()
        if tags is None:
            tags = fm.columns[:k]
            raw6 = fm.values[:, k:].copy()
            raw_tags = fm.columns[k:]
    state = SessionState(
        image=img,
        params=params,
        scribbles=scribbles,
        pivots=pivots,
        prod_columns=prod_columns,
        col_tags=tags,
        raw6=raw6,
        raw_tags=raw_tags,
        last_result=None,  # set below
    )
    result = _solve_session(state, t0)
    state.last_result = result
    return state, result


def segment_incremental(
    state: SessionState, new_scribbles: ScribbleMap
) -> tuple[SessionState, SegmentationResult]:
    """Refine with new strokes: pivots are sampled from the new strokes only,
    their feature columns appended, and the solve re-run on the widened
    matrices. Empty new strokes return the previous result unchanged."""
    img = state.image
    params = state.params
    if (new_scribbles.height, new_scribbles.width) != (img.height, img.width):
        raise DimensionError("new scribbles do not match the session image")
    if new_scribbles.fg_count == 0 and new_scribbles.bg_count == 0:
        return state, state.last_result

    t0 = time.perf_counter()

    def batch_pivots(cls: int, k_cap: int) -> np.ndarray:
        # pivot count matched to the stroke size: at most one pivot per
        # _STROKE_PIVOT_SPACING of contour, so a small corrective stroke does
        # not flood the feature matrix with near-duplicate columns
        contours = class_contours(new_scribbles.labels, cls)
        arc = contour_arc_length(contours)
        k = int(np.clip(np.ceil(arc / _STROKE_PIVOT_SPACING), 1, k_cap))
        return sample_class_pivots(new_scribbles.labels, cls, k)

    new_fg = (
        batch_pivots(FOREGROUND, params.k1)
        if new_scribbles.fg_count
        else np.empty((0, 2), dtype=np.intp)
    )
    new_bg = (
        batch_pivots(BACKGROUND, params.k2)
        if new_scribbles.bg_count
        else np.empty((0, 2), dtype=np.intp)
    )

    batch = PivotBatch(new_fg, new_bg)
    cues = compute_pivot_cues(img, batch, params.affinity)

    k_new = len(new_fg) + len(new_bg)
    offset = state.pivots.count
    new_tags = tuple(f"prod:{t}+{offset}" for t in cues.labels)
    prod_columns = {}
    for s in params.affinity.scales:
        fm = compose_features(cues, params.affinity, s, MODE_MULTIPLY)
        prod_columns[s] = np.hstack([state.prod_columns[s], fm.values[:, :k_new]])

    new_state = SessionState(
        image=img,
        params=params,
        scribbles=state.scribbles.merged_with(new_scribbles),
        pivots=state.pivots.concat(batch),
        prod_columns=prod_columns,
        col_tags=state.col_tags + new_tags,
        raw6=state.raw6,
        raw_tags=state.raw_tags,
        last_result=state.last_result,
    )
    result = _solve_session(new_state, t0)
    new_state.last_result = result
    return new_state, result
