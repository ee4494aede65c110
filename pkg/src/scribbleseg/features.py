"""Pixel-to-pivot affinity features.

Each pixel is described by its affinity to a small set of representative
labeled pixels (pivots) sampled uniformly along the enclosing contour of each
scribble. Four cues are supported — RGB colour, CIELAB colour, spatial
proximity, geodesic proximity — plus an intervening-contour cue kept for
ablation runs. Cues combine either by per-pivot multiplication (compact,
``k1+k2+6`` columns including raw colour) or by block concatenation
(``4*(k1+k2)`` columns). A PCA rotation decorrelates the result so that each
output dimension can be treated independently downstream.

Kernel bandwidths default to data-driven values: the standard deviation of
the pixel-to-pivot distances they normalize (one value per cue per image).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.ndimage as ndi

from . import geodesic
from .errors import AnnotationError, DegenerateDataError
from .imgdata import BACKGROUND, FOREGROUND, ImageRGB, ScribbleMap

MODE_MULTIPLY = "multiply"
MODE_CONCAT = "concat"

ALL_CUES = ("rgb", "lab", "euc", "geo", "ic")
DEFAULT_CUES = ("rgb", "lab", "euc", "geo")

_EPS_FLOOR = 1e-8


# ---------------------------------------------------------------------------
# colour conversion
# ---------------------------------------------------------------------------

# sRGB -> XYZ (D65) matrix, IEC 61966-2-1. The white point is taken from the
# matrix itself so that pure white lands exactly on L=100, a=b=0.
_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_D65_WHITE = _SRGB_TO_XYZ @ np.ones(3)


def rgb_to_lab(img: ImageRGB | np.ndarray) -> np.ndarray:
    """Convert 8-bit sRGB to CIELAB (D65). Returns (h, w, 3) float64."""
    rgb = img.pixels if isinstance(img, ImageRGB) else np.asarray(img)
    c = rgb.astype(np.float64) / 255.0
    lin = np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)
    xyz = lin @ _SRGB_TO_XYZ.T
    t = xyz / _D65_WHITE
    delta = 6.0 / 29.0
    f = np.where(t > delta**3, np.cbrt(t), t / (3 * delta**2) + 4.0 / 29.0)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


# ---------------------------------------------------------------------------
# pivot sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PivotBatch:
    """Labeled pixels as (k, 2) int arrays of (row, col); classes may be empty.

    Incremental refinement samples one batch per stroke set, which often
    carries a single class; a full PivotSet requires both.
    """

    fg: np.ndarray
    bg: np.ndarray

    def __post_init__(self):
        for a in (self.fg, self.bg):
            if a.ndim != 2 or a.shape[1] != 2:
                raise ValueError("pivots must be (k, 2) arrays")
            a.flags.writeable = False

    @property
    def k1(self) -> int:
        return len(self.fg)

    @property
    def k2(self) -> int:
        return len(self.bg)

    @property
    def count(self) -> int:
        return self.k1 + self.k2

    def all_coords(self) -> np.ndarray:
        """Foreground pivots first, then background; (k1+k2, 2)."""
        return np.vstack([self.fg, self.bg])

    def concat(self, other: "PivotBatch") -> "PivotSet":
        return PivotSet(
            np.vstack([self.fg, other.fg]) if len(other.fg) else self.fg.copy(),
            np.vstack([self.bg, other.bg]) if len(other.bg) else self.bg.copy(),
        )


@dataclass(frozen=True)
class PivotSet(PivotBatch):
    """A PivotBatch with at least one pivot in each class."""

    def __post_init__(self):
        super().__post_init__()
        if self.k1 < 1 or self.k2 < 1:
            raise AnnotationError("need at least one pivot per class")


# Moore neighborhood, clockwise in screen coordinates (row grows downward),
# starting at West.
_MOORE = ((0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1))
_MOORE_INDEX = {d: i for i, d in enumerate(_MOORE)}


def trace_boundary(mask: np.ndarray) -> list[tuple[int, int]]:
    """Moore-neighbor boundary trace of one 8-connected component.

    Returns the closed boundary polyline as (row, col) pixels, starting at the
    component's first pixel in scan order. Thin strokes are traversed out and
    back, so vertices may repeat; a single-pixel component yields one vertex.
    """
    h, w = mask.shape
    rs, cs = np.nonzero(mask)
    start = (int(rs[0]), int(cs[0]))

    def filled(r: int, c: int) -> bool:
        return 0 <= r < h and 0 <= c < w and bool(mask[r, c])

    contour = [start]
    p = start
    b = (start[0], start[1] - 1)  # west of the scan-order start is outside
    stop_state = None
    limit = 4 * len(rs) + 8
    while len(contour) <= limit:
        bi = _MOORE_INDEX[(b[0] - p[0], b[1] - p[1])]
        nxt = None
        for k in range(1, 9):
            dr, dc = _MOORE[(bi + k) % 8]
            q = (p[0] + dr, p[1] + dc)
            if filled(*q):
                pr, pc = _MOORE[(bi + k - 1) % 8]
                nxt, new_b = q, (p[0] + pr, p[1] + pc)
                break
        if nxt is None:  # isolated pixel
            break
        state = (nxt, new_b)
        if stop_state is None:
            stop_state = state
        elif state == stop_state:
            break
        contour.append(nxt)
        p, b = nxt, new_b
    return contour


def _sample_contours(contours: list[list[tuple[int, int]]], k: int) -> list[tuple[int, int]]:
    """k points at uniform arc length along concatenated closed contours.

    Joins between contours (and the final closing edge) carry zero arc
    length, so the samples spread over each contour in proportion to its
    perimeter, starting at the first contour's first vertex.
    """
    vertices = [v for c in contours for v in c]
    if len(vertices) == 1 or k <= 1:
        return [vertices[0]]
    seg = []
    for c in contours:
        pts = np.asarray(c, dtype=np.float64)
        if len(c) > 1:
            seg.extend(np.hypot(*np.diff(pts, axis=0).T))
        seg.append(0.0)  # join to the next contour / closing edge
    seg = np.asarray(seg)
    total = float(seg.sum())
    if total == 0.0:
        return [vertices[0]]
    cum = np.concatenate([[0.0], np.cumsum(seg)[:-1]])  # arc length at each vertex
    targets = np.arange(k) * (total / k)
    idx = np.searchsorted(cum, targets, side="right") - 1
    return [vertices[i] for i in idx]


def _dedupe(points: list[tuple[int, int]]) -> np.ndarray:
    seen: set[tuple[int, int]] = set()
    out = []
    for p in points:
        if p not in seen:
            seen.add(p)
            out.append(p)
    if not out:
        return np.empty((0, 2), dtype=np.intp)
    return np.asarray(out, dtype=np.intp)


def class_contours(labels: np.ndarray, cls: int) -> list[list[tuple[int, int]]]:
    """Boundary polylines of every component of one class, in scan order."""
    mask = labels == cls
    if not mask.any():
        raise AnnotationError("class has no labeled pixels")
    lbl, n_comp = ndi.label(mask, structure=np.ones((3, 3), dtype=bool))
    return [
        trace_boundary(lbl == comp)
        for comp in range(1, n_comp + 1)  # ndi.label numbers components in scan order
    ]


def contour_arc_length(contours: list[list[tuple[int, int]]]) -> float:
    total = 0.0
    for c in contours:
        if len(c) > 1:
            pts = np.asarray(c, dtype=np.float64)
            total += float(np.hypot(*np.diff(pts, axis=0).T).sum())
    return total


def sample_class_pivots(labels: np.ndarray, cls: int, k: int) -> np.ndarray:
    """Pivots for one scribble class; (k', 2) with k' <= k, scan-order ties."""
    mask = labels == cls
    n_px = int(mask.sum())
    if n_px == 0:
        raise AnnotationError("class has no labeled pixels")
    if n_px < k:
        return _dedupe([tuple(p) for p in np.argwhere(mask)])
    return _dedupe(_sample_contours(class_contours(labels, cls), k))


def sample_pivots(scribbles: ScribbleMap, k1: int, k2: int) -> PivotSet:
    """Sample k1 foreground and k2 background pivots from the scribble contours.

    Deterministic: identical scribbles and counts give identical pivots.
    Classes with fewer labeled pixels than requested contribute all of them.
    """
    if scribbles.fg_count == 0 or scribbles.bg_count == 0:
        raise AnnotationError("scribbles must mark at least one FG and one BG pixel")
    return PivotSet(
        sample_class_pivots(scribbles.labels, FOREGROUND, k1),
        sample_class_pivots(scribbles.labels, BACKGROUND, k2),
    )


# ---------------------------------------------------------------------------
# affinity kernels
# ---------------------------------------------------------------------------

def color_affinity(pixel_value, pivot_value, eps: float):
    """Gaussian colour kernel exp(-||dv||^2 / 2 eps^2); 1 iff identical."""
    d2 = np.sum(
        (np.asarray(pixel_value, dtype=np.float64) - np.asarray(pivot_value, dtype=np.float64)) ** 2,
        axis=-1,
    )
    return np.exp(-d2 / (2.0 * eps * eps))


def spatial_variance(height: int, width: int) -> float:
    """Mean of the per-axis population variances of all pixel coordinates."""
    return float((np.var(np.arange(height)) + np.var(np.arange(width))) / 2.0)


def euclidean_feature(pixel_xy, pivot_xy, variance: float, scale: float):
    """Spatial kernel exp(-||dxy||^2 / (2 * scale * variance))."""
    d2 = np.sum(
        (np.asarray(pixel_xy, dtype=np.float64) - np.asarray(pivot_xy, dtype=np.float64)) ** 2,
        axis=-1,
    )
    return np.exp(-d2 / (2.0 * scale * variance))


# ---------------------------------------------------------------------------
# edges / intervening contour
# ---------------------------------------------------------------------------

def canny_edges(img: ImageRGB, low: float, high: float) -> np.ndarray:
    """Edge strength map in [0, 1): 0 off edges, clamped normalized gradient on them.

    Standard Canny on the CIELAB luminance: Gaussian smoothing (sigma 1.0),
    Sobel gradients, quantized non-maximum suppression, hysteresis with
    thresholds relative to the maximum gradient magnitude.
    """
    if not 0 <= low < high:
        raise ValueError("need 0 <= low < high")
    gray = rgb_to_lab(img)[..., 0] / 100.0
    smooth = ndi.gaussian_filter(gray, sigma=1.0)
    gx = ndi.sobel(smooth, axis=1)
    gy = ndi.sobel(smooth, axis=0)
    mag = np.hypot(gx, gy)
    peak = float(mag.max())
    if peak == 0.0:
        return np.zeros_like(mag)

    # quantize gradient direction into 4 bins and compare along that axis
    angle = np.mod(np.arctan2(gy, gx), np.pi)
    bins = np.round(angle / (np.pi / 4)).astype(int) % 4  # 0=E, 1=NE, 2=N, 3=NW
    offsets = {0: (0, 1), 1: (-1, 1), 2: (-1, 0), 3: (-1, -1)}
    keep = np.zeros(mag.shape, dtype=bool)
    padded = np.pad(mag, 1, mode="constant")
    for b, (dr, dc) in offsets.items():
        fwd = padded[1 + dr : padded.shape[0] - 1 + dr, 1 + dc : padded.shape[1] - 1 + dc]
        bwd = padded[1 - dr : padded.shape[0] - 1 - dr, 1 - dc : padded.shape[1] - 1 - dc]
        sel = bins == b
        keep |= sel & (mag >= fwd) & (mag >= bwd)
    nms = np.where(keep, mag, 0.0)

    strong = nms >= high * peak
    weak = nms >= low * peak
    lbl, n = ndi.label(weak, structure=np.ones((3, 3), dtype=bool))
    if n:
        good = np.zeros(n + 1, dtype=bool)
        good[np.unique(lbl[strong])] = True
        good[0] = False
        edge = good[lbl]
    else:
        edge = np.zeros(mag.shape, dtype=bool)

    out = np.zeros_like(mag)
    out[edge] = np.clip(mag[edge] / peak, 0.01, 0.99)
    return out


def bresenham_line(p0: tuple[int, int], p1: tuple[int, int]) -> list[tuple[int, int]]:
    """Integer Bresenham raster between two (row, col) pixels, inclusive."""
    r0, c0 = p0
    r1, c1 = p1
    dr, dc = abs(r1 - r0), -abs(c1 - c0)
    sr = 1 if r0 < r1 else -1
    sc = 1 if c0 < c1 else -1
    err = dr + dc
    pts = []
    while True:
        pts.append((r0, c0))
        if r0 == r1 and c0 == c1:
            break
        e2 = 2 * err
        if e2 >= dc:
            err += dc
            r0 += sr
        if e2 <= dr:
            err += dr
            c0 += sc
    return pts


def intervening_contour_affinity(edges: np.ndarray, p1: tuple[int, int], p2: tuple[int, int]) -> float:
    """1 minus the strongest edge crossed on the line between two pixels."""
    if p1 == p2:
        return 1.0
    return 1.0 - max(float(edges[r, c]) for r, c in bresenham_line(p1, p2))


def intervening_contour_matrix(edges: np.ndarray, pivots: np.ndarray) -> np.ndarray:
    """Affinity of every pixel to every pivot; vectorized Bresenham walk."""
    h, w = edges.shape
    rr, cc = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    r = rr.ravel().copy()
    c = cc.ravel().copy()
    out = np.empty((r.size, len(pivots)))
    for j, (pr, pc) in enumerate(pivots):
        r0, c0 = r.copy(), c.copy()
        dr, dc = np.abs(pr - r0), -np.abs(pc - c0)
        sr = np.where(r0 < pr, 1, -1)
        sc = np.where(c0 < pc, 1, -1)
        err = dr + dc
        best = edges[r0, c0].copy()
        active = (r0 != pr) | (c0 != pc)
        while active.any():
            e2 = 2 * err
            step_r = active & (e2 >= dc)
            err[step_r] += dc[step_r]
            r0[step_r] += sr[step_r]
            step_c = active & (e2 <= dr)
            err[step_c] += dr[step_c]
            c0[step_c] += sc[step_c]
            np.maximum(best, np.where(active, edges[r0, c0], 0.0), out=best)
            active &= (r0 != pr) | (c0 != pc)
        same = (r == pr) & (c == pc)
        out[:, j] = np.where(same, 1.0, 1.0 - best)
    return out


# ---------------------------------------------------------------------------
# feature matrix assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffinityConfig:
    """Cue kernel parameters. ``None`` bandwidths are derived from the data."""

    eps_color: float | None = None
    eps_geo: float | None = None
    gamma_g: float = 0.5
    scales: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0)
    canny_low: float = 0.1
    canny_high: float = 0.2
    k1: int = 21
    k2: int = 21
    cues: tuple[str, ...] = DEFAULT_CUES

    def __post_init__(self):
        if self.eps_color is not None and self.eps_color <= 0:
            raise ValueError("eps_color must be positive")
        if self.eps_geo is not None and self.eps_geo <= 0:
            raise ValueError("eps_geo must be positive")
        if not 0.0 <= self.gamma_g <= 1.0:
            raise ValueError("gamma_g must lie in [0, 1]")
        if not self.scales or any(s <= 0 for s in self.scales):
            raise ValueError("scales must be nonempty and positive")
        if self.k1 < 1 or self.k2 < 1:
            raise ValueError("pivot counts must be >= 1")
        bad = set(self.cues) - set(ALL_CUES)
        if bad or not self.cues:
            raise ValueError(f"unknown cues: {sorted(bad)}")


@dataclass(frozen=True)
class FeatureMatrix:
    """(n, d) per-pixel features with per-column cue-origin labels."""

    values: np.ndarray
    columns: tuple[str, ...]

    def __post_init__(self):
        v = self.values
        if v.ndim != 2 or v.shape[1] != len(self.columns):
            raise ValueError("values/columns shape mismatch")
        # a NaN/Inf anywhere poisons the sum; one pass, no boolean temporary
        if not np.isfinite(v.sum()):
            raise ValueError("feature matrix contains non-finite entries")
        v.flags.writeable = False

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class PivotCues:
    """Scale-independent per-pivot distance/affinity blocks for one image.

    Distances are stored raw so that per-scale and per-bandwidth kernels can
    be applied lazily; ``raw6`` holds the pixel's own rescaled RGB+LAB values.
    Only the spatial cue depends on the scale, so the other affinity blocks
    are memoized across scales.
    """

    rgb_d2: np.ndarray          # (n, K) squared RGB distances
    lab_d2: np.ndarray          # (n, K)
    sp_d2: np.ndarray           # (n, K) squared spatial distances
    geo: np.ndarray             # (n, K) geodesic distances
    ic: np.ndarray | None       # (n, K) affinities, or None if cue unused
    raw6: np.ndarray            # (n, 6)
    eps_rgb: float
    eps_lab: float
    eps_geo: float
    sp_var: float
    labels: tuple[str, ...]     # per-pivot column tags, fg first
    _cache: dict = field(default_factory=dict, repr=False, compare=False)


def _data_eps(d2: np.ndarray, override: float | None) -> float:
    if override is not None:
        return override
    return max(float(np.sqrt(d2).std()), _EPS_FLOOR)


def _geo_eps(geo: np.ndarray, override: float | None) -> float:
    if override is not None:
        return override
    return max(float(geo.std()), _EPS_FLOOR)


def compute_pivot_cues(
    img: ImageRGB,
    pivots: PivotBatch,
    cfg: AffinityConfig,
    edges: np.ndarray | None = None,
) -> PivotCues:
    """All pixel-to-pivot cue blocks for one image and pivot set."""
    h, w = img.height, img.width
    coords = pivots.all_coords()
    rgb = img.pixels.reshape(-1, 3).astype(np.float64)
    lab3 = rgb_to_lab(img)
    lab = lab3.reshape(-1, 3)
    gradmag = geodesic.gradient_magnitude(lab3[..., 0])  # shared with the geodesic solver
    flat = coords[:, 0] * w + coords[:, 1]

    def sqdist(X: np.ndarray) -> np.ndarray:
        P = X[flat]
        out = X @ (-2.0 * P.T)
        out += (X**2).sum(1)[:, None]
        out += (P**2).sum(1)[None, :]
        np.maximum(out, 0.0, out=out)
        return out

    rgb_d2 = sqdist(rgb)
    lab_d2 = sqdist(lab)
    rr, cc = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    xy = np.stack([rr.ravel(), cc.ravel()], axis=1).astype(np.float64)
    sp_d2 = sqdist(xy)
    geo = np.ascontiguousarray(
        geodesic.pivot_fields(img, coords, cfg.gamma_g, gradmag).T
    )  # (n, K)

    ic = None
    if "ic" in cfg.cues:
        if edges is None:
            edges = canny_edges(img, cfg.canny_low, cfg.canny_high)
        ic = intervening_contour_matrix(edges, coords)

    raw6 = np.column_stack(
        [
            rgb / 255.0,
            lab[:, 0] / 100.0,
            (lab[:, 1] + 128.0) / 255.0,
            (lab[:, 2] + 128.0) / 255.0,
        ]
    )
    labels = tuple(f"fg{i:02d}" for i in range(pivots.k1)) + tuple(
        f"bg{i:02d}" for i in range(pivots.k2)
    )
    return PivotCues(
        rgb_d2=rgb_d2,
        lab_d2=lab_d2,
        sp_d2=sp_d2,
        geo=geo,
        ic=ic,
        raw6=raw6,
        eps_rgb=_data_eps(rgb_d2, cfg.eps_color),
        eps_lab=_data_eps(lab_d2, cfg.eps_color),
        eps_geo=_geo_eps(geo, cfg.eps_geo),
        sp_var=spatial_variance(h, w),
        labels=labels,
    )


_RAW6_LABELS = ("raw:rgb_r", "raw:rgb_g", "raw:rgb_b", "raw:lab_l", "raw:lab_a", "raw:lab_b")


def cue_affinities(cues: PivotCues, cfg: AffinityConfig, scale: float) -> dict[str, np.ndarray]:
    """Per-cue (n, K) affinity blocks at one spatial scale."""

    def static(name: str, make):
        if name not in cues._cache:
            cues._cache[name] = make()
        return cues._cache[name]

    blocks: dict[str, np.ndarray] = {}
    for cue in cfg.cues:
        if cue == "rgb":
            blocks[cue] = static("rgb", lambda: np.exp(-cues.rgb_d2 / (2.0 * cues.eps_rgb**2)))
        elif cue == "lab":
            blocks[cue] = static("lab", lambda: np.exp(-cues.lab_d2 / (2.0 * cues.eps_lab**2)))
        elif cue == "euc":
            blocks[cue] = np.exp(-cues.sp_d2 / (2.0 * scale * cues.sp_var))
        elif cue == "geo":
            blocks[cue] = static("geo", lambda: np.exp(-cues.geo**2 / (2.0 * cues.eps_geo**2)))
        elif cue == "ic":
            blocks[cue] = cues.ic
    return blocks


def compose_features(cues: PivotCues, cfg: AffinityConfig, scale: float, mode: str) -> FeatureMatrix:
    if mode == MODE_MULTIPLY:
        # the product over scale-independent cues is shared by every scale
        static_cues = tuple(c for c in cfg.cues if c != "euc")
        key = ("static_prod",) + static_cues
        if key not in cues._cache:
            blocks = cue_affinities(cues, replace(cfg, cues=static_cues), scale) if static_cues else {}
            prod = None
            for b in blocks.values():
                prod = b if prod is None else prod * b
            cues._cache[key] = prod
        prod = cues._cache[key]
        if "euc" in cfg.cues:
            euc = cues.sp_d2 * (-1.0 / (2.0 * scale * cues.sp_var))
            np.exp(euc, out=euc)
            if prod is not None:
                euc *= prod
            prod = euc
        values = np.hstack([prod, cues.raw6])
        columns = tuple(f"prod:{t}" for t in cues.labels) + _RAW6_LABELS
    elif mode == MODE_CONCAT:
        blocks = cue_affinities(cues, cfg, scale)
        values = np.hstack([blocks[c] for c in cfg.cues])
        columns = tuple(f"{c}:{t}" for c in cfg.cues for t in cues.labels)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return FeatureMatrix(values, columns)


def build_feature_matrix(
    img: ImageRGB,
    pivots: PivotSet,
    cfg: AffinityConfig,
    scale: float,
    mode: str = MODE_MULTIPLY,
) -> FeatureMatrix:
    """Assemble the per-pixel feature matrix at one spatial scale."""
    return compose_features(compute_pivot_cues(img, pivots, cfg), cfg, scale, mode)


# ---------------------------------------------------------------------------
# PCA rotation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PcaBasis:
    mean: np.ndarray        # (d,)
    components: np.ndarray  # (d', d) orthonormal rows
    variances: np.ndarray   # (d',) nonincreasing


def pca_rotate(fm: FeatureMatrix, retain: float | int | None = None):
    """Center and rotate features onto principal axes.

    ``retain`` may be an int (component count), a float in (0, 1] (fraction of
    total variance to cover) or None (keep every nonzero-variance component —
    the rotation is for decorrelation, not reduction). Returns the rotated
    FeatureMatrix and the basis.
    """
    X = fm.values
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least two rows for PCA")
    mean = X.mean(axis=0)
    # covariance from the Gram matrix: no centered copy of X is materialized,
    # and a d x d eigendecomposition beats an (n, d) SVD for n >> d
    cov = (X.T @ X) / n - np.outer(mean, mean)
    vals, vecs = np.linalg.eigh(cov)
    var = np.maximum(vals[::-1], 0.0)
    axes = vecs[:, ::-1].T  # rows, descending variance
    tol = var[0] * (max(X.shape) * np.finfo(np.float64).eps) if var.size else 0.0
    rank = int((var > tol).sum())
    if rank == 0:
        raise DegenerateDataError("all feature rows identical; PCA basis undefined")
    if retain is None:
        keep = rank
    elif isinstance(retain, (int, np.integer)) and not isinstance(retain, bool):
        keep = min(int(retain), rank)
    else:
        frac = np.cumsum(var[:rank]) / var[:rank].sum()
        keep = int(np.searchsorted(frac, float(retain) - 1e-12) + 1)
    if keep < 1:
        raise ValueError("retain must keep at least one component")
    comp = axes[:keep]
    rotated = X @ comp.T
    rotated -= mean @ comp.T
    basis = PcaBasis(mean=mean, components=comp, variances=var[:keep])
    return (
        FeatureMatrix(rotated, tuple(f"pc{i:02d}" for i in range(keep))),
        basis,
    )
