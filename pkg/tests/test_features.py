import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scribbleseg.errors import AnnotationError, DegenerateDataError
from scribbleseg.features import (
    AffinityConfig,
    FeatureMatrix,
    MODE_CONCAT,
    MODE_MULTIPLY,
    bresenham_line,
    build_feature_matrix,
    canny_edges,
    color_affinity,
    compose_features,
    compute_pivot_cues,
    euclidean_feature,
    intervening_contour_affinity,
    intervening_contour_matrix,
    pca_rotate,
    rgb_to_lab,
    sample_pivots,
    spatial_variance,
    trace_boundary,
)
from scribbleseg.imgdata import BACKGROUND, FOREGROUND, ImageRGB, ScribbleMap


def _img(arr):
    return ImageRGB(np.ascontiguousarray(arr.astype(np.uint8)))


# ---------------------------------------------------------------------------
# colour conversion
# ---------------------------------------------------------------------------

def test_lab_white_point():
    lab = rgb_to_lab(_img(np.full((1, 1, 3), 255)))
    assert lab[0, 0, 0] == pytest.approx(100.0, abs=1e-6)
    assert abs(lab[0, 0, 1]) <= 0.01
    assert abs(lab[0, 0, 2]) <= 0.01


def test_lab_black():
    lab = rgb_to_lab(_img(np.zeros((1, 1, 3))))
    assert np.allclose(lab[0, 0], [0.0, 0.0, 0.0], atol=1e-9)


def test_lab_mid_gray_matches_reference():
    # frozen from an independent CIE conversion (D65, sRGB gamma)
    lab = rgb_to_lab(_img(np.full((1, 1, 3), 128)))[0, 0]
    assert lab[0] == pytest.approx(53.585013, abs=0.1)
    assert lab[1] == pytest.approx(0.0, abs=0.1)
    assert lab[2] == pytest.approx(0.0, abs=0.1)


def test_lab_agrees_with_skimage(rng):
    color = pytest.importorskip("skimage.color")
    arr = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
    ours = rgb_to_lab(_img(arr))
    assert np.abs(ours - color.rgb2lab(arr)).max() < 0.1


def test_lab_range(rng):
    arr = rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
    lab = rgb_to_lab(_img(arr))
    assert lab[..., 0].min() >= 0.0 and lab[..., 0].max() <= 100.0 + 1e-9
    assert np.isfinite(lab).all()


# ---------------------------------------------------------------------------
# pivots
# ---------------------------------------------------------------------------

def _scribble(h, w, fg=(), bg=()):
    labels = np.zeros((h, w), dtype=np.uint8)
    for r, c in fg:
        labels[r, c] = FOREGROUND
    for r, c in bg:
        labels[r, c] = BACKGROUND
    return ScribbleMap(labels)


def test_single_pixel_class_becomes_single_pivot():
    scr = _scribble(8, 8, fg=[(2, 2)], bg=[(6, 6)])
    pv = sample_pivots(scr, 21, 21)
    assert pv.fg.tolist() == [[2, 2]]
    assert pv.bg.tolist() == [[6, 6]]


def test_line_stroke_uniform_fractions():
    # 100-pixel 1-wide stroke: contour runs out and back (arc length 198);
    # k=4 picks the vertices at fractions 0, 1/4, 1/2, 3/4
    labels = np.zeros((5, 120), dtype=np.uint8)
    labels[2, 10:110] = FOREGROUND
    labels[0, 0] = BACKGROUND
    pv = sample_pivots(ScribbleMap(labels), 4, 1)
    assert pv.fg.tolist() == [[2, 10], [2, 59], [2, 109], [2, 60]]


def test_blob_boundary_ring_spacing():
    labels = np.zeros((14, 14), dtype=np.uint8)
    labels[2:12, 2:12] = FOREGROUND  # 10x10 blob, boundary ring 36 px
    labels[0, 0] = BACKGROUND
    pv = sample_pivots(ScribbleMap(labels), 8, 1)
    assert pv.k1 == 8
    ring = {(r, c) for r in range(2, 12) for c in range(2, 12)
            if r in (2, 11) or c in (2, 11)}
    assert {tuple(p) for p in pv.fg} <= ring
    # pairwise arc distance along the 36-pixel ring: 36/8 within 1 px
    order = []
    for p in map(tuple, pv.fg):
        # arc position: walk the ring clockwise from (2,2)
        ring_path = (
            [(2, c) for c in range(2, 12)]
            + [(r, 11) for r in range(3, 12)]
            + [(11, c) for c in range(10, 1, -1)]
            + [(r, 2) for r in range(10, 2, -1)]
        )
        order.append(ring_path.index(p))
    order = sorted(order)
    gaps = np.diff(order + [order[0] + 36])
    assert all(abs(g - 36 / 8) <= 1 for g in gaps)


def test_pivots_deterministic(small_sample):
    _, _, scr = small_sample
    a = sample_pivots(scr, 9, 9)
    b = sample_pivots(scr, 9, 9)
    assert np.array_equal(a.fg, b.fg) and np.array_equal(a.bg, b.bg)


def test_pivots_never_duplicated(small_sample):
    _, _, scr = small_sample
    pv = sample_pivots(scr, 21, 21)
    for arr in (pv.fg, pv.bg):
        assert len({tuple(p) for p in arr}) == len(arr)


def test_pivots_require_both_classes():
    with pytest.raises(AnnotationError):
        sample_pivots(_scribble(4, 4, fg=[(0, 0)]), 3, 3)


def test_trace_boundary_single_pixel():
    mask = np.zeros((3, 3), dtype=bool)
    mask[1, 1] = True
    assert trace_boundary(mask) == [(1, 1)]


def test_trace_boundary_ring_length():
    mask = np.zeros((12, 12), dtype=bool)
    mask[1:11, 1:11] = True
    contour = trace_boundary(mask)
    assert set(contour) == {(r, c) for r in range(1, 11) for c in range(1, 11)
                            if r in (1, 10) or c in (1, 10)}


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

def test_color_affinity_identity():
    assert color_affinity([1, 2, 3], [1, 2, 3], 5.0) == 1.0


def test_color_affinity_e_minus_one():
    eps = 3.0
    delta = eps * np.sqrt(2)
    val = color_affinity([0.0, 0.0, 0.0], [delta, 0.0, 0.0], eps)
    assert val == pytest.approx(np.exp(-1), rel=1e-12)


@given(st.floats(0.5, 12.0), st.floats(0.1, 10.0))
def test_color_affinity_monotone_decay(ratio, eps):
    # distances bounded relative to eps so the kernel stays above fp underflow
    near = color_affinity([0, 0, 0], [ratio * eps, 0, 0], eps)
    far = color_affinity([0, 0, 0], [2 * ratio * eps, 0, 0], eps)
    assert 0.0 < far <= near <= 1.0


def test_euclidean_feature_at_pivot():
    assert euclidean_feature([3, 4], [3, 4], 10.0, 1.0) == 1.0


def test_euclidean_feature_scale_monotone():
    v1 = euclidean_feature([0, 0], [3, 4], 8.25, 1.0)
    v2 = euclidean_feature([0, 0], [3, 4], 8.25, 2.0)
    assert v2 > v1


def test_euclidean_feature_10x10_oracle():
    # oracle: variance of all pixel coordinates of a 10x10 image
    coords = np.array([(r, c) for r in range(10) for c in range(10)], dtype=float)
    var = (coords[:, 0].var() + coords[:, 1].var()) / 2
    assert spatial_variance(10, 10) == pytest.approx(var, rel=1e-12)
    expect = np.exp(-25.0 / (2.0 * var))
    assert euclidean_feature([0, 0], [3, 4], var, 1.0) == pytest.approx(expect, rel=1e-12)


# ---------------------------------------------------------------------------
# edges / intervening contour
# ---------------------------------------------------------------------------

def test_canny_constant_image():
    edges = canny_edges(_img(np.full((16, 16, 3), 77)), 0.1, 0.2)
    assert (edges == 0).all()


def test_canny_vertical_step_edge():
    arr = np.zeros((24, 24, 3))
    arr[:, 12:] = 200
    edges = canny_edges(_img(arr), 0.1, 0.2)
    cols = np.nonzero(edges.any(axis=0))[0]
    assert len(cols) >= 1
    assert cols.max() - cols.min() <= 1  # response concentrated on one column
    assert edges.max() < 1.0 and edges[edges > 0].min() >= 0.01


def test_canny_matches_reference_within_2pct(rng):
    skf = pytest.importorskip("skimage.feature")
    import scipy.ndimage as ndi

    from scribbleseg.synthetic import two_region_image

    img, _ = two_region_image(rng, 96, 128, noise_sigma=6)
    ours = canny_edges(img, 0.1, 0.2) > 0
    gray = rgb_to_lab(img)[..., 0] / 100.0
    mag = np.hypot(
        ndi.sobel(ndi.gaussian_filter(gray, 1.0), axis=1),
        ndi.sobel(ndi.gaussian_filter(gray, 1.0), axis=0),
    )
    ref = skf.canny(gray, sigma=1.0, low_threshold=0.1 * mag.max(),
                    high_threshold=0.2 * mag.max())
    assert (ours ^ ref).mean() <= 0.02


def test_bresenham_endpoints_and_connectivity(rng):
    for _ in range(50):
        p0 = tuple(rng.integers(0, 20, 2))
        p1 = tuple(rng.integers(0, 20, 2))
        line = bresenham_line(p0, p1)
        assert line[0] == p0 and line[-1] == p1
        for a, b in zip(line, line[1:]):
            assert max(abs(a[0] - b[0]), abs(a[1] - b[1])) == 1


def test_ic_affinity_same_pixel():
    edges = np.full((5, 5), 0.7)
    assert intervening_contour_affinity(edges, (2, 2), (2, 2)) == 1.0


def test_ic_affinity_clear_line():
    edges = np.zeros((5, 9))
    assert intervening_contour_affinity(edges, (2, 0), (2, 8)) == 1.0


def test_ic_affinity_single_contour():
    edges = np.zeros((5, 9))
    edges[2, 4] = 0.9
    assert intervening_contour_affinity(edges, (2, 0), (2, 8)) == pytest.approx(0.1)


def test_ic_matrix_matches_scalar(rng):
    edges = rng.random((9, 11)) * 0.9
    pivots = np.array([[0, 0], [4, 7], [8, 10]])
    mat = intervening_contour_matrix(edges, pivots)
    for j, pv in enumerate(map(tuple, pivots)):
        for r in range(9):
            for c in range(11):
                expect = intervening_contour_affinity(edges, (r, c), pv)
                assert mat[r * 11 + c, j] == pytest.approx(expect, abs=1e-12)


# ---------------------------------------------------------------------------
# feature matrix
# ---------------------------------------------------------------------------

def _tiny_case():
    arr = np.zeros((8, 8, 3), dtype=np.uint8)
    arr[:, 4:] = (200, 30, 10)
    img = _img(arr)
    scr = _scribble(8, 8, fg=[(4, 1)], bg=[(4, 6)])
    return img, sample_pivots(scr, 1, 1)


def test_multiply_mode_dimension():
    img, pv = _tiny_case()
    fm = build_feature_matrix(img, pv, AffinityConfig(k1=1, k2=1), 1.0, MODE_MULTIPLY)
    assert fm.d == pv.count + 6 == 8
    assert fm.values.min() >= 0.0 and fm.values.max() <= 1.0


def test_concat_mode_dimension():
    img, pv = _tiny_case()
    fm = build_feature_matrix(img, pv, AffinityConfig(k1=1, k2=1), 1.0, MODE_CONCAT)
    assert fm.d == 4 * pv.count == 8
    assert all(fm.columns[i].startswith("rgb:") for i in range(pv.count))


def test_pixel_at_pivot_product_is_one():
    img, pv = _tiny_case()
    fm = build_feature_matrix(img, pv, AffinityConfig(k1=1, k2=1), 1.0, MODE_MULTIPLY)
    r, c = pv.fg[0]
    assert fm.values[r * 8 + c, 0] == pytest.approx(1.0, abs=1e-12)


def test_product_le_each_factor(rng):
    from scribbleseg.features import cue_affinities

    from scribbleseg.synthetic import two_region_image

    img, gt = two_region_image(rng, 24, 24)
    scr = _scribble(24, 24, fg=[(12, 12)], bg=[(2, 2), (22, 22)])
    pv = sample_pivots(scr, 4, 4)
    cfg = AffinityConfig(k1=4, k2=4)
    cues = compute_pivot_cues(img, pv, cfg)
    blocks = cue_affinities(cues, cfg, 1.0)
    fm = compose_features(cues, cfg, 1.0, MODE_MULTIPLY)
    prod = fm.values[:, : pv.count]
    for b in blocks.values():
        assert (prod <= b + 1e-12).all()
        assert (b > 0).all() and (b <= 1.0).all()


def test_two_color_separability():
    arr = np.zeros((8, 8, 3), dtype=np.uint8)
    arr[:, 4:] = (200, 30, 10)
    img = _img(arr)
    scr = _scribble(8, 8, fg=[(4, 1)], bg=[(4, 6)])
    pv = sample_pivots(scr, 1, 1)
    fm = build_feature_matrix(img, pv, AffinityConfig(k1=1, k2=1), 1.0, MODE_MULTIPLY)
    vals = fm.values[:, 0].reshape(8, 8)  # product column of the FG pivot
    near_same = vals[4, 0]
    far_other = vals[4, 7]
    assert near_same >= 0.5
    assert far_other <= 0.1


# ---------------------------------------------------------------------------
# PCA
# ---------------------------------------------------------------------------

def test_pca_axis_aligned_recovers_axes(rng):
    n = 400
    X = np.zeros((n, 3))
    X[:, 0] = rng.normal(0, 5.0, n)
    X[:, 1] = rng.normal(0, 1.0, n)
    X[:, 2] = rng.normal(0, 0.2, n)
    fm = FeatureMatrix(X, ("a", "b", "c"))
    rot, basis = pca_rotate(fm)
    perm = np.abs(basis.components)
    assert np.allclose(perm.max(axis=1), 1.0, atol=0.05)
    assert perm.argmax(axis=1).tolist() == [0, 1, 2]


def test_pca_rank1_single_component(rng):
    t = rng.normal(size=200)
    X = np.outer(t, [1.0, 2.0, -1.0])
    rot, basis = pca_rotate(FeatureMatrix(X, ("a", "b", "c")))
    assert rot.d == 1


def test_pca_reconstruction(rng):
    X = rng.random((100, 5))
    fm = FeatureMatrix(X, tuple("abcde"))
    rot, basis = pca_rotate(fm)
    recon = rot.values @ basis.components + basis.mean
    assert np.abs(recon - X).max() < 1e-8


def test_pca_orthonormal_and_decorrelated(rng):
    X = rng.random((300, 6)) @ rng.random((6, 6))
    rot, basis = pca_rotate(FeatureMatrix(X, tuple("abcdef")))
    eye = basis.components @ basis.components.T
    assert np.abs(eye - np.eye(len(basis.variances))).max() < 1e-8
    cov = np.cov(rot.values.T, bias=True)
    off = cov - np.diag(np.diag(cov))
    assert np.abs(off).max() <= 1e-6 * np.abs(np.diag(cov)).max()
    assert (np.diff(basis.variances) <= 1e-12).all()


def test_pca_degenerate_input():
    X = np.ones((50, 4))
    with pytest.raises(DegenerateDataError):
        pca_rotate(FeatureMatrix(X, tuple("abcd")))


def test_pca_retain_fraction(rng):
    X = np.zeros((500, 3))
    X[:, 0] = rng.normal(0, 10, 500)
    X[:, 1] = rng.normal(0, 1, 500)
    X[:, 2] = rng.normal(0, 0.01, 500)
    frac = np.sort(X.var(axis=0))[::-1]
    frac = frac.cumsum() / frac.sum()
    target = (frac[0] + frac[1]) / 2  # between the 1- and 2-component coverage
    rot, _ = pca_rotate(FeatureMatrix(X, ("a", "b", "c")), retain=float(target))
    assert rot.d == 2
    rot2, _ = pca_rotate(FeatureMatrix(X, ("a", "b", "c")), retain=2)
    assert rot2.d == 2
