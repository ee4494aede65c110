import numpy as np

from scribbleseg.imgdata import BACKGROUND, FOREGROUND, GroundTruthMask
from scribbleseg.robot import (
    MODE_INCREMENTAL,
    RobotTrace,
    Stroke,
    TraceStep,
    disk_offsets,
    next_stroke,
    run_robot,
    stroke_pixels,
    stroke_to_scribbles,
)
from scribbleseg.synthetic import annotation_scribbles, two_region_image


def _mask(arr):
    return GroundTruthMask(np.asarray(arr, dtype=bool))


def test_done_when_mask_matches():
    m = _mask(np.eye(5))
    assert next_stroke(m, m) is None


def test_square_error_center():
    gt = np.zeros((60, 60), dtype=bool)
    gt[4:55, 4:55] = True  # 51x51 error square vs an all-background mask
    stroke = next_stroke(_mask(np.zeros((60, 60))), _mask(gt))
    assert stroke.center == (29, 29)
    assert stroke.label == FOREGROUND


def test_largest_component_targeted():
    gt = np.zeros((40, 40), dtype=bool)
    gt[2:8, 2:7] = True       # 30 px blob
    gt[20:35, 20:40] = True   # 300 px blob
    stroke = next_stroke(_mask(np.zeros((40, 40))), _mask(gt))
    assert 20 <= stroke.center[0] < 35 and 20 <= stroke.center[1] < 40


def test_stroke_label_is_ground_truth():
    gt = np.zeros((30, 30), dtype=bool)
    mask = np.ones((30, 30), dtype=bool)  # everything falsely foreground
    stroke = next_stroke(_mask(mask), _mask(gt))
    assert stroke.label == BACKGROUND


def test_disk_diameter_17():
    offs = disk_offsets(17)
    d2 = (offs**2).sum(axis=1)
    assert d2.max() <= 64  # radius 8
    assert offs[:, 0].min() == -8 and offs[:, 0].max() == 8
    # the full disk: all offsets within radius 8 are present
    assert len(offs) == sum(
        1 for dr in range(-8, 9) for dc in range(-8, 9) if dr * dr + dc * dc <= 64
    )


def test_stroke_clipped_to_bounds():
    s = Stroke(center=(0, 0), label=FOREGROUND)
    pts = stroke_pixels(s, (20, 20))
    assert (pts >= 0).all()
    scr = stroke_to_scribbles(s, (20, 20))
    assert scr.fg_count == len(pts)


def test_robot_never_lies(rng, fast_params):
    img, gt = two_region_image(rng, 32, 32)
    scr = annotation_scribbles(gt)
    trace = run_robot(img, gt, scr, fast_params, max_strokes=3)
    for step in trace.steps[1:]:
        pts = stroke_pixels(step.stroke, (32, 32))
        want = FOREGROUND if gt.labels[step.stroke.center] else BACKGROUND
        assert step.stroke.label == want


def test_trace_determinism(fast_params):
    img, gt = two_region_image(np.random.default_rng(21), 32, 32)
    scr = annotation_scribbles(gt)
    t1 = run_robot(img, gt, scr, fast_params, max_strokes=3)
    t2 = run_robot(img, gt, scr, fast_params, max_strokes=3)
    assert t1 == t2


def test_perfect_start_single_entry(fast_params):
    img, gt = two_region_image(np.random.default_rng(5), 32, 32)
    scr = annotation_scribbles(gt)
    trace = run_robot(img, gt, scr, fast_params, max_strokes=5)
    assert len(trace.steps) <= 6
    if trace.steps[0].jaccard == 1.0:
        assert len(trace.steps) == 1


def test_trace_length_cap(fast_params):
    img, gt = two_region_image(np.random.default_rng(9), 32, 32)
    scr = annotation_scribbles(gt)
    trace = run_robot(img, gt, scr, fast_params, max_strokes=2)
    assert len(trace.steps) <= 3


def test_incremental_mode_runs(fast_params):
    img, gt = two_region_image(np.random.default_rng(13), 32, 32)
    scr = annotation_scribbles(gt)
    trace = run_robot(img, gt, scr, fast_params, max_strokes=2, mode=MODE_INCREMENTAL)
    assert len(trace.steps) >= 1
    assert trace.steps[-1].jaccard > 0.5


def test_trace_csv(tmp_path):
    trace = RobotTrace(
        (
            TraceStep(0, None, 0.5),
            TraceStep(1, Stroke(center=(3, 7), label=FOREGROUND), 0.9),
        )
    )
    p = tmp_path / "trace.csv"
    trace.write_csv(p)
    lines = p.read_text().strip().splitlines()
    assert lines[0] == "step,center_x,center_y,label,jaccard"
    assert lines[1].startswith("0,,,")
    assert lines[2] == "1,7,3,fg,0.900000"


def test_error_shrinks_at_stroke_pixels(fast_params):
    from scribbleseg.segmenter import segment_single_pass

    img, gt = two_region_image(np.random.default_rng(4), 32, 32)
    scr = annotation_scribbles(gt)
    res = segment_single_pass(img, scr, fast_params)
    stroke = next_stroke(res.mask, gt)
    if stroke is None:
        return  # already perfect; nothing to shrink
    pts = stroke_pixels(stroke, (32, 32), gt)
    err_before = (res.mask.labels ^ gt.labels)[pts[:, 0], pts[:, 1]].sum()
    scr2 = scr.merged_with(stroke_to_scribbles(stroke, (32, 32), gt))
    res2 = segment_single_pass(img, scr2, fast_params)
    err_after = (res2.mask.labels ^ gt.labels)[pts[:, 0], pts[:, 1]].sum()
    assert err_after < err_before
