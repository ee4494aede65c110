import hashlib

import numpy as np
import pytest
from PIL import Image

from scribbleseg.errors import DecodeError, DimensionError, ManifestError
from scribbleseg.imgdata import (
    BACKGROUND,
    FOREGROUND,
    UNLABELED,
    GroundTruthMask,
    ScribbleMap,
    load_dataset,
    load_image,
    load_mask,
    load_scribbles,
    save_mask,
    save_scribbles,
    scribbles_to_rgb,
)


def _write_png(path, arr):
    Image.fromarray(arr).save(path)
    return path


def test_load_1x1_white(tmp_path):
    p = _write_png(tmp_path / "w.png", np.full((1, 1, 3), 255, dtype=np.uint8))
    img = load_image(p)
    assert (img.width, img.height) == (1, 1)
    assert img.pixels.tolist() == [[[255, 255, 255]]]


def test_load_black_red_pair(tmp_path):
    arr = np.array([[[0, 0, 0], [255, 0, 0]]], dtype=np.uint8)
    img = load_image(_write_png(tmp_path / "p.png", arr))
    assert img.pixels.ravel().tolist() == [0, 0, 0, 255, 0, 0]


def test_load_natural_size_matches_reference_decoder(tmp_path, rng):
    arr = rng.integers(0, 256, size=(321, 481, 3), dtype=np.uint8)
    p = _write_png(tmp_path / "n.png", arr)
    img = load_image(p)
    assert (img.width, img.height) == (481, 321)
    # reference decoder: PIL itself on the raw file
    ref = np.asarray(Image.open(p).convert("RGB"))
    assert np.array_equal(img.pixels, ref)


def test_grayscale_promoted_by_replication(tmp_path):
    arr = np.arange(12, dtype=np.uint8).reshape(3, 4)
    img = load_image(_write_png(tmp_path / "g.png", arr))
    assert np.array_equal(img.pixels[..., 0], arr)
    assert np.array_equal(img.pixels[..., 0], img.pixels[..., 2])


def test_load_image_unreadable(tmp_path):
    bad = tmp_path / "x.png"
    bad.write_bytes(b"not a png at all")
    with pytest.raises(DecodeError):
        load_image(bad)


def test_loading_never_mutates_pixels(tmp_path, rng):
    arr = rng.integers(0, 256, size=(20, 30, 3), dtype=np.uint8)
    p = _write_png(tmp_path / "c.png", arr)
    sums = {hashlib.sha256(load_image(p).pixels.tobytes()).hexdigest() for _ in range(3)}
    assert len(sums) == 1


def test_scribbles_all_black_is_unlabeled(tmp_path):
    p = _write_png(tmp_path / "s.png", np.zeros((4, 4, 3), dtype=np.uint8))
    scr = load_scribbles(p)
    assert (scr.labels == UNLABELED).all()


def test_scribbles_green_red(tmp_path):
    arr = np.zeros((2, 2, 3), dtype=np.uint8)
    arr[0, 0] = (0, 255, 0)
    arr[1, 1] = (255, 0, 0)
    arr[0, 1] = (250, 5, 0)  # off-pure: stays unlabeled
    scr = load_scribbles(_write_png(tmp_path / "s.png", arr))
    assert scr.fg_count == 1 and scr.bg_count == 1
    assert scr.labels[0, 0] == FOREGROUND
    assert scr.labels[1, 1] == BACKGROUND
    assert scr.labels[0, 1] == UNLABELED


def test_scribbles_dimension_mismatch(tmp_path):
    img = load_image(_write_png(tmp_path / "i.png", np.zeros((3, 3, 3), dtype=np.uint8)))
    p = _write_png(tmp_path / "s.png", np.zeros((2, 2, 3), dtype=np.uint8))
    with pytest.raises(DimensionError):
        load_scribbles(p, img)


def test_scribble_encode_decode_roundtrip(tmp_path, rng):
    labels = rng.integers(0, 3, size=(9, 7)).astype(np.uint8)
    scr = ScribbleMap(labels)
    p = tmp_path / "rt.png"
    save_scribbles(scr, p)
    back = load_scribbles(p)
    assert np.array_equal(back.labels, labels)
    assert np.array_equal(scribbles_to_rgb(back), scribbles_to_rgb(scr))


def test_save_mask_bytes(tmp_path):
    m = GroundTruthMask(np.ones((2, 2), dtype=bool))
    p = tmp_path / "m.png"
    save_mask(m, p)
    assert np.asarray(Image.open(p)).tolist() == [[255, 255], [255, 255]]

    checker = GroundTruthMask(np.array([[True, False], [False, True]]))
    save_mask(checker, p)
    assert np.asarray(Image.open(p)).ravel().tolist() == [255, 0, 0, 255]


def test_mask_roundtrip_exact(tmp_path, rng):
    for _ in range(5):
        m = GroundTruthMask(rng.random((13, 17)) > 0.5)
        p = tmp_path / "rt.png"
        save_mask(m, p)
        assert np.array_equal(load_mask(p).labels, m.labels)


def _make_dataset(tmp_path, n=3):
    lines = ["# comment"]
    for i in range(n):
        img = np.zeros((4, 4, 3), dtype=np.uint8)
        scr = np.zeros((4, 4, 3), dtype=np.uint8)
        scr[0, 0] = (0, 255, 0)
        scr[3, 3] = (255, 0, 0)
        _write_png(tmp_path / f"i{i}.png", img)
        _write_png(tmp_path / f"s{i}.png", scr)
        save_mask(GroundTruthMask(np.zeros((4, 4), dtype=bool)), tmp_path / f"g{i}.png")
        lines.append(f"id{i}\ti{i}.png\ts{i}.png\tg{i}.png")
    p = tmp_path / "manifest.tsv"
    p.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return p


def test_empty_manifest(tmp_path):
    p = tmp_path / "m.tsv"
    p.write_text("# nothing here\n\n", encoding="utf-8")
    assert len(load_dataset(p)) == 0


def test_manifest_order_and_count(tmp_path):
    mf = load_dataset(_make_dataset(tmp_path, 3))
    assert [s.sample_id for s in mf] == ["id0", "id1", "id2"]


def test_manifest_missing_file_names_path(tmp_path):
    p = _make_dataset(tmp_path, 1)
    text = p.read_text() + "id9\ti0.png\ts0.png\tnope.png\n"
    p.write_text(text)
    with pytest.raises(ManifestError, match="nope.png"):
        load_dataset(p)


def test_manifest_duplicate_id(tmp_path):
    p = _make_dataset(tmp_path, 1)
    p.write_text(p.read_text() + "id0\ti0.png\ts0.png\tg0.png\n")
    with pytest.raises(ManifestError, match="duplicate"):
        load_dataset(p)


def test_manifest_malformed_line(tmp_path):
    p = _make_dataset(tmp_path, 1)
    p.write_text(p.read_text() + "too\tfew\tfields\n")
    with pytest.raises(ManifestError, match="4 tab-separated"):
        load_dataset(p)


def test_types_are_immutable(small_sample):
    img, gt, scr = small_sample
    with pytest.raises(ValueError):
        img.pixels[0, 0, 0] = 1
    with pytest.raises(ValueError):
        gt.labels[0, 0] = True
    with pytest.raises(ValueError):
        scr.labels[0, 0] = 1
