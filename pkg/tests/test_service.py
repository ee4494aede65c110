import io

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from scribbleseg.imgdata import GroundTruthMask
from scribbleseg.service import create_app
from scribbleseg.synthetic import two_region_image


@pytest.fixture(scope="module")
def scene():
    img, gt = two_region_image(np.random.default_rng(2), 32, 32)
    buf = io.BytesIO()
    Image.fromarray(np.asarray(img.pixels)).save(buf, format="PNG")
    gt_buf = io.BytesIO()
    Image.fromarray(np.where(gt.labels, 255, 0).astype(np.uint8), mode="L").save(
        gt_buf, format="PNG"
    )
    return img, gt, buf.getvalue(), gt_buf.getvalue()


@pytest.fixture
def client():
    return TestClient(create_app(static_dir="/nonexistent"))


def _fg_bg_strokes(gt):
    import scipy.ndimage as ndi

    fg_in = ndi.binary_erosion(gt.labels, iterations=3)
    bg_in = ndi.binary_erosion(~gt.labels, iterations=3)
    fr, fc = np.argwhere(fg_in)[0]
    br, bc = np.argwhere(bg_in)[0]
    return [
        {"label": "fg", "points": [[int(fc), int(fr)], [int(fc) + 2, int(fr)]], "radius": 2},
        {"label": "bg", "points": [[int(bc), int(br)], [int(bc) + 2, int(br)]], "radius": 2},
    ]


def test_healthz(client):
    r = client.get("/healthz")
    assert r.status_code == 200
    assert r.json()["status"] == "ok"


def test_create_session(client, scene):
    _, _, png, _ = scene
    r = client.post("/sessions", content=png)
    assert r.status_code == 201
    body = r.json()
    assert body["width"] == 32 and body["height"] == 32 and body["id"]


def test_create_session_bad_bytes(client):
    r = client.post("/sessions", content=b"definitely not a png")
    assert r.status_code == 400


def test_create_session_too_large(client):
    r = client.post("/sessions", content=b"x" * (16 * 1024 * 1024 + 1))
    assert r.status_code == 413


def test_two_uploads_distinct_ids(client, scene):
    _, _, png, _ = scene
    a = client.post("/sessions", content=png).json()["id"]
    b = client.post("/sessions", content=png).json()["id"]
    assert a != b


def test_unknown_session_404(client):
    assert client.post("/sessions/nope/strokes", json={"strokes": []}).status_code == 404
    assert client.get("/sessions/nope/mask.png").status_code == 404


def test_mask_before_result_409(client, scene):
    _, _, png, _ = scene
    sid = client.post("/sessions", content=png).json()["id"]
    assert client.get(f"/sessions/{sid}/mask.png").status_code == 409
    assert client.get(f"/sessions/{sid}/overlay.png").status_code == 409


def test_single_class_422(client, scene):
    _, gt, png, _ = scene
    sid = client.post("/sessions", content=png).json()["id"]
    strokes = _fg_bg_strokes(gt)[:1]
    r = client.post(f"/sessions/{sid}/strokes", json={"strokes": strokes})
    assert r.status_code == 422


def _small_payload(gt):
    # default solver parameters; the 32x32 scene keeps the solve fast
    return {"strokes": _fg_bg_strokes(gt)}


def test_stroke_solve_and_mask(client, scene):
    img, gt, png, gt_png = scene
    sid = client.post("/sessions", content=png).json()["id"]
    assert client.post(f"/sessions/{sid}/groundtruth", content=gt_png).json()["attached"]
    r = client.post(f"/sessions/{sid}/strokes", json=_small_payload(gt))
    assert r.status_code == 200
    body = r.json()
    assert body["jaccard"] is not None and body["jaccard"] >= 0.95
    assert body["wall_time"] > 0

    m = client.get(f"/sessions/{sid}/mask.png")
    assert m.status_code == 200 and m.headers["content-type"] == "image/png"
    arr = np.asarray(Image.open(io.BytesIO(m.content)))
    assert arr.shape == (32, 32)
    assert set(np.unique(arr)) <= {0, 255}

    ov = client.get(f"/sessions/{sid}/overlay.png")
    assert ov.status_code == 200


def test_append_empty_returns_unchanged(client, scene):
    _, gt, png, _ = scene
    sid = client.post("/sessions", content=png).json()["id"]
    client.post(f"/sessions/{sid}/strokes", json=_small_payload(gt))
    before = client.get(f"/sessions/{sid}/mask.png").content
    r = client.post(f"/sessions/{sid}/strokes?mode=append", json={"strokes": []})
    assert r.status_code == 200
    assert client.get(f"/sessions/{sid}/mask.png").content == before


def test_overlay_tints_false_positives(client, scene):
    img, gt, png, _ = scene
    sid = client.post("/sessions", content=png).json()["id"]
    # attach an inverted ground truth so the solved mask is mostly "wrong"
    inv = GroundTruthMask(~gt.labels)
    buf = io.BytesIO()
    Image.fromarray(np.where(inv.labels, 255, 0).astype(np.uint8), mode="L").save(
        buf, format="PNG"
    )
    client.post(f"/sessions/{sid}/groundtruth", content=buf.getvalue())
    client.post(f"/sessions/{sid}/strokes", json=_small_payload(gt))
    ov = np.asarray(Image.open(io.BytesIO(client.get(f"/sessions/{sid}/overlay.png").content)))
    # false positives tinted toward red: red channel dominates somewhere
    reddish = (ov[..., 0].astype(int) - ov[..., 1].astype(int)) > 60
    assert reddish.any()


def test_concurrent_request_409(client, scene):
    _, gt, png, _ = scene
    sid = client.post("/sessions", content=png).json()["id"]
    app = client.app
    session = app.state.store.get(sid)
    assert session.lock.acquire(blocking=False)  # simulate an in-flight solve
    try:
        r = client.post(f"/sessions/{sid}/strokes", json=_small_payload(gt))
        assert r.status_code == 409
    finally:
        session.lock.release()
    assert client.post(f"/sessions/{sid}/strokes", json=_small_payload(gt)).status_code == 200


def test_sessions_isolated(client, scene):
    _, gt, png, _ = scene
    sid1 = client.post("/sessions", content=png).json()["id"]
    sid2 = client.post("/sessions", content=png).json()["id"]
    payload = _small_payload(gt)
    client.post(f"/sessions/{sid1}/strokes", json=payload)
    client.post(f"/sessions/{sid2}/strokes", json=payload)
    # interleave a refinement on session 1 only
    extra = {
        "strokes": [{"label": "bg", "points": [[1, 1], [3, 1]], "radius": 1}],
    }
    client.post(f"/sessions/{sid1}/strokes?mode=append", json=extra)
    m1 = client.get(f"/sessions/{sid1}/mask.png").content
    m2 = client.get(f"/sessions/{sid2}/mask.png").content

    # session 2 must equal a fresh single-session run
    sid3 = client.post("/sessions", content=png).json()["id"]
    client.post(f"/sessions/{sid3}/strokes", json=payload)
    assert client.get(f"/sessions/{sid3}/mask.png").content == m2


def test_replace_vs_append_close(client, scene):
    _, gt, png, _ = scene
    payload = _small_payload(gt)
    extra_stroke = {"label": "bg", "points": [[2, 2], [5, 2]], "radius": 1}

    sid_a = client.post("/sessions", content=png).json()["id"]
    client.post(f"/sessions/{sid_a}/strokes?mode=append", json=payload)
    client.post(f"/sessions/{sid_a}/strokes?mode=append", json={"strokes": [extra_stroke]})
    mask_a = np.asarray(
        Image.open(io.BytesIO(client.get(f"/sessions/{sid_a}/mask.png").content))
    ) > 127

    sid_b = client.post("/sessions", content=png).json()["id"]
    full = dict(payload)
    full["strokes"] = payload["strokes"] + [extra_stroke]
    client.post(f"/sessions/{sid_b}/strokes?mode=replace", json=full)
    mask_b = np.asarray(
        Image.open(io.BytesIO(client.get(f"/sessions/{sid_b}/mask.png").content))
    ) > 127

    inter = (mask_a & mask_b).sum()
    union = (mask_a | mask_b).sum()
    assert union == 0 or inter / union >= 0.95


def test_static_frontend_served_when_built(scene):
    from pathlib import Path

    dist = Path(__file__).resolve().parents[1] / "frontend" / "dist"
    if not (dist / "index.html").is_file():
        pytest.skip("frontend not built")
    ui_client = TestClient(create_app())
    r = ui_client.get("/")
    assert r.status_code == 200
    assert "scribbleseg" in r.text
    assert ui_client.get("/main.js").status_code == 200
    # API routes still win over the static mount
    assert ui_client.get("/healthz").status_code == 200


def test_ui_round_trip_overlay_changes(client, scene):
    """Paint FG+BG, submit, get an overlay; a corrective stroke changes it."""
    img, gt, png, _ = scene
    sid = client.post("/sessions", content=png).json()["id"]
    r = client.post(f"/sessions/{sid}/strokes", json=_small_payload(gt))
    assert r.status_code == 200
    first = client.get(r.json()["overlay_url"]).content
    assert first[:8] == b"\x89PNG\r\n\x1a\n"

    # corrective stroke in a deliberately mislabeled region: find a mask-vs-gt
    # disagreement (or any fg region pixel) and paint its true class
    import io as _io

    mask = np.asarray(Image.open(_io.BytesIO(client.get(f"/sessions/{sid}/mask.png").content))) > 127
    err = mask ^ gt.labels
    target = np.argwhere(err if err.any() else gt.labels)[0]
    label = "fg" if gt.labels[target[0], target[1]] else "bg"
    patch = {
        "strokes": [
            {"label": label, "points": [[int(target[1]), int(target[0])]], "radius": 2}
        ]
    }
    r2 = client.post(f"/sessions/{sid}/strokes?mode=append", json=patch)
    assert r2.status_code == 200
    second = client.get(r2.json()["overlay_url"]).content
    assert second != first  # the overlay reflects the refinement
