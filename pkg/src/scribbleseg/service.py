"""HTTP session API for interactive segmentation.

Routes:
    POST /sessions                      upload a PNG, get a session id
    POST /sessions/{id}/groundtruth     optionally attach a reference mask
    POST /sessions/{id}/strokes?mode=   replace|append stroke sets, solve
    GET  /sessions/{id}/mask.png        current mask
    GET  /sessions/{id}/overlay.png     boundary overlay (error tints with GT)
    GET  /healthz

Sessions are in-memory with a 30-minute idle TTL. Within a session requests
are strictly serialized: a second stroke post while one is computing gets
409, it is not queued. ``append`` drives the incremental solver; ``replace``
re-runs the single pass on the full stroke set.
"""

from __future__ import annotations

import io
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image
from pydantic import BaseModel, Field

from .errors import AnnotationError, DataError, DegenerateDataError, NumericError
from .evaluation import confusion, jaccard
from .features import AffinityConfig
from .imgdata import (
    BACKGROUND,
    FOREGROUND,
    GroundTruthMask,
    ImageRGB,
    ScribbleMap,
)
from .render import boundary_overlay, png_bytes, tinted_overlay
from .segmenter import (
    SegmenterParams,
    SegmentationResult,
    segment_incremental,
    start_session,
)

MAX_UPLOAD_BYTES = 16 * 1024 * 1024
SESSION_TTL_SECONDS = 30 * 60

MODE_REPLACE = "replace"
MODE_APPEND = "append"


class StrokeModel(BaseModel):
    label: str = Field(pattern="^(fg|bg)$")
    points: list[tuple[float, float]]  # (x, y) image coordinates
    radius: float = 4.0


class StrokePayload(BaseModel):
    strokes: list[StrokeModel] = Field(default_factory=list)
    eigvecs: int | None = None
    pivots_fg: int | None = None
    pivots_bg: int | None = None
    lam: float | None = None
    bins: int | None = None
    gamma_g: float | None = None
    scales: list[float] | None = None


def params_from_payload(payload: StrokePayload) -> SegmenterParams:
    base = SegmenterParams()
    cfg = base.affinity
    cfg = AffinityConfig(
        gamma_g=payload.gamma_g if payload.gamma_g is not None else cfg.gamma_g,
        scales=tuple(payload.scales) if payload.scales else cfg.scales,
        k1=payload.pivots_fg or cfg.k1,
        k2=payload.pivots_bg or cfg.k2,
    )
    return SegmenterParams(
        m=payload.eigvecs or base.m,
        affinity=cfg,
        lam=payload.lam if payload.lam is not None else base.lam,
        bins=payload.bins or base.bins,
    )


def rasterize_strokes(strokes: list[StrokeModel], shape: tuple[int, int]) -> ScribbleMap:
    """Stamp disks along each polyline at <= 1 px spacing."""
    h, w = shape
    labels = np.zeros(shape, dtype=np.uint8)
    yy, xx = np.mgrid[0:h, 0:w]
    for stroke in strokes:
        value = FOREGROUND if stroke.label == "fg" else BACKGROUND
        pts = np.asarray(stroke.points, dtype=np.float64).reshape(-1, 2)
        pts[:, 0] = np.clip(pts[:, 0], 0, w - 1)
        pts[:, 1] = np.clip(pts[:, 1], 0, h - 1)
        r = max(float(stroke.radius), 0.5)
        centers = []
        for a, b in zip(pts[:-1], pts[1:]):
            steps = int(np.ceil(np.hypot(*(b - a)))) + 1
            for t in np.linspace(0.0, 1.0, steps):
                centers.append(a + t * (b - a))
        if len(pts) == 1:
            centers.append(pts[0])
        for cx, cy in centers:
            r0 = max(int(np.floor(cy - r)), 0)
            r1 = min(int(np.ceil(cy + r)) + 1, h)
            c0 = max(int(np.floor(cx - r)), 0)
            c1 = min(int(np.ceil(cx + r)) + 1, w)
            patch = (yy[r0:r1, c0:c1] - cy) ** 2 + (xx[r0:r1, c0:c1] - cx) ** 2 <= r * r
            labels[r0:r1, c0:c1][patch] = value
    return ScribbleMap(labels)


@dataclass
class Session:
    session_id: str
    image: ImageRGB
    created: float
    last_used: float
    lock: threading.Lock = field(default_factory=threading.Lock)
    gt: GroundTruthMask | None = None
    params: SegmenterParams | None = None
    scribbles: ScribbleMap | None = None  # accumulated strokes
    inc_state: object = None  # segmenter SessionState once solving has started
    result: SegmentationResult | None = None


class SessionStore:
    def __init__(self, ttl: float = SESSION_TTL_SECONDS):
        self._sessions: dict[str, Session] = {}
        self._guard = threading.Lock()
        self._ttl = ttl

    def create(self, image: ImageRGB) -> Session:
        now = time.time()
        session = Session(session_id=uuid.uuid4().hex, image=image, created=now, last_used=now)
        with self._guard:
            self._purge(now)
            self._sessions[session.session_id] = session
        return session

    def get(self, session_id: str) -> Session | None:
        now = time.time()
        with self._guard:
            self._purge(now)
            session = self._sessions.get(session_id)
            if session is not None:
                session.last_used = now
            return session

    def _purge(self, now: float) -> None:
        dead = [k for k, s in self._sessions.items() if now - s.last_used > self._ttl]
        for k in dead:
            del self._sessions[k]

    def __len__(self) -> int:
        return len(self._sessions)


def create_app(static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="scribbleseg", version="0.1.0")
    store = SessionStore()
    app.state.store = store

    def _error(status: int, message: str) -> JSONResponse:
        return JSONResponse({"error": message}, status_code=status)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "sessions": len(store)}

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        body = await request.body()
        if len(body) > MAX_UPLOAD_BYTES:
            return _error(413, "image exceeds 16 MB")
        try:
            with Image.open(io.BytesIO(body)) as im:
                arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
            image = ImageRGB(np.ascontiguousarray(arr))
        except Exception:
            return _error(400, "body is not a decodable image")
        session = store.create(image)
        return {"id": session.session_id, "width": image.width, "height": image.height}

    @app.post("/sessions/{session_id}/groundtruth")
    async def attach_gt(session_id: str, request: Request):
        session = store.get(session_id)
        if session is None:
            return _error(404, "unknown session")
        body = await request.body()
        try:
            with Image.open(io.BytesIO(body)) as im:
                arr = np.asarray(im.convert("L"))
        except Exception:
            return _error(400, "body is not a decodable image")
        if arr.shape != (session.image.height, session.image.width):
            return _error(422, "ground truth size mismatch")
        session.gt = GroundTruthMask(arr > 127)
        return {"attached": True}

    @app.post("/sessions/{session_id}/strokes")
    def post_strokes(
        session_id: str,
        payload: StrokePayload,
        mode: str = Query(MODE_APPEND, pattern=f"^({MODE_REPLACE}|{MODE_APPEND})$"),
    ):
        session = store.get(session_id)
        if session is None:
            return _error(404, "unknown session")
        if not session.lock.acquire(blocking=False):
            return _error(409, "a computation is already in flight for this session")
        try:
            return _solve_strokes(session, payload, mode)
        finally:
            session.lock.release()

    def _solve_strokes(session: Session, payload: StrokePayload, mode: str):
        t0 = time.perf_counter()
        shape = (session.image.height, session.image.width)
        new_scribbles = rasterize_strokes(payload.strokes, shape)

        if not payload.strokes and session.result is not None:
            return _summary(session, 0.0)  # poll

        try:
            if mode == MODE_REPLACE or session.result is None:
                merged = (
                    new_scribbles
                    if mode == MODE_REPLACE or session.scribbles is None
                    else session.scribbles.merged_with(new_scribbles)
                )
                if merged.fg_count == 0 or merged.bg_count == 0:
                    return _error(422, "strokes must cover both fg and bg")
                session.params = params_from_payload(payload)
                state, result = start_session(session.image, merged, session.params)
                session.inc_state = state
                session.scribbles = merged
                session.result = result
            else:  # append onto an existing solution
                state, result = segment_incremental(session.inc_state, new_scribbles)
                session.inc_state = state
                session.scribbles = state.scribbles
                session.result = result
        except AnnotationError as exc:
            return _error(422, str(exc))
        except (DataError, DegenerateDataError, NumericError) as exc:
            return _error(422, f"solve failed: {exc}")
        return _summary(session, time.perf_counter() - t0)

    def _summary(session: Session, wall_time: float):
        ji = None
        if session.gt is not None and session.result is not None:
            ji = jaccard(confusion(session.result.mask, session.gt))
        return {
            "id": session.session_id,
            "width": session.image.width,
            "height": session.image.height,
            "mask_url": f"/sessions/{session.session_id}/mask.png",
            "overlay_url": f"/sessions/{session.session_id}/overlay.png",
            "wall_time": wall_time,
            "jaccard": ji,
        }

    @app.get("/sessions/{session_id}/mask.png")
    def get_mask(session_id: str):
        session = store.get(session_id)
        if session is None:
            return _error(404, "unknown session")
        if session.result is None:
            return _error(409, "no result computed yet")
        arr = np.where(session.result.mask.labels, 255, 0).astype(np.uint8)
        return Response(png_bytes(arr), media_type="image/png")

    @app.get("/sessions/{session_id}/overlay.png")
    def get_overlay(session_id: str):
        session = store.get(session_id)
        if session is None:
            return _error(404, "unknown session")
        if session.result is None:
            return _error(409, "no result computed yet")
        if session.gt is not None:
            arr = tinted_overlay(session.image, session.result.mask, session.gt)
        else:
            arr = boundary_overlay(session.image, session.result.mask)
        return Response(png_bytes(arr), media_type="image/png")

    static = Path(static_dir) if static_dir else Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if static.is_dir():
        app.mount("/", StaticFiles(directory=static, html=True), name="ui")
    return app
