"""Overlap metrics and dataset-level aggregation.

Foreground is the positive class. Jaccard and F-score are linearly related
(JI = Fs / (2 - Fs)); both are defined as 1 when neither mask contains any
foreground. Summary statistics use the population standard deviation.
Interaction effort is the band-normalized area above the accuracy-vs-strokes
step curve between the accuracy levels a_low and a_high.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .imgdata import DatasetManifest, GroundTruthMask, load_image, load_mask, load_scribbles
from .robot import MODE_NAIVE, RobotTrace, run_robot
from .segmenter import SegmenterParams, segment_single_pass

log = logging.getLogger(__name__)

MODE_SINGLE = "single"
MODE_ROBOT = "robot"

BAND_LOW = 0.85
BAND_HIGH = 0.98


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion(mask: GroundTruthMask, gt: GroundTruthMask) -> Confusion:
    if mask.labels.shape != gt.labels.shape:
        raise ValueError("mask and ground truth differ in size")
    m, g = mask.labels, gt.labels
    return Confusion(
        tp=int((m & g).sum()),
        fp=int((m & ~g).sum()),
        fn=int((~m & g).sum()),
        tn=int((~m & ~g).sum()),
    )


def jaccard(c: Confusion) -> float:
    denom = c.tp + c.fp + c.fn
    if denom == 0:
        return 1.0
    return c.tp / denom


def fscore(c: Confusion) -> float:
    denom = 2 * c.tp + c.fp + c.fn
    if denom == 0:
        return 1.0
    return 2 * c.tp / denom


def avg_strokes(trace, a_low: float = BAND_LOW, a_high: float = BAND_HIGH) -> float:
    """Band-normalized area above the right-continuous accuracy step curve.

    The curve is clamped to [a_low, a_high]; integration runs from stroke 0
    to the first stroke reaching a_high, or over the whole trace when it
    never gets there.
    """
    jis = trace.jaccards if isinstance(trace, RobotTrace) else np.asarray(trace, dtype=np.float64)
    if jis.size == 0:
        raise ValueError("trace must be nonempty")
    if not a_low < a_high:
        raise ValueError("need a_low < a_high")
    clipped = np.clip(jis, a_low, a_high)
    reached = np.nonzero(jis >= a_high)[0]
    end = int(reached[0]) if reached.size else len(jis)
    area = float((a_high - clipped[:end]).sum())
    return area / (a_high - a_low)


@dataclass(frozen=True)
class SampleResult:
    sample_id: str
    jaccard: float | None
    fscore: float | None
    avg_strokes: float | None = None
    error: str | None = None


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[SampleResult, ...]
    mode: str
    band: tuple[float, float]

    @property
    def ok_rows(self) -> list[SampleResult]:
        return [r for r in self.rows if r.error is None]

    @property
    def failures(self) -> int:
        return len(self.rows) - len(self.ok_rows)

    def _stats(self, values: list[float]) -> tuple[float, float]:
        a = np.asarray(values, dtype=np.float64)
        return float(a.mean()), float(a.std())  # population std

    @property
    def jaccard_mean_std(self) -> tuple[float, float]:
        return self._stats([r.jaccard for r in self.ok_rows])

    @property
    def fscore_mean_std(self) -> tuple[float, float]:
        return self._stats([r.fscore for r in self.ok_rows])

    @property
    def avg_strokes_mean(self) -> float | None:
        vals = [r.avg_strokes for r in self.ok_rows if r.avg_strokes is not None]
        return float(np.mean(vals)) if vals else None

    def write_csv(self, path, meta: str | None = None) -> None:
        robot = self.mode == MODE_ROBOT
        with open(path, "w", newline="") as fh:
            if meta:
                fh.write(f"# {meta}\n")
            w = csv.writer(fh)
            header = ["id", "jaccard", "fscore"] + (["avg_strokes"] if robot else [])
            w.writerow(header)
            for r in self.rows:
                if r.error is not None:
                    w.writerow([r.sample_id, "error", "error"] + (["error"] if robot else []))
                    continue
                row = [r.sample_id, f"{r.jaccard:.6f}", f"{r.fscore:.6f}"]
                if robot:
                    row.append(f"{r.avg_strokes:.6f}")
                w.writerow(row)
            if self.ok_rows:
                jm, js = self.jaccard_mean_std
                fm, fs_ = self.fscore_mean_std
                summary = ["mean+-std(pop)", f"{jm:.4f}+-{js:.4f}", f"{fm:.4f}+-{fs_:.4f}"]
                if robot:
                    summary.append(f"{self.avg_strokes_mean:.4f}")
                w.writerow(summary)

    def format_table(self) -> str:
        lines = [
            f"# mode={self.mode} samples={len(self.rows)} failures={self.failures}"
            " (std is population std)"
        ]
        robot = self.mode == MODE_ROBOT
        head = f"{'id':<20} {'jaccard':>8} {'fscore':>8}"
        if robot:
            head += "  avg_strokes"
        lines.append(head)
        for r in self.rows:
            if r.error is not None:
                lines.append(f"{r.sample_id:<20} failed: {r.error}")
                continue
            line = f"{r.sample_id:<20} {r.jaccard:>8.4f} {r.fscore:>8.4f}"
            if robot and r.avg_strokes is not None:
                line += f"  {r.avg_strokes:>11.4f}"
            lines.append(line)
        if self.ok_rows:
            jm, js = self.jaccard_mean_std
            fm, fs_ = self.fscore_mean_std
            line = f"{'mean':<20} {jm:>8.4f} {fm:>8.4f}"
            if robot and self.avg_strokes_mean is not None:
                line += f"  {self.avg_strokes_mean:>11.4f}"
            lines.append(line)
            lines.append(f"{'std':<20} {js:>8.4f} {fs_:>8.4f}")
        return "\n".join(lines)


def _eval_one(sample, params: SegmenterParams, mode: str, strokes: int, band) -> SampleResult:
    try:
        img = load_image(sample.image_path)
        scr = load_scribbles(sample.scribble_path, img)
        gt = load_mask(sample.ground_truth_path)
        if gt.labels.shape != (img.height, img.width):
            raise ValueError("ground truth size mismatch")
        if mode == MODE_SINGLE:
            res = segment_single_pass(img, scr, params)
            c = confusion(res.mask, gt)
            return SampleResult(sample.sample_id, jaccard(c), fscore(c))
        trace = run_robot(img, gt, scr, params, max_strokes=strokes, mode=MODE_NAIVE)
        final = trace.steps[-1]
        # final-step confusion for JI/Fs; effort from the whole trace
        ji = final.jaccard
        fs_ = 2 * ji / (1 + ji)  # inverse of JI = Fs/(2-Fs)
        return SampleResult(
            sample.sample_id, ji, fs_, avg_strokes(trace, band[0], band[1])
        )
    except Exception as exc:  # per-sample failures are recorded, not fatal
        log.warning("sample %s failed: %s", sample.sample_id, exc)
        return SampleResult(sample.sample_id, None, None, error=str(exc))


def evaluate_dataset(
    manifest: DatasetManifest,
    params: SegmenterParams | None = None,
    mode: str = MODE_SINGLE,
    strokes: int = 20,
    band: tuple[float, float] = (BAND_LOW, BAND_HIGH),
    jobs: int = 1,
) -> EvalReport:
    """Run every manifest sample and aggregate in manifest order."""
    params = params or SegmenterParams()
    if mode not in (MODE_SINGLE, MODE_ROBOT):
        raise ValueError(f"unknown eval mode {mode!r}")
    samples = list(manifest)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda s: _eval_one(s, params, mode, strokes, band), samples))
    else:
        rows = [_eval_one(s, params, mode, strokes, band) for s in samples]
    return EvalReport(tuple(rows), mode, band)
