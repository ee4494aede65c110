#!/usr/bin/env python3
"""Accuracy-vs-strokes curves for the simulated user over a dataset manifest.

Writes one CSV row per (sample, mode) with the per-stroke Jaccard sequence,
plus the band-normalized effort score. Useful for plotting refinement curves
and for comparing the naive and incremental solvers side by side.
"""

import argparse
import csv

from scribbleseg.evaluation import avg_strokes
from scribbleseg.imgdata import load_dataset, load_image, load_mask, load_scribbles
from scribbleseg.robot import MODE_INCREMENTAL, MODE_NAIVE, run_robot
from scribbleseg.segmenter import SegmenterParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("manifest")
    ap.add_argument("out_csv")
    ap.add_argument("--strokes", type=int, default=20)
    ap.add_argument("--modes", default="naive,incremental")
    args = ap.parse_args()

    params = SegmenterParams()
    modes = [m.strip() for m in args.modes.split(",")]
    assert all(m in (MODE_NAIVE, MODE_INCREMENTAL) for m in modes)

    with open(args.out_csv, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "mode", "avg_strokes"] + [f"ji_{t}" for t in range(args.strokes + 1)])
        for sample in load_dataset(args.manifest):
            img = load_image(sample.image_path)
            scr = load_scribbles(sample.scribble_path, img)
            gt = load_mask(sample.ground_truth_path)
            for mode in modes:
                trace = run_robot(img, gt, scr, params, max_strokes=args.strokes, mode=mode)
                jis = [s.jaccard for s in trace.steps]
                effort = avg_strokes(trace)
                row = [sample.sample_id, mode, f"{effort:.4f}"]
                row += [f"{j:.4f}" for j in jis]
                row += [""] * (args.strokes + 1 - len(jis))
                w.writerow(row)
                print(f"{sample.sample_id} [{mode}]: start {jis[0]:.3f} "
                      f"end {jis[-1]:.3f} effort {effort:.2f}")


if __name__ == "__main__":
    main()
