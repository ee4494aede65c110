#!/usr/bin/env python3
"""Cue-combination control runs: sweep feature subsets and augmentation modes
over a manifest and print a mean-Jaccard table (multiplication vs
concatenation, colour/spatial/geodesic subsets)."""

import argparse

from scribbleseg.evaluation import evaluate_dataset
from scribbleseg.features import AffinityConfig, MODE_CONCAT, MODE_MULTIPLY
from scribbleseg.imgdata import load_dataset
from scribbleseg.segmenter import SegmenterParams

SUBSETS = [
    ("geo",),
    ("geo", "euc"),
    ("rgb", "lab"),
    ("rgb", "lab", "euc"),
    ("rgb", "lab", "geo"),
    ("rgb", "lab", "euc", "geo"),
    ("rgb", "lab", "euc", "ic"),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("manifest")
    ap.add_argument("--jobs", type=int, default=2)
    args = ap.parse_args()
    manifest = load_dataset(args.manifest)

    print(f"{'features':<24} {'multiply':>9} {'concat':>9}")
    for cues in SUBSETS:
        scores = []
        for mode in (MODE_MULTIPLY, MODE_CONCAT):
            params = SegmenterParams(affinity=AffinityConfig(cues=cues), mode=mode)
            rep = evaluate_dataset(manifest, params, jobs=args.jobs)
            scores.append(rep.jaccard_mean_std[0] if rep.ok_rows else float("nan"))
        print(f"{'+'.join(cues):<24} {scores[0]:>9.4f} {scores[1]:>9.4f}")


if __name__ == "__main__":
    main()
