#!/usr/bin/env python3
"""Materialize the synthetic two-region benchmark as PNGs plus a manifest."""

import argparse

from scribbleseg.synthetic import write_synthetic_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out_dir")
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    manifest = write_synthetic_dataset(args.out_dir, n_images=args.n, seed=args.seed)
    print(f"wrote {args.n} samples; manifest at {manifest}")


if __name__ == "__main__":
    main()
