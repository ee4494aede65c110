"""Command-line entry points.

Subcommands: segment, eval, robot, toy, bench, serve. Exit codes: 0 ok,
1 usage, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time

import numpy as np
from PIL import Image

from . import evaluation, imgdata, render, robot, spectral, synthetic
from .errors import DataError, NumericError
from .features import ALL_CUES, AffinityConfig, MODE_CONCAT, MODE_MULTIPLY
from .segmenter import SegmenterParams, segment_single_pass

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

DEFAULT_PORT = 8742
BENCH_SIZES = (400, 900, 1600, 2500, 3600, 15000, 30000)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we reserve that
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_scales(text: str) -> tuple[float, ...]:
    try:
        scales = tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad scale list {text!r}")
    if not scales or any(s <= 0 for s in scales):
        raise argparse.ArgumentTypeError("scales must be positive")
    return scales


def _parse_cues(text: str) -> tuple[str, ...]:
    cues = tuple(t.strip() for t in text.split(",") if t.strip())
    bad = set(cues) - set(ALL_CUES)
    if bad or not cues:
        raise argparse.ArgumentTypeError(f"unknown features: {sorted(bad)}")
    return cues


def _parse_band(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad band {text!r}; expected low:high")
    if not 0 <= lo < hi <= 1:
        raise argparse.ArgumentTypeError("band must satisfy 0 <= low < high <= 1")
    return lo, hi


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eigvecs", type=int, default=100, help="eigenfunction count m")
    p.add_argument("--pivots-fg", type=int, default=21)
    p.add_argument("--pivots-bg", type=int, default=21)
    p.add_argument("--lambda", dest="lam", type=float, default=100.0)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--gamma-g", type=float, default=0.5)
    p.add_argument("--scales", type=_parse_scales, default=(0.25, 0.5, 1.0, 2.0))
    p.add_argument("--features", type=_parse_cues, default=("rgb", "lab", "euc", "geo"))
    p.add_argument("--jobs", type=int, default=0, help="worker threads (0 = auto)")


def _params_from_args(args, mode: str | None = None) -> SegmenterParams:
    cfg = AffinityConfig(
        gamma_g=args.gamma_g,
        scales=args.scales,
        k1=args.pivots_fg,
        k2=args.pivots_bg,
        cues=args.features,
    )
    return SegmenterParams(
        m=args.eigvecs,
        affinity=cfg,
        lam=args.lam,
        bins=args.bins,
        mode=mode or MODE_MULTIPLY,
        jobs=args.jobs,
    )


def _flag_echo(args, params: SegmenterParams | None = None) -> str:
    """One self-describing line echoed into every output file header."""
    parts = ["scribbleseg", args.command]
    if params is not None:
        cfg = params.affinity
        parts.append(
            f"eigvecs={params.m} pivots={cfg.k1}/{cfg.k2} lambda={params.lam:g} "
            f"bins={params.bins} gamma_g={cfg.gamma_g:g} "
            f"scales={','.join(f'{s:g}' for s in cfg.scales)} mode={params.mode} "
            f"features={','.join(cfg.cues)}"
        )
    for name in ("strokes", "band", "seed", "n", "separation", "sizes"):
        if hasattr(args, name):
            v = getattr(args, name)
            if isinstance(v, tuple):
                v = ",".join(f"{x:g}" for x in v)
            parts.append(f"{name}={v}")
    return " ".join(parts)


def _cmd_segment(args) -> int:
    img = imgdata.load_image(args.image)
    scribbles = imgdata.load_scribbles(args.scribbles, img)
    params = _params_from_args(args, mode=args.mode)
    result = segment_single_pass(img, scribbles, params)
    imgdata.save_mask(result.mask, args.out_mask)
    if args.overlay:
        Image.fromarray(render.boundary_overlay(img, result.mask)).save(args.overlay)
    if args.dump_features:
        from .features import build_feature_matrix, sample_pivots

        pivots = sample_pivots(scribbles, params.k1, params.k2)
        fm = build_feature_matrix(img, pivots, params.affinity, 1.0, params.mode)
        with open(args.dump_features, "w", newline="") as fh:
            fh.write(f"# {_flag_echo(args, params)} scale=1\n")
            w = csv.writer(fh)
            w.writerow(fm.columns)
            for row in fm.values:
                w.writerow([f"{v:.6g}" for v in row])
    for stage, secs in result.timings.items():
        print(f"{stage}: {secs:.3f}s")
    print(f"mask written to {args.out_mask}")
    return EXIT_OK


def _apply_ablations(args) -> None:
    for spec_text in args.ablate or []:
        key, _, value = spec_text.partition("=")
        if key == "features":
            args.features = _parse_cues(value)
        elif key == "mode":
            if value not in (MODE_MULTIPLY, MODE_CONCAT):
                raise DataError(f"unknown mode {value!r}")
            args.aug_mode = value
        else:
            raise DataError(f"unknown ablation key {key!r}")


def _cmd_eval(args) -> int:
    _apply_ablations(args)
    manifest = imgdata.load_dataset(args.manifest)
    params = _params_from_args(args, mode=getattr(args, "aug_mode", MODE_MULTIPLY))
    report = evaluation.evaluate_dataset(
        manifest,
        params,
        mode=args.mode,
        strokes=args.strokes,
        band=args.band,
        jobs=max(args.jobs, 1),
    )
    print(report.format_table())
    if args.out:
        report.write_csv(args.out, meta=_flag_echo(args, params))
        print(f"report written to {args.out}")
    return EXIT_OK


def _cmd_robot(args) -> int:
    img = imgdata.load_image(args.image)
    scribbles = imgdata.load_scribbles(args.scribbles, img)
    gt = imgdata.load_mask(args.ground_truth)
    params = _params_from_args(args)
    trace = robot.run_robot(
        img, gt, scribbles, params, max_strokes=args.strokes, mode=args.robot_mode
    )
    effort = evaluation.avg_strokes(trace, args.band[0], args.band[1])
    print(f"steps: {len(trace.steps)}  final JI: {trace.steps[-1].jaccard:.4f}  "
          f"avg strokes in band [{args.band[0]}, {args.band[1]}]: {effort:.3f}")
    if args.out:
        trace.write_csv(args.out, meta=_flag_echo(args, params))
        print(f"trace written to {args.out}")
    return EXIT_OK


def _cmd_toy(args) -> int:
    if args.n < 10:
        raise DataError("need n >= 10")
    rng = np.random.default_rng(args.seed)
    X, y, labeled = synthetic.two_gaussians(rng, args.n, args.separation)

    t0 = time.perf_counter()
    sol = spectral.smoothness_on_points(X, labeled, y[labeled], m=args.eigvecs, bins=args.bins)
    t_efn = time.perf_counter() - t0
    pred = np.where(sol.f > 0, 1.0, -1.0)
    print(f"eigenfunction path: {t_efn:.4f}s  accuracy vs truth: {(pred == y).mean():.4f}")

    if args.baseline:
        t0 = time.perf_counter()
        spectral.solve_alpha_unvectorized(sol.U, sol.sigma, labeled, y[labeled])
        t_unvec = time.perf_counter() - t0
        t0 = time.perf_counter()
        spectral.solve_alpha(sol.U, sol.sigma, labeled, y[labeled])
        t_opt = time.perf_counter() - t0
        print(f"alpha solve: unvectorized {t_unvec:.4f}s, optimized {t_opt:.6f}s, "
              f"ratio {t_unvec / max(t_opt, 1e-9):.1f}x")

    pred_exact = None
    if args.n <= spectral.EXACT_N_LIMIT:
        t0 = time.perf_counter()
        exact = spectral.smoothness_on_points_exact(X, labeled, y[labeled], k=args.eigvecs)
        t_exact = time.perf_counter() - t0
        pred_exact = np.where(exact.f > 0, 1.0, -1.0)
        print(f"exact eigenvector path: {t_exact:.4f}s  "
              f"agreement with eigenfunction path: {(pred == pred_exact).mean():.4f}")
    else:
        print(f"exact path skipped: n > {spectral.EXACT_N_LIMIT} (dense solve guard)")

    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(f"# {_flag_echo(args)} eigvecs={args.eigvecs} bins={args.bins}\n")
            w = csv.writer(fh)
            header = ["x", "y", "true", "pred_eigenfunction"]
            if pred_exact is not None:
                header.append("pred_exact")
            w.writerow(header)
            for i in range(args.n):
                row = [f"{X[i,0]:.6f}", f"{X[i,1]:.6f}", int(y[i]), int(pred[i])]
                if pred_exact is not None:
                    row.append(int(pred_exact[i]))
                w.writerow(row)
        print(f"scatter written to {args.out}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    rng = np.random.default_rng(args.seed)
    rows = []
    for n in args.sizes:
        X, y, labeled = synthetic.two_gaussians(rng, n)
        t0 = time.perf_counter()
        U, sigma = spectral.eigenfunction_basis(X, m=args.eigvecs, bins=args.bins)
        t_basis = time.perf_counter() - t0

        t0 = time.perf_counter()
        spectral.solve_alpha_unvectorized(U, sigma, labeled, y[labeled])
        t_efn = t_basis + (time.perf_counter() - t0)

        t0 = time.perf_counter()
        spectral.solve_alpha(U, sigma, labeled, y[labeled])
        t_efn_opt = t_basis + (time.perf_counter() - t0)

        t_exact = ""
        if n <= spectral.EXACT_N_LIMIT:
            t0 = time.perf_counter()
            spectral.smoothness_on_points_exact(X, labeled, y[labeled], k=args.eigvecs)
            t_exact = f"{time.perf_counter() - t0:.4f}"
        rows.append((n, t_exact, f"{t_efn:.4f}", f"{t_efn_opt:.4f}"))
        print(f"n={n}: exact={t_exact or 'skipped'} efn={t_efn:.4f} efn_opt={t_efn_opt:.4f}")

    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(f"# {_flag_echo(args)} eigvecs={args.eigvecs} bins={args.bins}\n")
            w = csv.writer(fh)
            w.writerow(["n", "t_exact", "t_efn", "t_efn_opt"])
            w.writerows(rows)
        print(f"benchmark written to {args.out}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    port = args.port if args.port is not None else int(os.environ.get("SL_PORT", DEFAULT_PORT))
    uvicorn.run(create_app(), host=args.host, port=port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scribbleseg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", parents=[], help="segment one image from a scribble overlay")
    p.add_argument("image")
    p.add_argument("scribbles")
    p.add_argument("out_mask")
    p.add_argument("--overlay", help="also write a boundary-overlay PNG")
    p.add_argument("--dump-features", help="write the scale-1 feature matrix as CSV")
    p.add_argument("--mode", choices=[MODE_MULTIPLY, MODE_CONCAT], default=MODE_MULTIPLY)
    p.add_argument("--seed", type=int, default=0, help="unused; pipeline is deterministic")
    _add_param_flags(p)
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("eval", help="evaluate a dataset manifest")
    p.add_argument("manifest")
    p.add_argument("--mode", choices=[evaluation.MODE_SINGLE, evaluation.MODE_ROBOT],
                   default=evaluation.MODE_SINGLE)
    p.add_argument("--strokes", type=int, default=20)
    p.add_argument("--band", type=_parse_band, default=(0.85, 0.98))
    p.add_argument("--ablate", action="append",
                   help="e.g. features=rgb,lab or mode=concat; repeatable")
    p.add_argument("--out", help="CSV report path")
    p.add_argument("--seed", type=int, default=0, help="unused; pipeline is deterministic")
    _add_param_flags(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("robot", help="simulated-user refinement on one sample")
    p.add_argument("image")
    p.add_argument("scribbles")
    p.add_argument("ground_truth")
    p.add_argument("--robot-mode", choices=[robot.MODE_NAIVE, robot.MODE_INCREMENTAL],
                   default=robot.MODE_NAIVE)
    p.add_argument("--strokes", type=int, default=20)
    p.add_argument("--band", type=_parse_band, default=(0.85, 0.98))
    p.add_argument("--out", help="trace CSV path")
    p.add_argument("--seed", type=int, default=0, help="unused; robot is deterministic")
    _add_param_flags(p)
    p.set_defaults(func=_cmd_robot)

    p = sub.add_parser("toy", help="two-Gaussian classification benchmark")
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--separation", type=float, default=4.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eigvecs", type=int, default=10)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--baseline", action="store_true",
                   help="also time the unvectorized alpha solve")
    p.add_argument("--out", help="scatter CSV path")
    p.set_defaults(func=_cmd_toy)

    p = sub.add_parser("bench", help="timing sweep over point counts")
    p.add_argument("--sizes", type=lambda t: tuple(int(x) for x in t.split(",")),
                   default=BENCH_SIZES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eigvecs", type=int, default=10)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--out", help="CSV path")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("serve", help="run the interactive HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None,
                   help=f"default: $SL_PORT or {DEFAULT_PORT}")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
