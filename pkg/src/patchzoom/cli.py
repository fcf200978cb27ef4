"""Command-line driver: train, index, upscale, deblur, stretch, bench.

Exit codes: 0 success, 2 parameter error, 3 file-format error.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .config import SrConfig
from .errors import FormatError
from .imageops import (
    bicubic_stretch,
    bicubic_upsample,
    load_image,
    load_rgb,
    rgb_to_ycbcr,
    save_image,
    save_rgb,
    ycbcr_to_rgb,
)
from .lsh import build_index, save_index, tune_r
from .pipeline import SrModel, deblur, stretch, super_resolve
from .training import SampleSpec, build_db, load_db, save_db

__all__ = ["main", "entry"]


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--db", required=True, help="patch database (.pzdb)")
    p.add_argument("--index", required=True, help="hash index (.pzlsh)")


def _add_infer_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--overlap", type=int, default=1, help="inference patch overlap")
    p.add_argument("--iters", type=int, default=5, help="back-projection iterations")
    p.add_argument("--no-backproject", action="store_true", help="stop after patch blending")
    p.add_argument("--t", type=int, default=None, help="tables a candidate must match (default: index's)")
    p.add_argument("--max-candidates", type=int, default=None, help="neighbor cap (default 3*L)")
    p.add_argument("--solver-space", choices=("pixels", "features"), default="pixels")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patchzoom",
        description="Example-based single-image super-resolution",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="build a patch database from a folder of images")
    p.add_argument("--images", required=True, help="directory of training PNGs")
    p.add_argument("--out", required=True, help="output database path")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--patch", type=int, default=5)
    p.add_argument("--overlap", type=int, default=2, help="training patch overlap")
    p.add_argument("--scale", type=int, default=2)
    p.add_argument("--blur-sigma", type=float, default=1.0)
    p.add_argument("--features", choices=("first", "second", "both"), default="both")
    p.add_argument("--sub-size", type=int, default=100, help="sampled sub-image side")
    p.add_argument("--samples", type=int, default=25, help="sub-images per source image")

    p = sub.add_parser("index", help="hash a database's features into an LSH index")
    p.add_argument("--db", required=True)
    p.add_argument("--out", required=True, help="output index path")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--L", type=int, default=30)
    p.add_argument("--t", type=int, default=2)
    p.add_argument("--r", default="auto", help='bucket width, or "auto" to tune')
    p.add_argument("--target-bucket", type=int, default=10, help="mean bucket occupancy for auto r")
    p.add_argument("--seed", type=int, default=42)

    p = sub.add_parser("upscale", help="super-resolve one image")
    _add_model_args(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--color", action="store_true", help="keep RGB (chroma is upsampled bicubically)")
    _add_infer_args(p)

    p = sub.add_parser("deblur", help="sharpen a blurry image at its own size")
    _add_model_args(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    _add_infer_args(p)

    p = sub.add_parser("stretch", help="anisotropic zoom by per-axis factors")
    _add_model_args(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fx", type=int, default=2)
    p.add_argument("--fy", type=int, default=1)
    _add_infer_args(p)

    p = sub.add_parser("bench", help="compare methods over a directory of ground-truth images")
    _add_model_args(p)
    p.add_argument("--test", required=True, help="directory of ground-truth PNGs")
    p.add_argument("--report", required=True, help="output CSV path")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--deterministic", action="store_true", help="zero the wall-time column")
    p.add_argument("--unsharp-amount", type=float, default=0.6)
    p.add_argument("--unsharp-sigma", type=float, default=1.0)
    _add_infer_args(p)

    return parser


def _png_paths(directory: str) -> list[Path]:
    paths = sorted(Path(directory).glob("*.png"))
    if not paths:
        raise ValueError(f"no .png files in {directory}")
    return paths


def _load_model(args) -> SrModel:
    return SrModel.from_files(args.db, args.index)


def _infer_config(model: SrModel, args) -> SrConfig:
    cfg = SrConfig(
        patch_size=model.db.patch_size,
        overlap=args.overlap,
        scale_factor=model.db.scale_factor,
        blur_sigma=model.db.blur_sigma,
        feature_order=model.db.feature_order,
        max_candidates=args.max_candidates,
        solver_space=args.solver_space,
        iterations=0 if args.no_backproject else args.iters,
    )
    if model.index is not None:
        cfg.k = model.index.k
        cfg.L = model.index.L
        cfg.r = model.index.r
        cfg.t = model.index.t
    if args.t is not None:
        cfg.t = args.t
    return cfg


def _cmd_train(args) -> int:
    images = [load_image(p) for p in _png_paths(args.images)]
    cfg = SrConfig(
        patch_size=args.patch,
        overlap=args.overlap,
        scale_factor=args.scale,
        blur_sigma=args.blur_sigma,
        feature_order=args.features,
        seed=args.seed,
    )
    spec = SampleSpec(sub_image_size=args.sub_size, samples_per_image=args.samples)
    db = build_db(images, cfg, spec)
    save_db(db, args.out)
    print(f"wrote {args.out}: {len(db)} patch pairs, feature dim {db.feature_dim}")
    return 0


def _cmd_index(args) -> int:
    db = load_db(args.db)
    if args.r == "auto":
        r, degenerate = tune_r(db.features, args.target_bucket, seed=args.seed, k=args.k)
        if degenerate:
            warnings.warn("degenerate feature projections; bucket width fell back to 1.0")
        print(f"auto-tuned bucket width r = {r:.6g}")
    else:
        r = float(args.r)
    index = build_index(db.ids, db.features, k=args.k, L=args.L, r=r, t=args.t, seed=args.seed)
    save_index(index, args.out)
    buckets = sum(len(tb.buckets) for tb in index.tables)
    print(f"wrote {args.out}: {args.L} tables, {buckets} buckets")
    return 0


def _run_gray(args, fn) -> int:
    model = _load_model(args)
    cfg = _infer_config(model, args)
    img = load_image(args.input)
    out = fn(model, img, cfg)
    save_image(args.out, out)
    print(f"wrote {args.out} ({out.shape[1]}x{out.shape[0]})")
    return 0


def _cmd_upscale(args) -> int:
    model = _load_model(args)
    cfg = _infer_config(model, args)
    factor = cfg.scale_factor
    if args.color:
        y, cb, cr = rgb_to_ycbcr(load_rgb(args.input))
        res = super_resolve(model, y, cfg)
        rgb = ycbcr_to_rgb(
            res.hr_image,
            bicubic_upsample(cb, factor),
            bicubic_upsample(cr, factor),
        )
        save_rgb(args.out, np.clip(rgb, 0.0, 1.0))
        out_shape = res.hr_image.shape
    else:
        res = super_resolve(model, load_image(args.input), cfg)
        save_image(args.out, res.hr_image)
        out_shape = res.hr_image.shape
    print(
        f"wrote {args.out} ({out_shape[1]}x{out_shape[0]}), "
        f"{res.similarity_ops_total} similarity ops, {res.fallback_patch_count} fallbacks"
    )
    return 0


def _cmd_deblur(args) -> int:
    return _run_gray(args, deblur)


def _cmd_stretch(args) -> int:
    return _run_gray(args, lambda model, img, cfg: stretch(model, img, args.fx, args.fy, cfg))


def _cmd_bench(args) -> int:
    model = _load_model(args)
    cfg = _infer_config(model, args)
    images = []
    for path in _png_paths(args.test):
        try:
            images.append((path.stem, load_image(path)))
        except OSError as exc:
            warnings.warn(f"skipping {path}: {exc}")
    report = bench_mod.bench_run(
        images,
        model,
        cfg,
        repeats=args.repeats,
        unsharp_amount=args.unsharp_amount,
        unsharp_sigma=args.unsharp_sigma,
    )
    report.write_csv(args.report, zero_wall=args.deterministic)
    s = report.summary()
    print(
        f"wrote {args.report}: ops speedup {s['ops_speedup']:.1f}x, "
        f"mse ours {s['mse_ours']:.3e} vs exhaustive {s['mse_exhaustive']:.3e} "
        f"vs bicubic {s['mse_bicubic']:.3e}"
    )
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "index": _cmd_index,
    "upscale": _cmd_upscale,
    "deblur": _cmd_deblur,
    "stretch": _cmd_stretch,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
