"""Command-line front end: noise injection, matching, denoising, verification,
the throughput model and the classical baselines."""

from __future__ import annotations

import argparse
import sys

from . import bm3d, config, reporting
from .baselines import FilterParams, bilateral_filter, default_radius, gaussian_smooth
from .imaging import ImagePlane, add_wagn, load_image, psnr, rgb_to_luma, save_image
from .match_oracle import find_matches_block
from .match_stream import find_matches_stream, overlap_region
from .perf_model import HwConfig, model_report
from .table_io import read_match_table, write_match_table

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def load_plane(path) -> ImagePlane:
    """Load any supported image as a single plane (color collapses to luma)."""
    img = load_image(path)
    if isinstance(img, ImagePlane):
        return img
    return rgb_to_luma(img)


def _add_match_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--block-size", type=int, help="patch edge k")
    p.add_argument("--window-size", type=int, help="search window edge wS")
    p.add_argument("--max-matches", type=int, help="best-N list capacity")
    p.add_argument("--tau", type=float, help="normalized distance threshold")
    p.add_argument("--lambda2d", type=float, help="pixel pre-threshold multiplier")
    p.add_argument("--stride", type=int, help="reference grid step")
    p.add_argument("--workers", type=int, help="offsets per scheduling pass")


def _match_overrides(args) -> dict:
    return {
        "block_size": args.block_size,
        "window_size": args.window_size,
        "max_matches": args.max_matches,
        "tau": args.tau,
        "lambda2d": args.lambda2d,
        "stride": args.stride,
        "n_workers": args.workers,
    }


def _load_cfg(args) -> dict:
    cfg = config.load_defaults()
    if getattr(args, "config", None):
        cfg = config.merge_config(cfg, config.load_config_file(args.config))
    return cfg


def cmd_noise(args) -> int:
    plane = load_plane(args.input)
    noisy = add_wagn(plane, args.sigma, args.seed)
    save_image(noisy, args.output)
    print(f"wrote {args.output}")
    print(f"PSNR vs input: {psnr(plane, noisy):.2f} dB")
    return EXIT_OK


def cmd_match(args) -> int:
    cfg = _load_cfg(args)
    params = config.match_params_from_config(
        cfg, "hard", args.sigma, **_match_overrides(args)
    )
    plane = load_plane(args.input)
    if args.coverage == "region":
        region = overlap_region(plane.width, plane.height, params.half_window,
                                params.block_size)
        if args.backend == "stream":
            table = find_matches_stream(plane, params)
        else:
            table = find_matches_block(plane, params, region=region)
    else:
        if args.backend == "stream":
            table = bm3d.match_padded(plane, params)
        else:
            table = find_matches_block(plane, params)
    write_match_table(table, args.output)
    print(f"wrote {args.output}: {len(table.entries)} references "
          f"({args.backend}, coverage={args.coverage})")
    return EXIT_OK


def cmd_denoise(args) -> int:
    cfg = _load_cfg(args)
    params = config.bm3d_params_from_config(cfg, args.sigma, **_match_overrides(args))
    if args.lambda3d is not None or args.kaiser_beta is not None:
        import dataclasses

        params = dataclasses.replace(
            params,
            lambda3d=params.lambda3d if args.lambda3d is None else args.lambda3d,
            kaiser_beta=params.kaiser_beta if args.kaiser_beta is None else args.kaiser_beta,
        )
    noisy = load_plane(args.input)
    table1 = read_match_table(args.table) if args.table else None
    basic, final = bm3d.run_pipeline(noisy, params, matcher=args.backend, table1=table1)
    save_image(final, args.output)
    print(f"wrote {args.output}")
    if args.basic_output:
        save_image(basic, args.basic_output)
        print(f"wrote {args.basic_output}")
    print(f"PSNR output vs input: {psnr(noisy, final):.2f} dB")
    panels = [("noisy input", noisy), ("first pass", basic), ("final", final)]
    if args.reference:
        ref = load_plane(args.reference)
        print(f"PSNR vs reference: noisy {psnr(ref, noisy):.2f} dB, "
              f"basic {psnr(ref, basic):.2f} dB, final {psnr(ref, final):.2f} dB")
        panels.insert(0, ("reference", ref))
    if args.figure:
        reporting.save_comparison_figure(panels, args.figure)
        print(f"wrote {args.figure}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_ramp_verification

    cfg = _load_cfg(args)
    params = config.match_params_from_config(
        cfg, "hard", 0.0,
        block_size=args.block_size or 3,
        window_size=args.window_size or 8,
        stride=args.stride or 1,
        max_matches=args.max_matches,
        tau=args.tau,
        lambda2d=args.lambda2d,
        n_workers=args.workers,
    )
    results = run_ramp_verification(args.size, params)
    failed = 0
    for res in results:
        tag = "PASS" if res.passed else "FAIL"
        print(f"{tag} {res.name}: {res.detail}")
        failed += 0 if res.passed else 1
    return EXIT_OK if failed == 0 else EXIT_RUNTIME


def cmd_model(args) -> int:
    base = HwConfig(
        clock_hz=args.clock_mhz * 1e6,
        n_channels=args.channels,
        width=args.width,
        height=args.height,
        window_size=args.window_size,
        block_size=args.block_size,
        stride=args.stride,
    )
    sweep = [n for n in range(1, base.window_size + 1)
             if base.window_size % n == 0]
    if base.n_channels not in sweep:
        sweep.append(base.n_channels)
        sweep.sort()
    rows = [
        model_report(
            HwConfig(
                clock_hz=base.clock_hz,
                n_channels=n,
                width=base.width,
                height=base.height,
                window_size=base.window_size,
                block_size=base.block_size,
                stride=base.stride,
            )
        )
        for n in sweep
    ]
    print(reporting.format_model_table(rows))
    chosen = model_report(base)
    print(f"\nconfigured: {chosen['n_channels']} channels -> "
          f"{chosen['match_time_s']:.4f} s/frame, {chosen['fps']:.2f} fps")
    if args.csv:
        reporting.write_model_csv(rows, args.csv)
        print(f"wrote {args.csv}")
        fig_path = args.figure or reporting.default_figure_path(args.csv)
        reporting.save_model_figure(rows, fig_path, highlight_channels=base.n_channels)
        print(f"wrote {fig_path}")
    elif args.figure:
        reporting.save_model_figure(rows, args.figure, highlight_channels=base.n_channels)
        print(f"wrote {args.figure}")
    return EXIT_OK


def cmd_baseline(args) -> int:
    plane = load_plane(args.input)
    radius = args.radius or default_radius(args.sigma_s)
    if args.filter == "gaussian":
        out = gaussian_smooth(plane, args.sigma_s, radius)
    else:
        out = bilateral_filter(
            plane, FilterParams(sigma_s=args.sigma_s, sigma_r=args.sigma_r, radius=radius)
        )
    save_image(out, args.output)
    print(f"wrote {args.output}")
    print(f"PSNR output vs input: {psnr(plane, out):.2f} dB")
    if args.reference:
        ref = load_plane(args.reference)
        print(f"PSNR vs reference: input {psnr(ref, plane):.2f} dB, "
              f"output {psnr(ref, out):.2f} dB")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bmstream",
        description="Stream-based block matching and two-step collaborative denoising.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("noise", help="add white Gaussian noise to an image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--sigma", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("match", help="compute a block-match table (BMT1)")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--backend", choices=["oracle", "stream"], default="stream")
    p.add_argument("--coverage", choices=["full", "region"], default="full",
                   help="full pads for whole-frame coverage; region emits only the "
                        "overlap-region references")
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--config")
    _add_match_flags(p)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("denoise", help="two-step collaborative denoise")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--table", help="precomputed BMT1 table for the first step")
    p.add_argument("--backend", choices=["oracle", "stream"], default="oracle")
    p.add_argument("--reference", help="clean image for PSNR reporting")
    p.add_argument("--basic-output", help="also save the first-pass estimate")
    p.add_argument("--figure", help="write a side-by-side comparison figure")
    p.add_argument("--lambda3d", type=float)
    p.add_argument("--kaiser-beta", type=float)
    p.add_argument("--config")
    _add_match_flags(p)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("verify", help="run the ramp-image verification battery")
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--config")
    _add_match_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("model", help="throughput and buffer model")
    p.add_argument("--clock-mhz", type=float, default=250.0)
    p.add_argument("--channels", type=int, default=16)
    p.add_argument("--width", type=int, default=1280)
    p.add_argument("--height", type=int, default=720)
    p.add_argument("--window-size", type=int, default=32)
    p.add_argument("--block-size", type=int, default=8)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--csv", help="write the table as CSV (figure lands alongside)")
    p.add_argument("--figure", help="figure output path")
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("baseline", help="classical Gaussian / bilateral filters")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--filter", choices=["gaussian", "bilateral"], required=True)
    p.add_argument("--sigma-s", type=float, default=1.5)
    p.add_argument("--sigma-r", type=float, default=25.0)
    p.add_argument("--radius", type=int)
    p.add_argument("--reference")
    p.set_defaults(func=cmd_baseline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
