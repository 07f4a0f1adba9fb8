"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys

from .bench import BenchConfig, emit_all, emit_montage, run_benchmark
from .bm3d import Bm3dParams, denoise_bm3d
from .image import load_image, save_image
from .ksvd import KsvdParams, denoise_ksvd
from .metrics import clip_for_scoring, psnr, ssim
from .nlm import NlmParams, denoise_nlm
from .noise import NoiseSpec, awgn


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="denoisebench")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("corrupt", help="add seeded AWGN to an image")
    p.add_argument("image")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("denoise", help="run one denoiser on a noisy image")
    p.add_argument("image")
    p.add_argument("--algo", choices=("nlm", "ksvd", "bm3d"), required=True)
    p.add_argument("--sigma", type=float, required=True,
                   help="assumed AWGN sigma of the input")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override an algorithm parameter (repeatable)")
    p.add_argument("--dump-dict", metavar="PATH",
                   help="write the trained dictionary (ksvd only)")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("metrics", help="print PSNR/SSIM between two images")
    p.add_argument("reference")
    p.add_argument("test")

    p = sub.add_parser("bench", help="run the benchmark matrix from a JSON config")
    p.add_argument("--config", required=True)

    p = sub.add_parser("montage", help="build a side-by-side comparison image")
    p.add_argument("clean")
    p.add_argument("noisy")
    p.add_argument("--nlm", help="NL-means output image")
    p.add_argument("--ksvd", help="K-SVD output image")
    p.add_argument("--bm3d", help="BM3D output image")
    p.add_argument("-o", "--output", required=True)
    return parser


def _parse_overrides(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise _UsageError(f"--set expects KEY=VALUE, got {pair!r}")
        key, value = pair.split("=", 1)
        try:
            out[key] = int(value)
        except ValueError:
            try:
                out[key] = float(value)
            except ValueError:
                out[key] = value
    return out


def _cmd_corrupt(args) -> int:
    img = load_image(args.image)
    save_image(awgn(img, NoiseSpec("awgn", args.sigma, args.seed)), args.output)
    return 0


def _cmd_denoise(args) -> int:
    img = load_image(args.image)
    overrides = _parse_overrides(args.set)
    if args.dump_dict and args.algo != "ksvd":
        raise ValueError("--dump-dict only applies to --algo ksvd")
    if args.algo == "nlm":
        out = denoise_nlm(img, NlmParams(sigma=args.sigma, **overrides))
    elif args.algo == "ksvd":
        out = denoise_ksvd(img, KsvdParams(sigma=args.sigma, **overrides),
                           dump_dict_path=args.dump_dict)
    else:
        out = denoise_bm3d(img, Bm3dParams(sigma=args.sigma, **overrides))
    save_image(out, args.output)
    return 0


def _cmd_metrics(args) -> int:
    ref = clip_for_scoring(load_image(args.reference))
    test = clip_for_scoring(load_image(args.test))
    print(f"{psnr(ref, test):.2f}/{ssim(ref, test):.2f}")
    return 0


def _cmd_bench(args) -> int:
    config = BenchConfig.from_json(args.config)
    report = run_benchmark(config, keep_images=bool(config.montage_sigmas))
    out = emit_all(report, config)
    print(f"wrote {len(report.cells)} cells to {out}")
    if report.errors:
        print(f"{len(report.errors)} image(s) failed; see errors.json", file=sys.stderr)
    return 0


def _cmd_montage(args) -> int:
    outputs = {}
    for algorithm in ("nlm", "ksvd", "bm3d"):
        path = getattr(args, algorithm)
        if path:
            key = "nlmeans" if algorithm == "nlm" else algorithm
            outputs[key] = load_image(path)
    emit_montage(load_image(args.clean), load_image(args.noisy), outputs, args.output)
    return 0


_COMMANDS = {
    "corrupt": _cmd_corrupt,
    "denoise": _cmd_denoise,
    "metrics": _cmd_metrics,
    "bench": _cmd_bench,
    "montage": _cmd_montage,
}


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
