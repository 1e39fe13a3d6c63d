"""Command-line front end: ``acseg {detect,segment,synth,compare}``.

Exit codes are 0 on success (a non-converged segmentation still counts),
1 on I/O problems and 2 on bad arguments. A ``--config`` file holds
``key = value`` lines named after the long flags; flags given on the
command line take precedence.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import baseline_edge, metrics, segmentation
from .etd_solver import RunDiagnostics
from .image_core import (ImageFormatError, ShapeSpec, add_gaussian_noise, default_threads,
                         load_image, load_mask, save_image, save_mask, synth_two_phase)
from .nonlocal_edge import ConvergenceError, KernelSpec, detect_edges

log = logging.getLogger("acseg")

EXIT_OK, EXIT_IO, EXIT_ARGS = 0, 1, 2


class ArgumentError(Exception):
    pass


def _size(text: str):
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like WIDTHxHEIGHT, got {text!r}")
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError("size must be positive")
    return w, h


def _optional_float(text: str):
    return None if text.lower() in ("none", "auto", "") else float(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="acseg", allow_abbrev=False,
                                     description="Phase-field segmentation and edge detection")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value file; command-line flags win")
        p.add_argument("--threads", type=int, default=default_threads(),
                       help="worker threads (default from ACSEG_THREADS)")
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("detect", allow_abbrev=False, help="write an edge map")
    p.add_argument("input")
    p.add_argument("--method", default="nonlocal",
                   choices=["nonlocal", *baseline_edge.OPERATORS])
    p.add_argument("--delta", type=int, default=4)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--quad-level", type=int, default=3)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--low", type=float, default=0.1)
    p.add_argument("--high", type=float, default=0.3)
    p.add_argument("--varsigma", type=float, default=1.0)
    p.add_argument("--zero-tol", type=float, default=1e-3)
    p.add_argument("--channel", type=int)
    p.add_argument("--out", required=True)
    common(p)

    p = sub.add_parser("segment", allow_abbrev=False, help="run the two-stage segmentation")
    p.add_argument("input")
    p.add_argument("--scheme", default="etd1", choices=["etd1", "etdrk2"])
    p.add_argument("--init", default="nonlocal", choices=["nonlocal", "threshold", "mask"])
    p.add_argument("--lambda1", type=float, default=1.0)
    p.add_argument("--lambda2", type=float, default=1.0)
    p.add_argument("--eps1-stage", "--stage1-eps", dest="eps1_stage", type=float, default=5.0,
                   help="diffusion parameter of Stage 1")
    p.add_argument("--eps-stage2", type=float, default=0.1)
    p.add_argument("--eps1", type=float, default=0.5, help="regularization width")
    p.add_argument("--delta", type=int, default=5)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--i0", type=float, default=0.5)
    p.add_argument("--mask", help="initial mask for --init mask")
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--steady-tol", type=float, default=1e-6)
    p.add_argument("--max-steps", type=int, default=10_000)
    p.add_argument("--outer-tol", type=float, default=1e-4)
    p.add_argument("--max-outer", type=int, default=50)
    p.add_argument("--outer-criterion", default="field", choices=["field", "mask"])
    p.add_argument("--stabilizer", type=_optional_float, default=None,
                   help="S (default: the maximum-bound value for each stage)")
    p.add_argument("--channel", type=int)
    p.add_argument("--out-prefix", required=True)
    common(p)

    p = sub.add_parser("synth", allow_abbrev=False, help="make a noisy two-phase test image")
    p.add_argument("--shape", default="disk", choices=["disk", "rectangle", "multi-blob"])
    p.add_argument("--size", type=_size, default=(128, 128))
    p.add_argument("--radius", type=float, help="disk radius (default: a quarter of the short side)")
    p.add_argument("--noise-std", type=float, default=0.2)
    p.add_argument("--noise-mean", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--out-truth")
    common(p)

    p = sub.add_parser("compare", allow_abbrev=False, help="score masks against a truth mask")
    p.add_argument("truth")
    p.add_argument("candidates", nargs="+")
    p.add_argument("--out", help="CSV path (default: stdout)")
    common(p)
    return parser


# -- configuration ----------------------------------------------------------

def read_config(path) -> list[str]:
    """Turn ``key = value`` lines into ``--key value`` tokens."""
    tokens = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ArgumentError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                tokens.append(flag)
            continue
        tokens += [flag, value]
    return tokens


def parse_args(argv):
    parser = build_parser()
    argv = list(argv)
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config and argv and not argv[0].startswith("-"):
        try:
            extra = read_config(known.config)
        except FileNotFoundError:
            raise
        if "--config" in extra:
            raise ArgumentError("config files cannot nest --config")
        # earlier occurrences lose to later ones, so file values go first
        argv = [argv[0], *extra, *argv[1:]]
    return parser.parse_args(argv)


def resolved(args) -> str:
    items = sorted((k, v) for k, v in vars(args).items())
    return "\n".join(f"{k} = {v}" for k, v in items)


# -- commands ---------------------------------------------------------------

def cmd_detect(args) -> int:
    img = load_image(args.input, args.channel)
    t0 = time.perf_counter()
    if args.method == "nonlocal":
        mask = detect_edges(img, KernelSpec(args.delta, args.alpha), args.sigma, args.quad_level)
    else:
        spec = baseline_edge.BaselineSpec(args.method, threshold=args.threshold, low=args.low,
                                          high=args.high, varsigma=args.varsigma,
                                          zero_tol=args.zero_tol)
        mask = baseline_edge.detect(img, spec)
    elapsed = time.perf_counter() - t0
    save_mask(mask, args.out)
    print(f"edge_pixels = {int(mask.sum())}\ntotal_pixels = {mask.size}\nseconds = {elapsed:.4f}")
    return EXIT_OK


def _seg_config(args) -> segmentation.SegConfig:
    return segmentation.SegConfig(
        stage1_epsilon=args.eps1_stage, stage2_epsilon=args.eps_stage2, epsilon1=args.eps1,
        lambda1=args.lambda1, lambda2=args.lambda2, init=args.init,
        kernel=KernelSpec(args.delta, args.alpha), sigma=args.sigma, i0=args.i0,
        mask_path=args.mask, scheme=args.scheme, dt=args.dt, steady_tol=args.steady_tol,
        max_steps=args.max_steps, outer_tol=args.outer_tol, max_outer=args.max_outer,
        outer_criterion=args.outer_criterion, stabilizer=args.stabilizer,
        workers=args.threads)


def write_diagnostics(result, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("loop",) + RunDiagnostics.COLUMNS)
        for loop, diag in enumerate(result.diagnostics):
            for row in diag.rows():
                w.writerow([loop, row[0]] + [repr(float(v)) for v in row[1:]])


def write_summary(result, path) -> None:
    s = result.summary()
    lines = [
        f"converged={'true' if s['converged'] else 'false'}",
        f"m={s['m']}",
        "k=" + ",".join(str(k) for k in result.inner_steps),
        "epsilons=" + ",".join(f"{e:g}" for e in result.epsilons),
        f"C1={s['C1']!r}",
        f"C2={s['C2']!r}",
        f"min={s['min']!r}",
        f"1-max={s['1-max']!r}",
        f"cpu_seconds={s['cpu_seconds']:.4f}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_segment(args) -> int:
    if args.init == "mask" and not args.mask:
        raise ArgumentError("--init mask requires --mask")
    config = _seg_config(args)
    img = load_image(args.input, args.channel)
    mask = load_mask(args.mask) if args.init == "mask" else None
    result = segmentation.segment(img, config, mask)
    prefix = args.out_prefix
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    save_mask(result.mask, f"{prefix}_mask.pgm")
    save_image(segmentation.contour_overlay(img, result.contour), f"{prefix}_overlay.png")
    write_diagnostics(result, f"{prefix}_diagnostics.csv")
    write_summary(result, f"{prefix}_summary.txt")
    print(Path(f"{prefix}_summary.txt").read_text(), end="")
    return EXIT_OK


def _synth_shape(kind, width, height, radius):
    short = min(width, height)
    if kind == "disk":
        return ShapeSpec.disk(radius if radius is not None else short / 4)
    if kind == "rectangle":
        return ShapeSpec.rectangle(height // 4, width // 4, height - height // 4, width - width // 4)
    r = radius if radius is not None else short / 8
    return ShapeSpec.multi_blob([(height * 0.3, width * 0.3, r), (height * 0.7, width * 0.65, r),
                                 (height * 0.3, width * 0.72, r * 0.6)])


def cmd_synth(args) -> int:
    width, height = args.size
    img, truth = synth_two_phase(width, height, _synth_shape(args.shape, width, height, args.radius))
    noisy = add_gaussian_noise(img, args.noise_mean, args.noise_std, args.seed)
    save_image(noisy, args.out)
    if args.out_truth:
        save_mask(truth, args.out_truth)
    print(f"foreground_pixels = {int(truth.sum())}")
    return EXIT_OK


def _cpu_seconds_for(candidate: Path) -> float:
    """Pick up timing from a sibling ``<prefix>_summary.txt`` when present."""
    if not candidate.stem.endswith("_mask"):
        return math.nan
    summary = candidate.with_name(candidate.stem[:-5] + "_summary.txt")
    if not summary.is_file():
        return math.nan
    for line in summary.read_text().splitlines():
        if line.startswith("cpu_seconds="):
            return float(line.split("=", 1)[1])
    return math.nan


def cmd_compare(args) -> int:
    truth = load_mask(args.truth)
    rows = []
    for cand in args.candidates:
        m = load_mask(cand)
        if m.shape != truth.shape:
            raise OSError(f"{cand}: shape {m.shape} differs from truth {truth.shape}")
        r = metrics.report(truth, m)
        rows.append([Path(cand).stem, r.fpr, r.fnr, r.rse, r.err, _cpu_seconds_for(Path(cand))])
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["method", "fpr", "fnr", "rse", "err", "cpu_seconds"])
        for row in rows:
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


COMMANDS = {"detect": cmd_detect, "segment": cmd_segment, "synth": cmd_synth,
            "compare": cmd_compare}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
    except SystemExit as exc:       # argparse usage errors
        return EXIT_ARGS if exc.code else EXIT_OK
    except ArgumentError as exc:
        print(f"acseg: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except OSError as exc:
        print(f"acseg: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("acseg: error: --threads must be positive", file=sys.stderr)
        return EXIT_ARGS
    print("# resolved configuration")
    print(resolved(args))
    try:
        return COMMANDS[args.command](args)
    except (ArgumentError, ConvergenceError) as exc:
        print(f"acseg: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except (OSError, ImageFormatError) as exc:
        print(f"acseg: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"acseg: error: {exc}", file=sys.stderr)
        return EXIT_ARGS


if __name__ == "__main__":
    sys.exit(main())
