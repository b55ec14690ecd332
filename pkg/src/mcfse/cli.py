"""Command line: corrupt, conceal, evaluate, pipeline."""

import argparse
import logging
import sys
from pathlib import Path

from . import error_model, evaluation
from .motion import ACCURACY
from .pipeline import ALGORITHMS, ConcealConfig, conceal_sequence
from .sequence_io import PIXEL_FORMATS, SequenceError, read_raw_video, write_raw_video
from .synthetic import translating_sequence

log = logging.getLogger("mcfse")
ACCURACY_NAMES = {v: k for k, v in ACCURACY.items()}


def _pair(text):
    parts = text.replace(" ", "").split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'x,y', got {text!r}")
    return float(parts[0]), float(parts[1])


def _fft_size(text):
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected MxNxP, got {text!r}")
    return tuple(int(p) for p in parts)


def _int_list(text):
    return [int(p) for p in text.split(",") if p.strip()]


def _add_dims(p):
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--pix-fmt", choices=PIXEL_FORMATS, default="gray8")


def _add_source(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="raw planar input video")
    src.add_argument("--synthetic", action="store_true", help="generate a translating textured clip")
    p.add_argument("--frames", type=int, default=6, help="synthetic clip length")
    p.add_argument("--motion", type=_pair, default=(0.0, 0.0), help="synthetic translation per frame, 'dx,dy'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0, help="std. dev. of seeded Gaussian noise")


def _add_pattern(p):
    p.add_argument("--pattern", type=str.upper, choices=error_model.PATTERNS, default="DISPERSED")
    p.add_argument("--error-frames", type=_int_list, default=None,
                   help="comma separated error frames (default: every frame but the first)")
    p.add_argument("--fill", type=int, default=error_model.DEFAULT_FILL)


def _add_config(p, with_algo=True):
    if with_algo:
        p.add_argument("--algo", type=str.upper, choices=ALGORITHMS, default="MCFSE")
    p.add_argument("--accuracy", choices=list(ACCURACY), default="quarter")
    p.add_argument("--border", type=int, default=16)
    p.add_argument("--np", dest="n_p", type=int, default=2, help="previous reference frames")
    p.add_argument("--nf", dest="n_f", type=int, default=0, help="future reference frames")
    p.add_argument("--rho", type=float, default=0.8)
    p.add_argument("--delta", type=float, default=0.2)
    p.add_argument("--gamma", type=float, default=None, help="default 0.7 (1.0 for FSE3D)")
    p.add_argument("--iterations", type=int, default=None, help="default 800 (200 for FSE3D)")
    p.add_argument("--dmax", type=int, default=16)
    p.add_argument("--decision-border", type=int, default=4)
    p.add_argument("--t-abs", type=float, default=10.0)
    p.add_argument("--t-rel", type=float, default=3.0)
    p.add_argument("--fft-size", type=_fft_size, default=(64, 64, 16), help="MxNxP")
    p.add_argument("--block-size", type=int, default=16)
    p.add_argument("--ebma-ring", type=int, default=1)
    p.add_argument("--chroma", action="store_true", help="conceal chroma planes too")
    p.add_argument("--timing", action="store_true", help="include per-block timing in reports")


def config_from_args(args, algo=None, accuracy=None):
    return ConcealConfig(
        algorithm=algo or args.algo,
        accuracy=ACCURACY[accuracy or args.accuracy],
        border=args.border, n_p=args.n_p, n_f=args.n_f, rho_hat=args.rho, delta=args.delta,
        gamma=args.gamma, iterations=args.iterations, d_max=args.dmax, decision_border=args.decision_border,
        T_abs=args.t_abs, T_rel=args.t_rel, fft_size=args.fft_size, block_size=args.block_size,
        ebma_ring=args.ebma_ring, chroma=args.chroma,
    )


def _load_source(args):
    if args.synthetic:
        return translating_sequence(args.width, args.height, args.frames, args.motion, args.seed,
                                    args.noise, chroma=args.pix_fmt == "yuv420p")
    return read_raw_video(args.input, args.width, args.height, args.pix_fmt)


def run_corrupt(args):
    seq = _load_source(args)
    frames = args.error_frames
    if frames is None:
        frames = list(range(1, seq.frame_count))
    bad = [t for t in frames if not 0 <= t < seq.frame_count]
    if bad:
        raise SequenceError(f"error frames {bad} outside 0..{seq.frame_count - 1}")
    mask = error_model.generate_pattern(args.pattern, (seq.width, seq.height), frames,
                                        frame_count=seq.frame_count)
    if getattr(args, "original_out", None):
        write_raw_video(seq, args.original_out)
    write_raw_video(error_model.apply_loss(seq, mask, args.fill), args.output)
    error_model.write_mask(mask, args.mask_out)
    log.info("corrupted %d frames, %d lost samples", len(frames), int((~mask.valid).sum()))
    return 0


def run_conceal(args):
    cfg = config_from_args(args)
    seq = read_raw_video(args.input, args.width, args.height, args.pix_fmt)
    mask = error_model.read_mask(args.mask, args.width, args.height)
    out, report = conceal_sequence(seq, mask, cfg)
    write_raw_video(out, args.output)
    if args.report:
        evaluation.emit_report(report, None, args.report, include_timing=args.timing)
    for path, count in sorted(report.path_counts().items()):
        log.info("%s: %d blocks", path, count)
    if "fill" in report.path_counts():
        log.warning("%d blocks could not be concealed and keep the fill value", report.path_counts()["fill"])
    return 0


def _evaluate(args):
    ref = read_raw_video(args.reference, args.width, args.height, args.pix_fmt)
    test = read_raw_video(args.test, args.width, args.height, args.pix_fmt)
    region = None
    if args.mask and not args.full_frame:
        region = error_model.read_mask(args.mask, args.width, args.height)
        if region.valid.all():
            return None
    return evaluation.psnr_region(ref, test, region)


def run_evaluate(args):
    psnr = _evaluate(args)
    if args.report:
        evaluation.emit_report(None, psnr, args.report)
    if psnr is None:
        print("psnr: empty evaluation region")
    else:
        print(f"psnr: {psnr.aggregate:.4f} dB over {psnr.samples} samples")
    return 0


def parse_algos(text, default_accuracy):
    """``"tr,dmve:half,mcfse"`` -> ``[("TR", "quarter"), ("DMVE", "half"), ...]``."""
    out = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        name, _, acc = token.partition(":")
        name = name.upper()
        acc = acc.lower() or default_accuracy
        if name not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {name!r} in --algos")
        if acc not in ACCURACY:
            raise ValueError(f"unknown accuracy {acc!r} in --algos")
        out.append((name, acc))
    if not out:
        raise ValueError("--algos names no algorithm")
    return out


def run_pipeline(args):
    algos = parse_algos(args.algos, args.accuracy) if args.algos else [(args.algo, args.accuracy)]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reference = out_dir / "original.yuv"
    distorted = out_dir / "distorted.yuv"
    mask_path = out_dir / "mask.bin"

    corrupt = argparse.Namespace(**vars(args))
    corrupt.output, corrupt.mask_out, corrupt.original_out = str(distorted), str(mask_path), str(reference)
    run_corrupt(corrupt)

    rows = []
    for algo, acc in algos:
        tag = f"{algo.lower()}_{acc}"
        step = argparse.Namespace(**vars(args))
        step.algo, step.accuracy = algo, acc
        step.input, step.mask = str(distorted), str(mask_path)
        step.output, step.report = str(out_dir / f"concealed_{tag}.yuv"), str(out_dir / f"conceal_{tag}.txt")
        run_conceal(step)
        step.reference, step.test = str(reference), step.output
        step.report, step.full_frame = str(out_dir / f"evaluate_{tag}.txt"), False
        psnr = _evaluate(step)
        evaluation.emit_report(None, psnr, step.report)
        rows.append((tag, psnr))
    evaluation.emit_report(None, None, out_dir / "comparison.txt", comparison=rows)
    width = max(len(t) for t, _ in rows)
    print(f"{'algorithm':<{width}}  psnr [dB]")
    for tag, psnr in rows:
        value = "n/a" if psnr is None else f"{psnr.aggregate:.2f}"
        print(f"{tag:<{width}}  {value}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="mcfse", description="Video error concealment by frequency selective extrapolation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("corrupt", help="imprint a loss pattern")
    _add_dims(p)
    _add_source(p)
    _add_pattern(p)
    p.add_argument("--output", required=True, help="distorted video")
    p.add_argument("--mask-out", required=True)
    p.add_argument("--original-out", help="also write the clean source (useful with --synthetic)")
    p.set_defaults(func=run_corrupt)

    p = sub.add_parser("conceal", help="conceal lost blocks")
    _add_dims(p)
    p.add_argument("--input", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--report")
    _add_config(p)
    p.set_defaults(func=run_conceal)

    p = sub.add_parser("evaluate", help="PSNR over the lost region")
    _add_dims(p)
    p.add_argument("--reference", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--mask", help="evaluate only samples marked lost here")
    p.add_argument("--full-frame", action="store_true", help="ignore --mask and use whole frames")
    p.add_argument("--report")
    p.set_defaults(func=run_evaluate)

    p = sub.add_parser("pipeline", help="corrupt, conceal and evaluate in one go")
    _add_dims(p)
    _add_source(p)
    _add_pattern(p)
    _add_config(p)
    p.add_argument("--algos", help="comma separated algo[:accuracy] list, e.g. tr,dmve,mcfse:full")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=run_pipeline)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"mcfse {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
