"""Command-line interface.

Subcommands: gen-corpus, train-codebook, encode, decode, render, analyze,
parse, metrics, sweep. Exit codes: 0 success, 2 usage error, 3 data or
format error, 4 pipeline-stage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import baseline, captions, entropy, harness, metrics, scene
from .core import Codec, deserialize_bitstream, read_ppm, serialize_bitstream, write_ppm
from .errors import (
    CaptionError,
    CodecError,
    ConfigError,
    FormatError,
    PipelineError,
    SceneError,
    WrongCodebookError,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_PIPELINE = 4


def _parse_quality_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"bad quality list {text!r}") from None
    if not values or any(not 1 <= q <= 100 for q in values):
        raise ConfigError("qualities must be integers in 1..100")
    return values


def _cmd_gen_corpus(args) -> int:
    images, _, captions_path = harness.generate_corpus(args.count, args.seed, args.out)
    print(f"wrote {len(images)} images and {captions_path}")
    return EXIT_OK


def _cmd_train_codebook(args) -> int:
    text = Path(args.corpus).read_text(encoding="utf-8")
    documents = [line for line in text.splitlines() if line]
    cb = entropy.train_codebook(documents)
    entropy.write_codebook(cb, args.out)
    print(f"wrote {args.out} (codebook id {cb.codebook_id:#010x}, "
          f"{len(documents)} documents)")
    return EXIT_OK


def _cmd_encode(args) -> int:
    img = read_ppm(args.image)
    if args.codec == "cmc_text":
        if not args.codebook:
            raise ConfigError("encoding with cmc_text needs --codebook")
        cb = entropy.read_codebook(args.codebook)
        try:
            graph = scene.analyze(img)
        except SceneError as exc:
            raise PipelineError(harness.STAGE_ENCODER, exc) from exc
        caption = captions.describe(graph)
        stream = entropy.encode_text(caption, cb)
    else:
        cfg = baseline.QuantizerConfig(args.quality)
        stream = baseline.encode_image(img, cfg)
    wire = serialize_bitstream(stream)
    Path(args.out).write_bytes(wire)
    print(f"wrote {args.out} ({len(wire)} bytes, codec {args.codec})")
    return EXIT_OK


def _cmd_decode(args) -> int:
    stream = deserialize_bitstream(Path(args.stream).read_bytes())
    if stream.codec_id == Codec.CMC_TEXT:
        if not args.codebook:
            raise ConfigError("decoding a cmc_text stream needs --codebook")
        cb = entropy.read_codebook(args.codebook)
        text = entropy.decode_text(stream, cb).decode("ascii", errors="replace")
        try:
            graph = captions.parse(text)
        except CaptionError as exc:
            raise PipelineError(harness.STAGE_DECODER, exc) from exc
        img = scene.render(graph, args.width, args.height)
    else:
        img = baseline.decode_image(stream)
    write_ppm(img, args.out)
    print(f"wrote {args.out} ({img.width}x{img.height})")
    return EXIT_OK


def _cmd_render(args) -> int:
    graph = scene.SceneGraph.from_text(Path(args.scene).read_text(encoding="utf-8"))
    write_ppm(scene.render(graph, args.width, args.height), args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    graph = scene.analyze(read_ppm(args.image))
    text = graph.to_text()
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="ascii")
    else:
        print(text)
    return EXIT_OK


def _cmd_parse(args) -> int:
    caption = sys.stdin.read().strip() if args.caption == "-" else args.caption
    graph = captions.parse(caption)
    text = graph.to_text()
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="ascii")
    else:
        print(text)
    return EXIT_OK


def _cmd_metrics(args) -> int:
    printed = False
    if args.src or args.rec:
        if not (args.src and args.rec):
            raise ConfigError("PSNR needs both --src and --rec")
        value = metrics.psnr(read_ppm(args.src), read_ppm(args.rec))
        print(f"psnr_db={value:.6f}")
        printed = True
    feat_src = feat_rec = None
    if args.features_src or args.features_rec:
        if not (args.features_src and args.features_rec):
            raise ConfigError("feature metrics need both --features-src and --features-rec")
        feat_src = metrics.read_feature_matrix(args.features_src)
        feat_rec = metrics.read_feature_matrix(args.features_rec)
        fid_value = metrics.fid(
            metrics.gaussian_stats(feat_src), metrics.gaussian_stats(feat_rec)
        )
        print(f"fid={fid_value:.6f}")
        print(f"ipd={metrics.ipd(feat_src, feat_rec):.6f}")
        printed = True
    if args.probs:
        probs = metrics.read_prob_matrix(args.probs)
        print(f"is={metrics.inception_score(probs, args.splits):.6f}")
        printed = True
    if args.words or args.regions:
        if not (args.words and args.regions):
            raise ConfigError("the matching score needs both --words and --regions")
        cfg = metrics.MatchingConfig(gamma1=args.gamma1, gamma2=args.gamma2)
        words = metrics.read_feature_matrix(args.words).T
        regions = metrics.read_feature_matrix(args.regions).T
        print(f"matching_score={metrics.matching_score(words, regions, cfg):.6f}")
        printed = True
    if not printed:
        raise ConfigError("no metric inputs given; see scenecodec metrics --help")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    codecs = ("cmc_text", "baseline_dct") if args.codec == "both" else (args.codec,)
    figures_dir = None
    if not args.no_figures:
        figures_dir = Path(args.figures) if args.figures else Path(args.out).parent
    cfg = harness.RunConfig(
        corpus_dir=Path(args.corpus),
        out_csv=Path(args.out),
        codebook_path=Path(args.codebook) if args.codebook else None,
        codecs=codecs,
        qualities=_parse_quality_list(args.quality),
        features_src=Path(args.features_src) if args.features_src else None,
        features_rec=Path(args.features_rec) if args.features_rec else None,
        probs=Path(args.probs) if args.probs else None,
        splits=args.splits,
        figures_dir=figures_dir,
        rd_lambda=args.rd_lambda,
        seed=args.seed,
    )
    report = harness.sweep(cfg)
    print(harness.format_summary(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scenecodec",
        description="Caption-domain scene codec, block-DCT baseline, and "
        "rate-distortion tooling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="generate a rendered scene corpus")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_gen_corpus)

    p = sub.add_parser("train-codebook", help="train a text codebook from captions")
    p.add_argument("--corpus", required=True, help="text file, one caption per line")
    p.add_argument("--out", required=True, help="codebook file to write")
    p.set_defaults(func=_cmd_train_codebook)

    p = sub.add_parser("encode", help="compress a PPM image to a bitstream")
    p.add_argument("image")
    p.add_argument("--codec", choices=("cmc_text", "baseline_dct"), default="cmc_text")
    p.add_argument("--codebook", help="text codebook (cmc_text only)")
    p.add_argument("--quality", type=int, default=50, help="baseline quality 1..100")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("decode", help="decompress a bitstream to a PPM image")
    p.add_argument("stream")
    p.add_argument("--codebook", help="text codebook (cmc_text streams)")
    p.add_argument("--width", type=int, default=256, help="render width for text streams")
    p.add_argument("--height", type=int, default=256, help="render height for text streams")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("render", help="render a scene text file to a PPM image")
    p.add_argument("scene")
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("analyze", help="detect the scene graph in a PPM image")
    p.add_argument("image")
    p.add_argument("--out", help="write scene text here instead of stdout")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("parse", help="parse a caption into a scene graph")
    p.add_argument("caption", help="caption text, or - to read stdin")
    p.add_argument("--out", help="write scene text here instead of stdout")
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("metrics", help="compute metrics from images and feature files")
    p.add_argument("--src", help="source PPM (PSNR)")
    p.add_argument("--rec", help="reconstruction PPM (PSNR)")
    p.add_argument("--features-src", help="source FMAT file (FID, IPD)")
    p.add_argument("--features-rec", help="reconstruction FMAT file (FID, IPD)")
    p.add_argument("--probs", help="PMAT file of label distributions (IS)")
    p.add_argument("--splits", type=int, default=1, help="IS split count")
    p.add_argument("--words", help="word-feature FMAT, rows are words (matching score)")
    p.add_argument("--regions", help="region-feature FMAT, rows are regions")
    p.add_argument("--gamma1", type=float, default=5.0)
    p.add_argument("--gamma2", type=float, default=5.0)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("sweep", help="rate-distortion sweep over a corpus")
    p.add_argument("--corpus", required=True, help="corpus directory of img_*.ppm")
    p.add_argument("--out", required=True, help="CSV report path")
    p.add_argument("--codec", choices=("both", "cmc_text", "baseline_dct"), default="both")
    p.add_argument("--codebook", help="text codebook (needed for cmc_text)")
    p.add_argument(
        "--quality",
        default=",".join(str(q) for q in baseline.DEFAULT_QUALITIES),
        help="comma-separated baseline quality list",
    )
    p.add_argument("--features-src", help="source FMAT file")
    p.add_argument("--features-rec", help="reconstruction FMAT file")
    p.add_argument("--probs", help="PMAT file for IS")
    p.add_argument("--splits", type=int, default=1)
    p.add_argument("--figures", help="directory for R-D figures (default: CSV directory)")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.add_argument("--rd-lambda", type=float, default=None,
                   help="echo this lambda as an extra CSV column")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PipelineError as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    except (FormatError, WrongCodebookError, SceneError, CaptionError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
