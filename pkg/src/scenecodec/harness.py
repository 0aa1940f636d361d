"""Orchestration: corpus generation, the full text-codec pipeline, and
rate-distortion sweeps over both codecs with CSV and figure output.

The CSV schema is stable:

    codec,quality,image_id,rate_bytes,bpp,psnr_db,scene_distance,is,fid,ipd

with empty fields where a metric is unavailable. Rows are sorted by
image id, then codec, then quality, and all numbers are formatted with
fixed precision, so identical inputs give byte-identical files. When a
rate-distortion lambda is supplied it is echoed in one extra trailing
column; no scalarization is computed.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baseline, captions, entropy, metrics, scene
from .core import (
    Bitstream,
    Image,
    RDPoint,
    deserialize_bitstream,
    read_ppm,
    serialize_bitstream,
    write_ppm,
)
from .errors import CaptionError, CodecError, ConfigError, PipelineError, SceneError

CORPUS_RENDER_SIZE = 256
CAPTIONS_FILENAME = "captions.txt"

CSV_COLUMNS = (
    "codec",
    "quality",
    "image_id",
    "rate_bytes",
    "bpp",
    "psnr_db",
    "scene_distance",
    "is",
    "fid",
    "ipd",
)

STAGE_ENCODER = "cmc-encoder"
STAGE_ENTROPY_ENCODER = "entropy-encoder"
STAGE_ENTROPY_DECODER = "entropy-decoder"
STAGE_DECODER = "cmc-decoder"


@dataclass(frozen=True)
class RunConfig:
    corpus_dir: Path
    out_csv: Path
    codebook_path: Path | None = None
    codecs: tuple[str, ...] = ("cmc_text", "baseline_dct")
    qualities: tuple[int, ...] = baseline.DEFAULT_QUALITIES
    features_src: Path | None = None
    features_rec: Path | None = None
    probs: Path | None = None
    splits: int = 1
    figures_dir: Path | None = None
    rd_lambda: float | None = None
    seed: int = 0


@dataclass
class RDReport:
    points: list[RDPoint]
    rows: list[dict]
    csv_path: Path
    figure_paths: list[Path] = field(default_factory=list)


def sample_scene(rng: random.Random) -> scene.SceneGraph:
    """Random scene from the caption-invertible subdomain.

    Walks the same placement rule the parser uses: first object on the
    anchor cell, each next object on the nearest free cell downward or
    rightward from the previous one. Captions of such scenes parse back
    to the identical scene graph.
    """
    shapes, colors, sizes = list(scene.Shape), list(scene.Color), list(scene.Size)
    while True:
        k = rng.randint(1, scene.GRID)
        cells = [captions.DEFAULT_ANCHOR]
        occupied = {captions.DEFAULT_ANCHOR}
        while len(cells) < k:
            pc, pr = cells[-1]
            directions = [(0, 1), (1, 0)]  # down ("above"), right ("left of")
            rng.shuffle(directions)
            placed = None
            for dc, dr in directions:
                c, r = pc + dc, pr + dr
                while 0 <= c < scene.GRID and 0 <= r < scene.GRID:
                    if (c, r) not in occupied:
                        placed = (c, r)
                        break
                    c += dc
                    r += dr
                if placed:
                    break
            if placed is None:
                break  # dead end; resample the whole scene
            cells.append(placed)
            occupied.add(placed)
        if len(cells) < k:
            continue
        return scene.SceneGraph(
            tuple(
                scene.SceneObject(
                    shape=rng.choice(shapes),
                    color=rng.choice(colors),
                    size=rng.choice(sizes),
                    cell=cell,
                )
                for cell in cells
            )
        )


def generate_corpus(n: int, seed: int, outdir) -> tuple[list[Path], list[Path], Path]:
    """Writes ``n`` rendered scenes with their scene and caption files.

    Returns (image paths, scene paths, captions corpus path). Output is
    a pure function of (n, seed).
    """
    if n < 1:
        raise ValueError("corpus size must be at least 1")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    image_paths, scene_paths, caption_lines = [], [], []
    for i in range(n):
        graph = sample_scene(rng)
        img = scene.render(graph, CORPUS_RENDER_SIZE, CORPUS_RENDER_SIZE)
        caption = captions.describe(graph)
        image_path = outdir / f"img_{i:04d}.ppm"
        scene_path = outdir / f"img_{i:04d}.scene"
        write_ppm(img, image_path)
        scene_path.write_text(graph.to_text() + "\n", encoding="ascii")
        (outdir / f"img_{i:04d}.caption").write_text(caption + "\n", encoding="ascii")
        image_paths.append(image_path)
        scene_paths.append(scene_path)
        caption_lines.append(caption)
    captions_path = outdir / CAPTIONS_FILENAME
    captions_path.write_text("\n".join(caption_lines) + "\n", encoding="ascii")
    return image_paths, scene_paths, captions_path


@dataclass(frozen=True)
class PipelineResult:
    bitstream: Bitstream
    reconstruction: Image
    caption: str
    rate_bytes: int
    source_scene: scene.SceneGraph


def run_cmc_pipeline(img: Image, cb: entropy.Codebook) -> PipelineResult:
    """Full text-codec round trip for one image.

    analyze -> describe -> entropy encode -> serialize -> deserialize ->
    entropy decode -> parse -> render. Stage failures are wrapped in
    PipelineError with the stage label.
    """
    try:
        graph = scene.analyze(img)
        caption = captions.describe(graph)
    except SceneError as exc:
        raise PipelineError(STAGE_ENCODER, exc) from exc
    try:
        stream = entropy.encode_text(caption, cb)
        wire = serialize_bitstream(stream)
    except CodecError as exc:
        raise PipelineError(STAGE_ENTROPY_ENCODER, exc) from exc
    try:
        decoded = entropy.decode_text(deserialize_bitstream(wire), cb)
    except CodecError as exc:
        raise PipelineError(STAGE_ENTROPY_DECODER, exc) from exc
    try:
        recon = scene.render(
            captions.parse(decoded.decode("ascii", errors="replace")),
            img.width,
            img.height,
        )
    except (CaptionError, ValueError) as exc:
        raise PipelineError(STAGE_DECODER, exc) from exc
    return PipelineResult(
        bitstream=stream,
        reconstruction=recon,
        caption=caption,
        rate_bytes=len(wire),
        source_scene=graph,
    )


def _fmt(value, fmt_spec: str) -> str:
    if value is None:
        return ""
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return format(value, fmt_spec)


def _row_to_csv(row: dict, rd_lambda: float | None) -> str:
    fields = [
        row["codec"],
        "" if row["quality"] is None else str(row["quality"]),
        row["image_id"],
        str(row["rate_bytes"]),
        _fmt(row["bpp"], ".6f"),
        _fmt(row["psnr_db"], ".4f"),
        "" if row["scene_distance"] is None else str(row["scene_distance"]),
        _fmt(row["is"], ".6f"),
        _fmt(row["fid"], ".6f"),
        _fmt(row["ipd"], ".6f"),
    ]
    if rd_lambda is not None:
        fields.append(_fmt(rd_lambda, ".6f"))
    return ",".join(fields)


def _load_corpus(corpus_dir: Path) -> list[tuple[str, Image]]:
    paths = sorted(Path(corpus_dir).glob("img_*.ppm"))
    if not paths:
        raise ConfigError(f"no img_*.ppm files found in {corpus_dir}")
    return [(p.stem, read_ppm(p)) for p in paths]


def _mean(values) -> float | None:
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def sweep(cfg: RunConfig) -> RDReport:
    """Runs the configured codecs over the corpus and writes the report.

    The baseline codec is swept over the quality list; the text codec is
    one operating point. PSNR and scene distance come from the images;
    IS, FID, and IPD are attached to the text codec's point when feature
    and probability files are supplied.
    """
    corpus = _load_corpus(cfg.corpus_dir)
    rows: list[dict] = []
    want_cmc = "cmc_text" in cfg.codecs
    want_baseline = "baseline_dct" in cfg.codecs
    if not (want_cmc or want_baseline):
        raise ConfigError("codec selection is empty")

    feat_src = feat_rec = probs = None
    if cfg.features_src or cfg.features_rec:
        if not (cfg.features_src and cfg.features_rec):
            raise ConfigError("feature metrics need both --features-src and --features-rec")
        feat_src = metrics.read_feature_matrix(cfg.features_src)
        feat_rec = metrics.read_feature_matrix(cfg.features_rec)
        if feat_src.shape != feat_rec.shape:
            raise ConfigError("source and reconstruction features must share shape")
        if feat_src.shape[0] != len(corpus):
            raise ConfigError(
                f"feature files hold {feat_src.shape[0]} rows for {len(corpus)} images"
            )
    if cfg.probs:
        probs = metrics.read_prob_matrix(cfg.probs)
        if probs.shape[0] != len(corpus):
            raise ConfigError(
                f"probability file holds {probs.shape[0]} rows for {len(corpus)} images"
            )

    cmc_codebook = None
    if want_cmc:
        if cfg.codebook_path is None:
            raise ConfigError("the text codec needs --codebook")
        cmc_codebook = entropy.read_codebook(cfg.codebook_path)

    if want_cmc:
        per_ipd = None
        if feat_src is not None:
            diffs = feat_rec - feat_src
            per_ipd = np.sum(diffs * diffs, axis=1)
        for idx, (image_id, img) in enumerate(corpus):
            result = run_cmc_pipeline(img, cmc_codebook)
            recon_scene = scene.analyze(result.reconstruction)
            rows.append(
                {
                    "codec": "cmc_text",
                    "quality": None,
                    "image_id": image_id,
                    "rate_bytes": result.rate_bytes,
                    "bpp": 8.0 * result.rate_bytes / (img.width * img.height),
                    "psnr_db": metrics.psnr(img, result.reconstruction),
                    "scene_distance": scene.scene_distance(
                        result.source_scene, recon_scene
                    ),
                    "is": None,
                    "fid": None,
                    "ipd": None if per_ipd is None else float(per_ipd[idx]),
                }
            )

    if want_baseline:
        token_cb = baseline.default_token_codebook()
        for image_id, img in corpus:
            try:
                src_scene = scene.analyze(img)
            except SceneError:
                src_scene = None
            for q in cfg.qualities:
                qcfg = baseline.QuantizerConfig(q)
                stream = baseline.encode_image(img, qcfg, token_cb)
                wire = serialize_bitstream(stream)
                recon = baseline.decode_image(stream, qcfg, token_cb)
                distance = None
                if src_scene is not None:
                    try:
                        distance = scene.scene_distance(src_scene, scene.analyze(recon))
                    except SceneError:
                        distance = None
                rows.append(
                    {
                        "codec": "baseline_dct",
                        "quality": q,
                        "image_id": image_id,
                        "rate_bytes": len(wire),
                        "bpp": 8.0 * len(wire) / (img.width * img.height),
                        "psnr_db": metrics.psnr(img, recon),
                        "scene_distance": distance,
                        "is": None,
                        "fid": None,
                        "ipd": None,
                    }
                )

    rows.sort(key=lambda r: (r["image_id"], r["codec"], r["quality"] or 0))

    points: list[RDPoint] = []
    if want_baseline:
        for q in cfg.qualities:
            qrows = [r for r in rows if r["codec"] == "baseline_dct" and r["quality"] == q]
            rate = _mean([r["rate_bytes"] for r in qrows])
            label = f"baseline_dct@q{q}"
            points.append(RDPoint(rate, _mean([r["psnr_db"] for r in qrows]), "psnr_db", label))
            dist = _mean([r["scene_distance"] for r in qrows])
            if dist is not None:
                points.append(RDPoint(rate, dist, "scene_distance", label))
    if want_cmc:
        crows = [r for r in rows if r["codec"] == "cmc_text"]
        rate = _mean([r["rate_bytes"] for r in crows])
        points.append(RDPoint(rate, _mean([r["psnr_db"] for r in crows]), "psnr_db", "cmc_text"))
        points.append(
            RDPoint(rate, _mean([r["scene_distance"] for r in crows]), "scene_distance", "cmc_text")
        )
        if probs is not None:
            points.append(
                RDPoint(rate, metrics.inception_score(probs, cfg.splits), "is", "cmc_text")
            )
        if feat_src is not None:
            points.append(
                RDPoint(
                    rate,
                    metrics.fid(metrics.gaussian_stats(feat_src), metrics.gaussian_stats(feat_rec)),
                    "fid",
                    "cmc_text",
                )
            )
            points.append(RDPoint(rate, metrics.ipd(feat_src, feat_rec), "ipd", "cmc_text"))

    header = ",".join(CSV_COLUMNS) + ("" if cfg.rd_lambda is None else ",lambda")
    lines = [header] + [_row_to_csv(r, cfg.rd_lambda) for r in rows]
    out_csv = Path(cfg.out_csv)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    out_csv.write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")

    report = RDReport(points=points, rows=rows, csv_path=out_csv)
    if cfg.figures_dir is not None:
        from . import figures

        report.figure_paths = figures.render_rd_figures(report, cfg.figures_dir)
    return report


def format_summary(report: RDReport) -> str:
    lines = [f"wrote {report.csv_path} ({len(report.rows)} rows)"]
    for p in report.points:
        lines.append(
            f"{p.codec_label:>18s}  rate={p.rate_bytes:10.2f} B  "
            f"{p.metric_name}={p.distortion:.4f}"
        )
    for path in report.figure_paths:
        lines.append(f"wrote {path}")
    return "\n".join(lines)
