import math
import random

import numpy as np
import pytest

from scenecodec.captions import validate
from scenecodec.core import HEADER_SIZE, compression_ratio, read_ppm
from scenecodec.entropy import train_codebook, write_codebook
from scenecodec.errors import ConfigError, PipelineError
from scenecodec.harness import (
    CSV_COLUMNS,
    RunConfig,
    STAGE_ENCODER,
    generate_corpus,
    run_cmc_pipeline,
    sample_scene,
    sweep,
)
from scenecodec.metrics import write_feature_matrix, write_prob_matrix
from scenecodec.scene import SceneGraph, analyze, scene_distance


def corpus_codebook(corpus_dir):
    captions = (corpus_dir / "captions.txt").read_text().splitlines()
    return train_codebook(captions)


class TestGenerateCorpus:
    def test_deterministic_outputs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        generate_corpus(10, seed=1, outdir=a)
        generate_corpus(10, seed=1, outdir=b)
        for name in sorted(p.name for p in a.iterdir()):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_seed_changes_output(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        generate_corpus(6, seed=1, outdir=a)
        generate_corpus(6, seed=2, outdir=b)
        assert any(
            (a / f"img_{i:04d}.ppm").read_bytes() != (b / f"img_{i:04d}.ppm").read_bytes()
            for i in range(6)
        )

    def test_captions_validate_and_scenes_round_trip(self, corpus_dir):
        captions = (corpus_dir / "captions.txt").read_text().splitlines()
        assert captions and all(validate(c) for c in captions)
        for scene_path in sorted(corpus_dir.glob("img_*.scene")):
            img = read_ppm(scene_path.with_suffix(".ppm"))
            stated = SceneGraph.from_text(scene_path.read_text())
            assert analyze(img) == stated

    def test_rejects_bad_count(self, tmp_path):
        with pytest.raises(ValueError):
            generate_corpus(0, seed=0, outdir=tmp_path)


class TestSampleScene:
    def test_deterministic(self):
        assert [sample_scene(random.Random(5)) for _ in range(5)] == [
            sample_scene(random.Random(5)) for _ in range(5)
        ]

    def test_object_count_spread(self):
        rng = random.Random(11)
        sizes = {len(sample_scene(rng).objects) for _ in range(200)}
        assert sizes == {1, 2, 3, 4}


class TestPipeline:
    def test_semantic_round_trip(self, corpus_dir):
        cb = corpus_codebook(corpus_dir)
        for path in sorted(corpus_dir.glob("img_*.ppm")):
            img = read_ppm(path)
            result = run_cmc_pipeline(img, cb)
            assert scene_distance(result.source_scene, analyze(result.reconstruction)) == 0

    def test_rate_accounting_reconciles(self, corpus_dir):
        cb = corpus_codebook(corpus_dir)
        img = read_ppm(sorted(corpus_dir.glob("img_*.ppm"))[0])
        result = run_cmc_pipeline(img, cb)
        bits = result.bitstream.payload_bit_length
        assert result.rate_bytes == HEADER_SIZE + (bits + 7) // 8

    def test_two_object_scene_rate_scale(self):
        from scenecodec.captions import describe
        from scenecodec.scene import render

        rng = random.Random(21)
        cb = train_codebook([describe(sample_scene(rng)) for _ in range(2000)])
        two_obj = next(
            s for s in (sample_scene(random.Random(i)) for i in range(100))
            if len(s.objects) == 2 and 45 <= len(describe(s)) <= 55
        )
        img = render(two_obj, 256, 256)
        result = run_cmc_pipeline(img, cb)
        assert result.rate_bytes < 60
        assert compression_ratio(256, 256, result.rate_bytes) > 3000

    def test_out_of_domain_fails_at_encoder_stage(self):
        from scenecodec.core import Image

        rng = np.random.default_rng(3)
        photo = Image.from_array(rng.integers(0, 256, (256, 256, 3), dtype=np.uint8))
        cb = train_codebook([b"x"])
        with pytest.raises(PipelineError) as err:
            run_cmc_pipeline(photo, cb)
        assert err.value.stage == STAGE_ENCODER


@pytest.fixture(scope="module")
def swept(corpus_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    cb = corpus_codebook(corpus_dir)
    cb_path = out / "book.cbk"
    write_codebook(cb, cb_path)
    cfg = RunConfig(
        corpus_dir=corpus_dir,
        out_csv=out / "report.csv",
        codebook_path=cb_path,
        qualities=(10, 30, 50, 70, 90),
        figures_dir=out / "figs",
    )
    return cfg, sweep(cfg)


class TestSweep:
    def test_point_cardinality(self, swept):
        _, report = swept
        psnr_points = [p for p in report.points if p.metric_name == "psnr_db"]
        base = [p for p in psnr_points if p.codec_label.startswith("baseline_dct")]
        cmc = [p for p in psnr_points if p.codec_label == "cmc_text"]
        assert len(base) == 5 and len(cmc) == 1

    def test_row_count_and_schema(self, swept):
        cfg, report = swept
        text = report.csv_path.read_text()
        lines = text.strip().split("\n")
        assert lines[0] == ",".join(CSV_COLUMNS)
        n_images = len(list(cfg.corpus_dir.glob("img_*.ppm")))
        assert len(lines) - 1 == n_images * (len(cfg.qualities) + 1)

    def test_baseline_rate_strictly_increasing(self, swept):
        _, report = swept
        rates = [
            p.rate_bytes
            for p in report.points
            if p.metric_name == "psnr_db" and p.codec_label.startswith("baseline_dct")
        ]
        assert all(b > a for a, b in zip(rates, rates[1:]))

    def test_cmc_semantic_zero_and_rate_scale(self, swept):
        _, report = swept
        sd = next(
            p for p in report.points
            if p.metric_name == "scene_distance" and p.codec_label == "cmc_text"
        )
        assert sd.distortion == 0.0
        assert sd.rate_bytes < 80

    def test_rerun_byte_identical(self, swept, tmp_path):
        cfg, report = swept
        again = RunConfig(
            corpus_dir=cfg.corpus_dir,
            out_csv=tmp_path / "again.csv",
            codebook_path=cfg.codebook_path,
            qualities=cfg.qualities,
            figures_dir=None,
        )
        sweep(again)
        assert (tmp_path / "again.csv").read_bytes() == report.csv_path.read_bytes()

    def test_figures_written(self, swept):
        _, report = swept
        names = sorted(p.name for p in report.figure_paths)
        assert "rd_psnr_db.png" in names
        assert all(p.stat().st_size > 0 for p in report.figure_paths)

    def test_missing_codebook_is_config_error(self, corpus_dir, tmp_path):
        cfg = RunConfig(corpus_dir=corpus_dir, out_csv=tmp_path / "x.csv")
        with pytest.raises(ConfigError):
            sweep(cfg)

    def test_empty_corpus_is_config_error(self, tmp_path):
        cfg = RunConfig(
            corpus_dir=tmp_path, out_csv=tmp_path / "x.csv", codecs=("baseline_dct",)
        )
        with pytest.raises(ConfigError):
            sweep(cfg)

    def test_feature_metrics_attached(self, corpus_dir, tmp_path):
        rng = np.random.default_rng(8)
        n = len(list(corpus_dir.glob("img_*.ppm")))
        src = rng.normal(size=(n, 6))
        rec = src + 0.1 * rng.normal(size=(n, 6))
        probs = rng.random((n, 4)) + 0.1
        probs /= probs.sum(axis=1, keepdims=True)
        write_feature_matrix(tmp_path / "src.fmat", src)
        write_feature_matrix(tmp_path / "rec.fmat", rec)
        write_prob_matrix(tmp_path / "p.pmat", probs)
        cb_path = tmp_path / "book.cbk"
        write_codebook(corpus_codebook(corpus_dir), cb_path)
        cfg = RunConfig(
            corpus_dir=corpus_dir,
            out_csv=tmp_path / "r.csv",
            codebook_path=cb_path,
            codecs=("cmc_text",),
            features_src=tmp_path / "src.fmat",
            features_rec=tmp_path / "rec.fmat",
            probs=tmp_path / "p.pmat",
            figures_dir=None,
        )
        report = sweep(cfg)
        names = {p.metric_name for p in report.points if p.codec_label == "cmc_text"}
        assert {"psnr_db", "scene_distance", "is", "fid", "ipd"} <= names
        first_row = report.rows[0]
        assert first_row["ipd"] is not None

    def test_feature_shape_mismatch_is_config_error(self, corpus_dir, tmp_path):
        rng = np.random.default_rng(9)
        write_feature_matrix(tmp_path / "src.fmat", rng.normal(size=(3, 4)))
        write_feature_matrix(tmp_path / "rec.fmat", rng.normal(size=(3, 4)))
        cb_path = tmp_path / "book.cbk"
        write_codebook(corpus_codebook(corpus_dir), cb_path)
        cfg = RunConfig(
            corpus_dir=corpus_dir,
            out_csv=tmp_path / "r.csv",
            codebook_path=cb_path,
            codecs=("cmc_text",),
            features_src=tmp_path / "src.fmat",
            features_rec=tmp_path / "rec.fmat",
            figures_dir=None,
        )
        with pytest.raises(ConfigError):
            sweep(cfg)

    def test_lambda_column_echoed(self, corpus_dir, tmp_path):
        cb_path = tmp_path / "book.cbk"
        write_codebook(corpus_codebook(corpus_dir), cb_path)
        cfg = RunConfig(
            corpus_dir=corpus_dir,
            out_csv=tmp_path / "r.csv",
            codebook_path=cb_path,
            codecs=("cmc_text",),
            rd_lambda=0.25,
            figures_dir=None,
        )
        sweep(cfg)
        lines = (tmp_path / "r.csv").read_text().strip().split("\n")
        assert lines[0].endswith(",lambda")
        assert lines[1].endswith(",0.250000")
