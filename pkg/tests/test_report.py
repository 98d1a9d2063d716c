"""Batch pipeline: discovery, skip-and-report, and output stability."""
from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from floss import gbt
from floss.errors import FileUnreadable
from floss.report import (
    PipelineConfig,
    discover_nights,
    parse_config_file,
    run_pipeline,
)
from floss.signal_io import write_edf
from floss.synth import gen_night
from floss.epoching import write_annotations

N_EPOCHS = 36  # 360 s per night, 12 sleep epochs at 30 s


def _write_night(out: Path, stem: str, subject: int, seed: int = 3) -> None:
    rec, spans, sleep_scores, states = gen_night(
        subject_index=subject, n_epochs=N_EPOCHS, seed=seed
    )
    write_edf(rec, out / f"{stem}.edf")
    write_annotations(spans, out / f"{stem}_labels.csv")
    (out / f"{stem}_sleep.txt").write_text("\n".join(str(v) for v in sleep_scores) + "\n")


@pytest.fixture(scope="module")
def models(tiny_model, tiny_mobility_model, tmp_path_factory):
    root = tmp_path_factory.mktemp("models")
    gbt.save_model(tiny_model, root / "usability.json")
    gbt.save_model(tiny_mobility_model, root / "mobility.json")
    return root / "usability.json", root / "mobility.json"


@pytest.fixture(scope="module")
def night_dir(tmp_path_factory):
    """Two good nights plus one with a truncated payload."""
    root = tmp_path_factory.mktemp("nights")
    _write_night(root, "s00", subject=0)
    _write_night(root, "s01", subject=1)
    _write_night(root, "s02", subject=2)
    bad = root / "s02.edf"
    bad.write_bytes(bad.read_bytes()[:-4096])
    return root


@pytest.fixture()
def pipeline_config(night_dir, models, tmp_path):
    model_path, mobility_path = models
    return PipelineConfig(
        input_dir=night_dir,
        out_dir=tmp_path / "out",
        model_path=model_path,
        mobility_model_path=mobility_path,
    )


class TestDiscovery:
    def test_sidecars_and_duplicates(self, tmp_path):
        (tmp_path / "a.edf").touch()
        (tmp_path / "a.csv").touch()  # same stem, EDF wins
        (tmp_path / "b.csv").touch()
        (tmp_path / "b_labels.csv").touch()
        (tmp_path / "b_usability.csv").touch()
        (tmp_path / "c_rejected.csv").touch()
        (tmp_path / "c_despiked.edf").touch()
        (tmp_path / "d_mobility.csv").touch()
        (tmp_path / "notes.txt").touch()
        found = discover_nights(tmp_path)
        assert [p.name for p in found] == ["a.edf", "b.csv"]

    def test_missing_directory(self, tmp_path):
        with pytest.raises(FileUnreadable):
            discover_nights(tmp_path / "nope")

    def test_empty_directory(self, tmp_path):
        assert discover_nights(tmp_path) == []


class TestConfigFile:
    def test_values_comments_blanks(self, tmp_path):
        path = tmp_path / "floss.conf"
        path.write_text("# comment\n\nworkers = 4\n out = /tmp/x \nseed=7\n")
        assert parse_config_file(path) == {"workers": "4", "out": "/tmp/x", "seed": "7"}

    def test_bad_line(self, tmp_path):
        path = tmp_path / "floss.conf"
        path.write_text("workers 4\n")
        with pytest.raises(ValueError, match="line 1"):
            parse_config_file(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileUnreadable):
            parse_config_file(tmp_path / "nope.conf")


class TestPipeline:
    def test_skip_and_report(self, pipeline_config):
        reports = run_pipeline(pipeline_config)
        by_id = {r.night_id: r for r in reports}
        assert [r.night_id for r in reports] == ["s00", "s01", "s02"]
        assert by_id["s00"].status == "ok"
        assert by_id["s01"].status == "ok"
        assert by_id["s02"].status == "skipped"
        assert by_id["s02"].error_code == "TruncatedFile"
        assert by_id["s02"].outputs == []

    def test_skipped_night_writes_nothing(self, pipeline_config):
        run_pipeline(pipeline_config)
        leftovers = list(Path(pipeline_config.out_dir).glob("s02*"))
        assert leftovers == []

    def test_ok_night_output_inventory(self, pipeline_config):
        reports = run_pipeline(pipeline_config)
        ok = next(r for r in reports if r.night_id == "s00")
        assert ok.outputs == [
            "s00_hypnogram.svg",
            "s00_mobility.csv",
            "s00_rejected.csv",
            "s00_rejected.txt",
            "s00_stats.json",
            "s00_usability.csv",
            "s00_usability.svg",
        ]
        out = Path(pipeline_config.out_dir)
        for name in ok.outputs:
            assert (out / name).exists()

    def test_summary_json(self, pipeline_config):
        run_pipeline(pipeline_config)
        doc = json.loads((Path(pipeline_config.out_dir) / "report.json").read_text())
        assert doc["ok"] == 2
        assert doc["skipped"] == 1
        assert [n["night_id"] for n in doc["nights"]] == ["s00", "s01", "s02"]
        skipped = doc["nights"][2]
        assert skipped["error_code"] == "TruncatedFile"
        assert skipped["message"]

    def test_output_contents_parse(self, pipeline_config):
        run_pipeline(pipeline_config)
        out = Path(pipeline_config.out_dir)
        usability = (out / "s00_usability.csv").read_text().splitlines()
        assert usability[0] == "channel,epoch_index,label"
        assert len(usability) == 1 + 2 * N_EPOCHS

        rejected = [int(v) for v in (out / "s00_rejected.txt").read_text().split()]
        assert len(rejected) == N_EPOCHS // 3
        assert set(rejected) <= {-1, 0, 1, 2, 3, 4}

        stats = json.loads((out / "s00_stats.json").read_text())
        assert "TST_min" in stats and "SE_%" in stats

        mobility = (out / "s00_mobility.csv").read_text().splitlines()
        assert mobility[0] == "epoch_index,state"
        assert len(mobility) == 1 + N_EPOCHS

        for svg_name in ("s00_usability.svg", "s00_hypnogram.svg"):
            ET.fromstring((out / svg_name).read_text())

    def test_rerun_is_byte_identical(self, pipeline_config):
        run_pipeline(pipeline_config)
        out = Path(pipeline_config.out_dir)
        first = {p.name: p.read_bytes() for p in out.iterdir()}
        run_pipeline(pipeline_config)
        second = {p.name: p.read_bytes() for p in out.iterdir()}
        assert first == second

    def test_workers_match_serial(self, pipeline_config, tmp_path):
        run_pipeline(pipeline_config)
        serial = {
            p.name: p.read_bytes() for p in Path(pipeline_config.out_dir).iterdir()
        }
        parallel_config = PipelineConfig(
            input_dir=pipeline_config.input_dir,
            out_dir=tmp_path / "par",
            model_path=pipeline_config.model_path,
            mobility_model_path=pipeline_config.mobility_model_path,
            workers=3,
        )
        run_pipeline(parallel_config)
        parallel = {p.name: p.read_bytes() for p in Path(parallel_config.out_dir).iterdir()}
        assert serial == parallel

    def test_despike_adds_cleaned_recording(self, pipeline_config):
        pipeline_config.despike = True
        reports = run_pipeline(pipeline_config)
        ok = next(r for r in reports if r.night_id == "s00")
        assert "s00_despiked.edf" in ok.outputs
        out = Path(pipeline_config.out_dir)
        from floss.signal_io import read_edf

        cleaned = read_edf(out / "s00_despiked.edf")
        assert cleaned.n_samples == N_EPOCHS * 2560

    def test_without_mobility_model(self, pipeline_config):
        pipeline_config.mobility_model_path = None
        reports = run_pipeline(pipeline_config)
        ok = next(r for r in reports if r.night_id == "s00")
        assert "s00_mobility.csv" not in ok.outputs
        assert "s00_usability.csv" in ok.outputs

    def test_night_without_sleep_sidecar(self, models, tmp_path):
        indir = tmp_path / "in"
        indir.mkdir()
        _write_night(indir, "n0", subject=0)
        (indir / "n0_sleep.txt").unlink()
        model_path, mobility_path = models
        reports = run_pipeline(
            PipelineConfig(
                input_dir=indir,
                out_dir=tmp_path / "out",
                model_path=model_path,
                mobility_model_path=mobility_path,
            )
        )
        assert reports[0].status == "ok"
        assert reports[0].outputs == ["n0_mobility.csv", "n0_usability.csv", "n0_usability.svg"]

    def test_sleepless_night_keeps_usability(self, models, tmp_path):
        indir = tmp_path / "in"
        indir.mkdir()
        _write_night(indir, "n0", subject=0)
        n_scores = N_EPOCHS // 3
        (indir / "n0_sleep.txt").write_text("0\n" * n_scores)
        model_path, _ = models
        reports = run_pipeline(
            PipelineConfig(
                input_dir=indir,
                out_dir=tmp_path / "out",
                model_path=model_path,
            )
        )
        assert reports[0].status == "ok"
        assert "n0_stats.json" not in reports[0].outputs
        assert "n0_rejected.txt" in reports[0].outputs
        assert "n0_hypnogram.svg" in reports[0].outputs

    def test_empty_input_dir(self, models, tmp_path):
        indir = tmp_path / "in"
        indir.mkdir()
        model_path, _ = models
        reports = run_pipeline(
            PipelineConfig(
                input_dir=indir, out_dir=tmp_path / "out", model_path=model_path
            )
        )
        assert reports == []
        doc = json.loads((tmp_path / "out" / "report.json").read_text())
        assert doc == {"nights": [], "ok": 0, "skipped": 0}
