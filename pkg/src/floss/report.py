"""Batch pipeline over directories of nights with skip-and-report semantics.

Each night is processed independently: read, optionally despike, score
usability per channel, classify mobility and find time in bed when an
accelerometer model is given, merge with sleep scores when a sidecar
exists, and emit CSV/JSON/SVG outputs. A night failing with a taxonomy
error is skipped whole: none of its outputs are written and the error
lands in the batch summary. Only configuration problems abort the run.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import gbt, svg
from .aggregate import AggregationConfig, load_sleep_scores, rejected_scores
from .errors import FileUnreadable, FlossError, NoSleepDetected
from .mobility import TimeInBed, classify_mobility, detect_tib
from .signal_io import ChannelSignal, Recording, read_csv, read_edf, write_csv, write_edf
from .sleepstats import compute_stats
from .spiky import design_cascade, apply_zero_phase
from .usability import UsabilityScores, score_recording

#: stems ending in these are sidecars or prior outputs, never input nights
_SIDECAR_SUFFIXES = ("_labels", "_usability", "_mobility", "_rejected", "_despiked")


@dataclass
class PipelineConfig:
    input_dir: str | Path
    out_dir: str | Path
    model_path: str | Path
    mobility_model_path: str | Path | None = None
    sleep_epoch_len_s: float = 30.0
    despike: bool = False
    tib_run_epochs: int = 12
    workers: int = 1
    seed: int = 0


@dataclass
class NightReport:
    night_id: str
    status: str  # "ok" or "skipped"
    error_code: str | None = None
    message: str = ""
    outputs: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "night_id": self.night_id,
            "status": self.status,
            "error_code": self.error_code,
            "message": self.message,
            "outputs": self.outputs,
        }


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` lines; blank lines and # comments ignored."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FileUnreadable(f"cannot read config {path}: {exc}") from exc
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path} line {lineno}: expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def discover_nights(input_dir: str | Path) -> list[Path]:
    """Recording files in a directory, EDF preferred over a same-stem CSV."""
    root = Path(input_dir)
    if not root.is_dir():
        raise FileUnreadable(f"input directory {root} does not exist")
    chosen: dict[str, Path] = {}
    for path in sorted(root.iterdir()):
        if path.suffix.lower() not in (".edf", ".csv"):
            continue
        stem = path.stem
        if any(stem.endswith(sfx) for sfx in _SIDECAR_SUFFIXES):
            continue
        if stem not in chosen or path.suffix.lower() == ".edf":
            chosen[stem] = path
    return [chosen[stem] for stem in sorted(chosen)]


def emit_usability_graph(
    rec: Recording,
    scores: UsabilityScores,
    path: str | Path,
    title: str | None = None,
    binary: bool = False,
) -> None:
    if title is None:
        title = Path(path).stem
    Path(path).write_text(svg.render_usability_graph(rec, scores, title, binary=binary))


def emit_hypnogram(
    scores: np.ndarray,
    epoch_len_s: float,
    path: str | Path,
    mobility: np.ndarray | None = None,
    tib: TimeInBed | None = None,
    title: str | None = None,
) -> None:
    if title is None:
        title = Path(path).stem
    Path(path).write_text(
        svg.render_hypnogram(scores, epoch_len_s, title, mobility=mobility, tib=tib)
    )


def _read_recording(path: Path) -> Recording:
    if path.suffix.lower() == ".edf":
        return read_edf(path)
    return read_csv(path)


def _despiked(rec: Recording) -> Recording:
    cascade = design_cascade(rec.fs)
    channels = [
        ChannelSignal(
            ch.label,
            apply_zero_phase(cascade, ch.samples),
            unit=ch.unit,
            calibration=ch.calibration,
        )
        for ch in rec.channels
    ]
    return Recording(
        channels=channels,
        acc=rec.acc,
        fs=rec.fs,
        start_time=rec.start_time,
        device_id=rec.device_id,
    )


def process_night(
    path: Path,
    out_dir: Path,
    model: gbt.Model,
    mobility_model: gbt.Model | None,
    config: PipelineConfig,
) -> NightReport:
    """Run the whole per-night chain; buffer outputs and write only on success."""
    night_id = path.stem
    texts: list[tuple[str, str]] = []  # (filename, content) written on success
    despiked_rec: Recording | None = None

    try:
        rec = _read_recording(path)
        if config.despike:
            rec = despiked_rec = _despiked(rec)

        scores = score_recording(rec, model)
        binary = bool(model.meta.get("binary", False))
        texts.append((f"{night_id}_usability.csv", scores.to_csv()))
        texts.append(
            (
                f"{night_id}_usability.svg",
                svg.render_usability_graph(rec, scores, night_id, binary=binary),
            )
        )

        mobility = None
        tib = None
        if mobility_model is not None:
            states = classify_mobility(rec.acc, rec.fs, mobility_model)
            epoch_len_s = float(mobility_model.meta.get("epoch_len_s", 10.0))
            lines = ["epoch_index,state"]
            lines += [f"{i},{int(s)}" for i, s in enumerate(states)]
            texts.append((f"{night_id}_mobility.csv", "\n".join(lines) + "\n"))
            tib = detect_tib(states, config.tib_run_epochs, epoch_len_s)
            mobility = np.asarray([int(s) for s in states])

        sleep_path = path.with_name(f"{night_id}_sleep.txt")
        if sleep_path.exists():
            sleep_scores = load_sleep_scores(sleep_path)
            agg = AggregationConfig(
                usability_epoch_len_s=scores.epoch_len_s,
                sleep_epoch_len_s=config.sleep_epoch_len_s,
            )
            s_ar = rejected_scores(scores.labels, sleep_scores, agg)
            texts.append(
                (f"{night_id}_rejected.txt", "\n".join(str(int(v)) for v in s_ar) + "\n")
            )
            csv_lines = ["epoch_start_s,score"]
            csv_lines += [
                f"{repr(i * config.sleep_epoch_len_s)},{int(v)}" for i, v in enumerate(s_ar)
            ]
            texts.append((f"{night_id}_rejected.csv", "\n".join(csv_lines) + "\n"))

            try:
                stats = compute_stats(s_ar, config.sleep_epoch_len_s, tib=tib)
                texts.append((f"{night_id}_stats.json", stats.to_json()))
            except NoSleepDetected:
                pass  # a sleepless night still gets usability outputs

            sleep_mobility = None
            if mobility is not None:
                # show mobility on the sleep-epoch grid next to the hypnogram
                ratio = max(1, int(round(config.sleep_epoch_len_s / scores.epoch_len_s)))
                trimmed = mobility[: (len(mobility) // ratio) * ratio]
                if len(trimmed):
                    sleep_mobility = trimmed.reshape(-1, ratio)[:, 0]
            texts.append(
                (
                    f"{night_id}_hypnogram.svg",
                    svg.render_hypnogram(
                        s_ar,
                        config.sleep_epoch_len_s,
                        night_id,
                        mobility=sleep_mobility,
                        tib=tib,
                    ),
                )
            )
    except FlossError as exc:
        if exc.code is None:
            raise
        return NightReport(
            night_id=night_id,
            status="skipped",
            error_code=exc.code.value,
            message=str(exc),
        )

    written = []
    for name, content in texts:
        (out_dir / name).write_text(content)
        written.append(name)
    if despiked_rec is not None:
        if path.suffix.lower() == ".edf":
            name = f"{night_id}_despiked.edf"
            write_edf(despiked_rec, out_dir / name)
        else:
            name = f"{night_id}_despiked.csv"
            write_csv(despiked_rec, out_dir / name)
        written.append(name)
    return NightReport(night_id=night_id, status="ok", outputs=sorted(written))


def run_pipeline(config: PipelineConfig) -> list[NightReport]:
    """Process every night under the input directory and write the summary."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model = gbt.load_model(config.model_path)
    mobility_model = (
        gbt.load_model(config.mobility_model_path)
        if config.mobility_model_path is not None
        else None
    )
    nights = discover_nights(config.input_dir)

    if config.workers > 1 and len(nights) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            reports = list(
                pool.map(
                    lambda p: process_night(p, out_dir, model, mobility_model, config),
                    nights,
                )
            )
    else:
        reports = [process_night(p, out_dir, model, mobility_model, config) for p in nights]

    reports.sort(key=lambda r: r.night_id)
    summary = {
        "nights": [r.to_dict() for r in reports],
        "ok": sum(r.status == "ok" for r in reports),
        "skipped": sum(r.status == "skipped" for r in reports),
    }
    (out_dir / "report.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    return reports
