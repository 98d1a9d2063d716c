"""Wearing-state classification from accelerometry and time-in-bed detection.

Lights Out is the start (in seconds) of the first run of ``run_epochs``
consecutive Lying epochs; Lights On is the end of the last such run; both
use 1-based epoch indices, so a recording that opens with Lying yields a
Lights Out of one epoch length.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from . import gbt
from .errors import AccMissingWhenRequired, EmptyRecording, ModelIncompatible, NoLyingPeriod
from .features import N_STAT_FEATURES, band_powers, stat_features, welch_psd
from .signal_io import TriAxialAcc

#: consecutive Lying epochs required to open/close time in bed (2 min at 10 s)
DEFAULT_RUN_EPOCHS = 12

FEATURE_MODES = ("stat", "welch")


class MobilityState(IntEnum):
    IDLE = 0
    LYING = 1
    STATIONARY = 2
    MOBILE = 3


@dataclass(frozen=True)
class TimeInBed:
    lights_out_s: float
    lights_on_s: float
    tib_min: float


def mobility_feature_matrix(
    acc: TriAxialAcc,
    fs: float,
    epoch_len_s: float = 10.0,
    feature_mode: str = "stat",
) -> tuple[np.ndarray, tuple[tuple[str, int], ...]]:
    """Per-epoch feature rows from the three raw axes.

    stat mode concatenates the 24-value summary of each axis; welch mode
    concatenates each axis's band powers.
    """
    if feature_mode not in FEATURE_MODES:
        raise ValueError(f"feature_mode must be one of {FEATURE_MODES}")
    win = int(round(fs * epoch_len_s))
    n_epochs = len(acc) // win
    if n_epochs == 0:
        raise EmptyRecording(f"{len(acc)} samples make no {epoch_len_s} s epochs")

    blocks = []
    layout = []
    for name, axis in zip("xyz", acc.axes):
        epochs = axis[: n_epochs * win].reshape(n_epochs, win)
        if feature_mode == "stat":
            blocks.append(stat_features(epochs, fs))
            layout.append((f"stats_acc_{name}", N_STAT_FEATURES))
        else:
            freqs, psd = welch_psd(epochs, fs)
            bands = band_powers(freqs, psd)
            blocks.append(bands)
            layout.append((f"bands_acc_{name}", bands.shape[1]))
    return np.concatenate(blocks, axis=1), tuple(layout)


def fit_mobility(
    acc: TriAxialAcc,
    labels: list[MobilityState],
    fs: float,
    epoch_len_s: float = 10.0,
    feature_mode: str = "stat",
    config: gbt.TrainConfig = gbt.TrainConfig(),
) -> gbt.Model:
    """Train a wearing-state model on labeled accelerometer epochs."""
    X, layout = mobility_feature_matrix(acc, fs, epoch_len_s, feature_mode)
    y = np.asarray([int(s) for s in labels], dtype=np.int64)
    if len(y) != X.shape[0]:
        raise ModelIncompatible(f"{X.shape[0]} feature rows vs {len(y)} labels")
    meta = {
        "task": "mobility",
        "feature_mode": feature_mode,
        "fs": fs,
        "epoch_len_s": epoch_len_s,
    }
    return gbt.fit(X, y, config, feature_layout=layout, meta=meta)


def classify_mobility(
    acc: TriAxialAcc | None,
    fs: float,
    model: gbt.Model,
    epoch_len_s: float | None = None,
) -> list[MobilityState]:
    """Per-epoch wearing states for a recording's accelerometer."""
    if acc is None:
        raise AccMissingWhenRequired("mobility classification needs accelerometer data")
    if model.meta.get("task") != "mobility":
        raise ModelIncompatible(f"model task {model.meta.get('task')!r} is not mobility")
    if model.meta.get("fs") != fs:
        raise ModelIncompatible(f"model was fit at {model.meta.get('fs')} Hz, data is {fs} Hz")
    mode = model.meta.get("feature_mode", "stat")
    if epoch_len_s is None:
        epoch_len_s = float(model.meta.get("epoch_len_s", 10.0))
    X, _ = mobility_feature_matrix(acc, fs, epoch_len_s, mode)
    return [MobilityState(int(v)) for v in gbt.predict_label(model, X)]


def detect_tib(
    states: list[MobilityState],
    run_epochs: int = DEFAULT_RUN_EPOCHS,
    epoch_len_s: float = 10.0,
) -> TimeInBed:
    """Bed entry/exit from the first and last long Lying runs.

    With 1-based indices i over epochs and runs of ``run_epochs``:
    lights_out = epoch_len * min(i), lights_on = epoch_len * max(i + run - 1),
    tib_min = (lights_on - lights_out + 1) / 60.
    """
    if run_epochs < 1:
        raise ValueError(f"run_epochs must be >= 1, got {run_epochs}")
    lying = np.asarray([s == MobilityState.LYING for s in states], dtype=bool)
    n = len(lying)
    if n < run_epochs:
        raise NoLyingPeriod(f"{n} epochs cannot hold a {run_epochs}-epoch Lying run")

    window_all = (
        np.convolve(lying.astype(np.int64), np.ones(run_epochs, dtype=np.int64), "valid")
        == run_epochs
    )
    starts = np.flatnonzero(window_all)
    if starts.size == 0:
        raise NoLyingPeriod(f"no run of {run_epochs} consecutive Lying epochs")

    first_i = int(starts[0]) + 1
    last_i = int(starts[-1]) + 1
    lights_out_s = epoch_len_s * first_i
    lights_on_s = epoch_len_s * (last_i + run_epochs - 1)
    return TimeInBed(
        lights_out_s=lights_out_s,
        lights_on_s=lights_on_s,
        tib_min=(lights_on_s - lights_out_s + 1) / 60.0,
    )
