"""Per-epoch usability scoring of recordings, plus the model variants.

A usability model is the boosted-tree classifier over per-epoch features.
Variants change the recipe, not the machinery: lite drops the statistical
blocks, binary collapses the labels to usable/unusable, and weighted-m
raises the two-humped-artifact class weight.
"""
from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np

from . import gbt
from .epoching import ArtifactClass, EpochSample
from .errors import ChannelMissing, DegenerateData, EmptyRecording, ModelIncompatible
from .features import SpectrogramConfig, acc_norm, epoch_feature_matrix
from .signal_io import Recording

#: class weight applied to the two-humped artifact class by weighted-m
M_CLASS_WEIGHT = 3.0

#: 99.9th-percentile amplitude above this suggests non-standard scaling
AMPLITUDE_WARN_UV = 2000.0


@dataclass(frozen=True)
class VariantSpec:
    name: str
    lite: bool
    binary: bool
    weighted_m: bool


VARIANTS: dict[str, VariantSpec] = {
    spec.name: spec
    for spec in (
        VariantSpec("default", lite=False, binary=False, weighted_m=False),
        VariantSpec("lite", lite=True, binary=False, weighted_m=False),
        VariantSpec("binary", lite=False, binary=True, weighted_m=False),
        VariantSpec("weighted-m", lite=False, binary=False, weighted_m=True),
        VariantSpec("lite-binary", lite=True, binary=True, weighted_m=False),
        VariantSpec("lite-weighted-m", lite=True, binary=False, weighted_m=True),
    )
}


@dataclass
class UsabilityScores:
    """Per-channel label sequences on the usability epoch grid."""

    channels: list[str]
    labels: list[np.ndarray]
    epoch_len_s: float

    @property
    def n_epochs(self) -> int:
        return len(self.labels[0]) if self.labels else 0

    def to_csv(self) -> str:
        lines = ["channel,epoch_index,label"]
        for name, seq in zip(self.channels, self.labels):
            for i, v in enumerate(seq):
                lines.append(f"{name},{i},{int(v)}")
        return "\n".join(lines) + "\n"


def variant_spec(name: str) -> VariantSpec:
    try:
        return VARIANTS[name]
    except KeyError:
        raise ValueError(f"unknown variant {name!r}; choose from {sorted(VARIANTS)}") from None


def _dataset_matrices(
    samples: list[EpochSample], fs: float, include_stats: bool
) -> tuple[np.ndarray, tuple[tuple[str, int], ...]]:
    eeg = np.stack([s.eeg for s in samples])
    if any(s.acc_norm is not None for s in samples):
        width = eeg.shape[1]
        acc = np.stack(
            [s.acc_norm if s.acc_norm is not None else np.zeros(width) for s in samples]
        )
    else:
        acc = None
    cfg = SpectrogramConfig(fs=fs)
    return epoch_feature_matrix(eeg, acc, cfg, include_stats=include_stats)


def train_usability(
    samples: list[EpochSample],
    fs: float,
    variant: str = "default",
    config: gbt.TrainConfig = gbt.TrainConfig(),
) -> gbt.Model:
    """Fit a usability model of the chosen variant on labeled epochs."""
    if not samples:
        raise DegenerateData("no training samples")
    spec = variant_spec(variant)
    X, layout = _dataset_matrices(samples, fs, include_stats=not spec.lite)

    if spec.binary:
        y = np.asarray([0 if s.label == ArtifactClass.USABLE else 1 for s in samples])
    else:
        y = np.asarray([int(s.label) for s in samples])

    if spec.weighted_m:
        weights = [1.0] * (int(y.max()) + 1)
        weights[int(ArtifactClass.M_SHAPED)] = M_CLASS_WEIGHT
        config = dataclasses.replace(config, class_weights=tuple(weights))

    epoch_len_s = samples[0].eeg.shape[-1] / fs
    meta = {
        "task": "usability",
        "variant": variant,
        "fs": fs,
        "epoch_len_s": epoch_len_s,
        "include_stats": not spec.lite,
        "binary": spec.binary,
    }
    return gbt.fit(X, y, config, feature_layout=layout, meta=meta)


def score_recording(rec: Recording, model: gbt.Model) -> UsabilityScores:
    """Label every channel epoch of a recording with the model's classes."""
    if model.meta.get("task") != "usability":
        raise ModelIncompatible(f"model task {model.meta.get('task')!r} is not usability")
    if not rec.channels:
        raise ChannelMissing("recording has no EEG channels")
    fs = model.meta.get("fs")
    if fs != rec.fs:
        raise ModelIncompatible(f"model was fit at {fs} Hz, recording is {rec.fs} Hz")
    epoch_len_s = float(model.meta.get("epoch_len_s", 10.0))
    include_stats = bool(model.meta.get("include_stats", True))

    win = int(round(epoch_len_s * rec.fs))
    n_epochs = rec.n_samples // win
    if n_epochs == 0:
        raise EmptyRecording(f"{rec.n_samples} samples make no {epoch_len_s} s epochs")

    for ch in rec.channels:
        if np.percentile(np.abs(ch.samples), 99.9) > AMPLITUDE_WARN_UV:
            warnings.warn(
                f"channel {ch.label!r} amplitudes exceed {AMPLITUDE_WARN_UV} uV; "
                "data may need normalization to the expected microvolt scale",
                stacklevel=2,
            )

    norm_epochs = None
    if rec.acc is not None:
        norm = acc_norm(*rec.acc.axes)
        norm_epochs = norm[: n_epochs * win].reshape(n_epochs, win)

    cfg = SpectrogramConfig(fs=rec.fs)
    labels = []
    for ch in rec.channels:
        eeg_epochs = ch.samples[: n_epochs * win].reshape(n_epochs, win)
        X, layout = epoch_feature_matrix(eeg_epochs, norm_epochs, cfg, include_stats)
        if model.feature_layout is not None and tuple(layout) != tuple(model.feature_layout):
            raise ModelIncompatible(
                f"feature layout {layout} does not match the model's {model.feature_layout}"
            )
        labels.append(gbt.predict_label(model, X))

    return UsabilityScores(
        channels=[ch.label for ch in rec.channels],
        labels=labels,
        epoch_len_s=epoch_len_s,
    )
