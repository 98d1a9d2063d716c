"""Epoch extraction, artifact labeling, class balancing, and subject splits.

Annotation spans carry raw label codes; compound codes collapse onto the
five artifact classes before any epoch-level decision.  Majority votes over
sub-epoch durations are taken in exact rational arithmetic so the
tie-breaking precedence only ever fires on true ties.
"""
from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import EmptyPartition, EmptyRecording, FileUnreadable, HeaderFieldUnparsable, UnknownLabelCode
from .features import acc_norm
from .signal_io import Recording


class ArtifactClass(IntEnum):
    USABLE = 0
    NO_DATA = 1
    HIGH_NOISE = 2
    SPIKY = 3
    M_SHAPED = 4


#: tie-break order: earlier entries win exact duration ties
PRECEDENCE: tuple[ArtifactClass, ...] = (
    ArtifactClass.USABLE,
    ArtifactClass.HIGH_NOISE,
    ArtifactClass.M_SHAPED,
    ArtifactClass.SPIKY,
    ArtifactClass.NO_DATA,
)

_COMPOUND_MERGE = {5: 2, 6: 2, 13: 3, 23: 2, 43: 4}


def merge_compound_labels(code: int) -> ArtifactClass:
    """Collapse a raw annotation code onto the five artifact classes."""
    if 0 <= code <= 4:
        return ArtifactClass(code)
    if code in _COMPOUND_MERGE:
        return ArtifactClass(_COMPOUND_MERGE[code])
    raise UnknownLabelCode(f"annotation code {code} is not recognized")


def _to_fraction(value: int | float | str | Fraction) -> Fraction:
    if isinstance(value, float):
        # repr round-trips, so the decimal the caller wrote is preserved
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class AnnotationSpan:
    """One labeled time range on one channel, in seconds from night start."""

    channel: str
    start_s: Fraction
    end_s: Fraction
    label: ArtifactClass

    def __post_init__(self) -> None:
        object.__setattr__(self, "start_s", _to_fraction(self.start_s))
        object.__setattr__(self, "end_s", _to_fraction(self.end_s))
        if not self.start_s < self.end_s:
            raise ValueError(f"span [{self.start_s}, {self.end_s}) is empty or reversed")


@dataclass
class EpochSample:
    """One labeled channel-epoch ready for feature extraction."""

    subject_id: str
    night_id: str
    channel: str
    epoch_index: int
    label: ArtifactClass
    eeg: np.ndarray
    acc_norm: np.ndarray | None


def assign_epoch_label(
    spans: list[AnnotationSpan],
    epoch_start: int | float | str | Fraction,
    epoch_len: int | float | str | Fraction,
) -> ArtifactClass:
    """Label an epoch by the class covering the most time within it.

    Uncovered time counts as Usable; where spans overlap, the overlapped
    time goes to the higher-precedence class; exact duration ties resolve
    by PRECEDENCE order.
    """
    start = _to_fraction(epoch_start)
    end = start + _to_fraction(epoch_len)

    points = {start, end}
    clipped: list[tuple[Fraction, Fraction, ArtifactClass]] = []
    for span in spans:
        lo, hi = max(span.start_s, start), min(span.end_s, end)
        if lo < hi:
            clipped.append((lo, hi, span.label))
            points.update((lo, hi))

    rank = {cls: i for i, cls in enumerate(PRECEDENCE)}
    durations: dict[ArtifactClass, Fraction] = {cls: Fraction(0) for cls in ArtifactClass}
    cuts = sorted(points)
    for lo, hi in zip(cuts, cuts[1:]):
        covering = [label for s_lo, s_hi, label in clipped if s_lo <= lo and hi <= s_hi]
        winner = min(covering, key=rank.__getitem__) if covering else ArtifactClass.USABLE
        durations[winner] += hi - lo

    best = max(durations.values())
    for cls in PRECEDENCE:
        if durations[cls] == best:
            return cls
    raise AssertionError("unreachable: PRECEDENCE covers all classes")


def build_epochs(
    rec: Recording,
    spans: list[AnnotationSpan],
    window_s: float = 10.0,
    subject_id: str = "",
    night_id: str = "",
) -> list[EpochSample]:
    """Cut a recording into labeled per-channel epochs.

    The trailing partial window is dropped; a recording shorter than one
    window raises EmptyRecording.
    """
    win = int(round(window_s * rec.fs))
    n_epochs = rec.n_samples // win if win else 0
    if n_epochs == 0:
        raise EmptyRecording(
            f"{rec.n_samples} samples make no {window_s} s epochs at {rec.fs} Hz"
        )

    norm = None
    if rec.acc is not None:
        norm = acc_norm(*rec.acc.axes)[: n_epochs * win].reshape(n_epochs, win)

    samples: list[EpochSample] = []
    for ch in rec.channels:
        ch_spans = [s for s in spans if s.channel == ch.label]
        eeg = ch.samples[: n_epochs * win].reshape(n_epochs, win)
        for i in range(n_epochs):
            epoch_start = Fraction(i) * _to_fraction(window_s)
            in_epoch = [
                s
                for s in ch_spans
                if s.start_s < epoch_start + _to_fraction(window_s) and s.end_s > epoch_start
            ]
            samples.append(
                EpochSample(
                    subject_id=subject_id,
                    night_id=night_id,
                    channel=ch.label,
                    epoch_index=i,
                    label=assign_epoch_label(in_epoch, epoch_start, window_s),
                    eeg=eeg[i],
                    acc_norm=None if norm is None else norm[i],
                )
            )
    return samples


def balance_rus(samples: list[EpochSample], seed: int) -> list[EpochSample]:
    """Random-undersample the Usable class down to the artifact total.

    All samples of classes 1-4 are kept; the Usable class is reduced to
    their combined count by uniform sampling without replacement (all kept
    if already smaller).  Input order is preserved.
    """
    usable_idx = [i for i, s in enumerate(samples) if s.label == ArtifactClass.USABLE]
    n_target = len(samples) - len(usable_idx)
    if len(usable_idx) <= n_target:
        return list(samples)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(usable_idx), size=n_target, replace=False)
    keep = set(usable_idx[i] for i in chosen)
    return [s for i, s in enumerate(samples) if s.label != ArtifactClass.USABLE or i in keep]


def subject_split(
    samples: list[EpochSample],
    train_subjects: list[str],
    test_subjects: list[str],
) -> tuple[list[EpochSample], list[EpochSample]]:
    """Partition samples by subject so no subject spans both sides."""
    overlap = set(train_subjects) & set(test_subjects)
    if overlap:
        raise ValueError(f"subjects listed on both sides: {sorted(overlap)}")
    present = {s.subject_id for s in samples}
    unknown = (set(train_subjects) | set(test_subjects)) - present
    if unknown:
        warnings.warn(f"subjects not present in the data: {sorted(unknown)}", stacklevel=2)

    train = [s for s in samples if s.subject_id in set(train_subjects)]
    test = [s for s in samples if s.subject_id in set(test_subjects)]
    if not train or not test:
        raise EmptyPartition("one side of the subject split has no samples")
    return train, test


def load_annotations(path: str | Path) -> list[AnnotationSpan]:
    """Load a channel,start_s,end_s,label CSV; compound codes are merged."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FileUnreadable(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != ["channel", "start_s", "end_s", "label"]:
        raise HeaderFieldUnparsable(f"unexpected annotation header: {header}")
    spans = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            spans.append(
                AnnotationSpan(row[0], Fraction(row[1]), Fraction(row[2]), merge_compound_labels(int(row[3])))
            )
        except (ValueError, IndexError, ZeroDivisionError) as exc:
            raise HeaderFieldUnparsable(f"{path} line {lineno}: {exc}") from exc
    return spans


def write_annotations(spans: list[AnnotationSpan], path: str | Path) -> None:
    """Write spans in the channel,start_s,end_s,label CSV layout."""
    lines = ["channel,start_s,end_s,label"]
    for s in spans:
        lines.append(f"{s.channel},{_frac_str(s.start_s)},{_frac_str(s.end_s)},{int(s.label)}")
    Path(path).write_text("\n".join(lines) + "\n")


def _frac_str(f: Fraction) -> str:
    if f.denominator == 1:
        return str(int(f))
    # decimal only when it reads back exactly; otherwise keep num/den
    decimal = repr(float(f))
    return decimal if Fraction(decimal) == f else str(f)
