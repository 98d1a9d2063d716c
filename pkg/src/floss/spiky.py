"""Removal of the 8 Hz spike train and its harmonics from EEG.

A 4th-order Butterworth lowpass (30 Hz) cascades with one second-order
notch per contaminated frequency (8, 16, 24 Hz).  The Butterworth is
designed from its analog poles through the bilinear transform with
frequency pre-warping; each notch places unit-circle zeros at the center
frequency over poles at radius 1 - bw/2.  Application is forward-backward,
so the pass is zero-phase and the magnitude response applies twice.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter, lfilter_zi

from .errors import FrequencyAboveNyquist, SignalTooShort

#: keep the normalized DC gain just under unity so rounding never lands above 1
DC_GAIN_MARGIN = 1e-9


@dataclass(frozen=True)
class ButterworthSpec:
    fs: float
    cutoff_hz: float = 30.0
    order: int = 4


@dataclass(frozen=True)
class NotchSpec:
    fs: float
    center_hz: float
    bandwidth_hz: float = 2.0


@dataclass(frozen=True)
class FilterCascade:
    b: np.ndarray
    a: np.ndarray
    fs: float
    notch_centers: tuple[float, ...] = field(default=())


def _check_below_nyquist(freq: float, fs: float, what: str) -> None:
    if not 0 < freq < fs / 2:
        raise FrequencyAboveNyquist(f"{what} {freq} Hz outside (0, {fs / 2}) Hz")


def design_butterworth(spec: ButterworthSpec) -> tuple[np.ndarray, np.ndarray]:
    """Digital lowpass via analog poles and the pre-warped bilinear map."""
    _check_below_nyquist(spec.cutoff_hz, spec.fs, "cutoff")
    n = spec.order
    wc = 2.0 * spec.fs * np.tan(np.pi * spec.cutoff_hz / spec.fs)
    k = np.arange(1, n + 1)
    poles_s = wc * np.exp(1j * (2 * k + n - 1) * np.pi / (2 * n))
    poles_z = (2 * spec.fs + poles_s) / (2 * spec.fs - poles_s)

    a = np.poly(poles_z).real
    b = np.poly(-np.ones(n)).real
    b = b * (a.sum() / b.sum())  # unit gain at DC
    return b, a


def design_notch(spec: NotchSpec) -> tuple[np.ndarray, np.ndarray]:
    """Second-order notch: zeros on the unit circle, poles at radius 1 - bw/2."""
    _check_below_nyquist(spec.center_hz, spec.fs, "notch center")
    theta = 2.0 * np.pi * spec.center_hz / spec.fs
    bw = spec.bandwidth_hz / (spec.fs / 2.0)
    r = 1.0 - bw / 2.0
    b = np.array([1.0, -2.0 * np.cos(theta), 1.0])
    a = np.array([1.0, -2.0 * r * np.cos(theta), r * r])
    return b, a


def design_cascade(
    fs: float,
    cutoff_hz: float = 30.0,
    notch_centers: tuple[float, ...] = (8.0, 16.0, 24.0),
    bandwidth_hz: float = 2.0,
) -> FilterCascade:
    """Butterworth and notch stages combined by polynomial convolution."""
    b, a = design_butterworth(ButterworthSpec(fs=fs, cutoff_hz=cutoff_hz))
    for center in notch_centers:
        nb, na = design_notch(NotchSpec(fs=fs, center_hz=center, bandwidth_hz=bandwidth_hz))
        b = np.convolve(b, nb)
        a = np.convolve(a, na)
    b = b * (a.sum() / b.sum()) * (1.0 - DC_GAIN_MARGIN)
    return FilterCascade(b=b, a=a, fs=fs, notch_centers=tuple(notch_centers))


def freq_response(cascade: FilterCascade, freqs_hz: np.ndarray) -> np.ndarray:
    """Complex single-pass response H(e^jw) at the requested frequencies."""
    w = 2.0 * np.pi * np.asarray(freqs_hz, dtype=np.float64) / cascade.fs
    zb = np.exp(-1j * np.outer(w, np.arange(len(cascade.b))))
    za = np.exp(-1j * np.outer(w, np.arange(len(cascade.a))))
    return (zb @ cascade.b) / (za @ cascade.a)


def pole_radii(cascade: FilterCascade) -> np.ndarray:
    return np.abs(np.roots(cascade.a))


def apply_zero_phase(cascade: FilterCascade, x: np.ndarray) -> np.ndarray:
    """Filter forward and backward with odd-reflection edge padding.

    The output has zero sample lag and the squared magnitude response of
    the cascade.
    """
    x = np.asarray(x, dtype=np.float64)
    pad = 3 * max(len(cascade.a), len(cascade.b))
    if x.ndim != 1 or len(x) <= pad:
        raise SignalTooShort(f"need more than {pad} samples, got {x.shape}")

    head = 2.0 * x[0] - x[pad:0:-1]
    tail = 2.0 * x[-1] - x[-2 : -pad - 2 : -1]
    ext = np.concatenate([head, x, tail])

    zi = lfilter_zi(cascade.b, cascade.a)
    y, _ = lfilter(cascade.b, cascade.a, ext, zi=zi * ext[0])
    y = y[::-1]
    y, _ = lfilter(cascade.b, cascade.a, y, zi=zi * y[0])
    y = y[::-1]
    return y[pad:-pad]
