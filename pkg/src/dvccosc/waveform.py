"""Waveform measurements: steady-state windowing, frequency, spectrum,
total harmonic distortion and quadrature phase/amplitude.

Frequency comes from linearly interpolated upward zero crossings, which is
insensitive to amplitude distortion.  Harmonic amplitudes and phases come
from single-frequency projections (Goertzel-style DFT bins) of the
Hann-weighted window evaluated at exact multiples of the measured
fundamental, not at the nearest FFT bin, so there is no half-bin bias in
either phase or THD.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .transient import Waveform

#: Cycles in the steady-state measurement window.
WINDOW_CYCLES = 20

#: Relative spread of per-cycle positive peaks accepted as settled.
SETTLE_REL = 0.005

#: A channel's fundamental below this fraction of its peak is degenerate.
DEGENERATE_REL = 1e-12


class MeasurementError(ValueError):
    """Raised when a waveform cannot support the requested measurement."""


def _upward_crossings(x: np.ndarray) -> np.ndarray:
    """Fractional sample positions where the signal crosses zero upward."""
    neg = x < 0.0
    idx = np.nonzero(neg[:-1] & ~neg[1:])[0]
    frac = x[idx] / (x[idx] - x[idx + 1])
    return idx + frac


def steady_state_window(w: Waveform, channel: str) -> tuple[int, int]:
    """Locate the last WINDOW_CYCLES full cycles and check they are settled.

    Cycle boundaries are interpolated upward zero crossings.  The window is
    accepted only if the positive peak of every cycle lies within SETTLE_REL
    relative spread; otherwise "not settled".  Fewer than 40 zero crossings
    (or too few upward ones to span the window) is "too short".  Returns a
    half-open sample index range.
    """
    x = w.channel(channel)
    sign_changes = int(np.count_nonzero(np.diff(np.signbit(x))))
    ups = _upward_crossings(x)
    if sign_changes < 40 or len(ups) < WINDOW_CYCLES + 1:
        raise MeasurementError(
            f"too short: {sign_changes} zero crossings in channel {channel!r}, "
            f"need at least 40 spanning {WINDOW_CYCLES} full cycles")
    marks = ups[-(WINDOW_CYCLES + 1):]
    peaks = []
    for k in range(WINDOW_CYCLES):
        seg = x[math.ceil(marks[k]):math.ceil(marks[k + 1])]
        peaks.append(float(seg.max()))
    spread = (max(peaks) - min(peaks)) / float(np.mean(peaks))
    if not spread < SETTLE_REL:
        raise MeasurementError(
            f"not settled: peak spread {spread:.3%} over the last "
            f"{WINDOW_CYCLES} cycles exceeds {SETTLE_REL:.1%}")
    return math.ceil(marks[0]), math.floor(marks[-1]) + 1


def estimate_frequency(w: Waveform, channel: str, window: tuple[int, int]) -> float:
    """Mean-period frequency from interpolated upward crossings in the window."""
    start, stop = window
    x = w.channel(channel)[start:stop]
    ups = _upward_crossings(x)
    if len(ups) < 2:
        raise MeasurementError(
            f"fewer than 2 upward zero crossings in window of channel {channel!r}")
    period = (ups[-1] - ups[0]) / (len(ups) - 1) * w.dt
    return 1.0 / period


@dataclass(frozen=True)
class Spectrum:
    """One-sided amplitude spectrum with window coherent-gain compensation.

    bins[k] is the complex amplitude at frequency k*df; a unit-amplitude
    sine landing exactly on a bin reads magnitude 1.
    """

    df: float
    bins: np.ndarray
    window: str
    n_fft: int

    def frequencies(self) -> np.ndarray:
        return self.df * np.arange(len(self.bins))

    def peak_frequency(self) -> float:
        """Frequency of the largest non-DC bin."""
        k = 1 + int(np.argmax(np.abs(self.bins[1:])))
        return k * self.df


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def spectrum(w: Waveform, channel: str, window: tuple[int, int],
             n_fft: int | None = None, window_fn: str = "hann") -> Spectrum:
    """Windowed, zero-padded, one-sided FFT of the selected span."""
    start, stop = window
    x = np.asarray(w.channel(channel)[start:stop], dtype=float)
    n = len(x)
    if n < 64:
        raise MeasurementError(f"window too short for a spectrum: {n} < 64 samples")
    if n_fft is None:
        n_fft = max(64, _next_pow2(n))
    if n_fft < n or n_fft & (n_fft - 1) or n_fft < 64:
        raise MeasurementError(
            f"n_fft must be a power of two >= max(64, window length), got {n_fft}")
    if window_fn == "hann":
        taper = np.hanning(n)
    elif window_fn == "rect":
        taper = np.ones(n)
    else:
        raise ValueError(f"window_fn must be hann|rect, got {window_fn!r}")
    coherent_gain = taper.sum()
    raw = np.fft.rfft(x * taper, n_fft)
    bins = raw * (2.0 / coherent_gain)
    bins[0] = raw[0] / coherent_gain
    bins[-1] = raw[-1] / coherent_gain
    return Spectrum(df=1.0 / (w.dt * n_fft), bins=bins, window=window_fn, n_fft=n_fft)


def _projection(x: np.ndarray, dt: float, freq: float) -> complex:
    """Hann-weighted single-frequency DFT, scaled to component amplitude.

    For x(t) = A*cos(2*pi*f*t + phi), returns approximately A*exp(1j*phi).
    """
    n = len(x)
    t = dt * np.arange(n)
    taper = np.hanning(n)
    return complex((x * taper) @ np.exp(-2j * np.pi * freq * t) * (2.0 / taper.sum()))


def thd(w: Waveform, channel: str, window: tuple[int, int],
        max_harmonic: int = 9) -> float:
    """Total harmonic distortion: RMS of harmonics 2..max_harmonic over the
    fundamental amplitude.

    Harmonic amplitudes are projections at exact multiples of the
    zero-crossing fundamental; multiples at or above Nyquist are skipped.
    """
    f1 = estimate_frequency(w, channel, window)
    start, stop = window
    x = np.asarray(w.channel(channel)[start:stop], dtype=float)
    h1 = abs(_projection(x, w.dt, f1))
    if h1 <= DEGENERATE_REL * float(np.max(np.abs(x))):
        raise MeasurementError(
            f"fundamental amplitude of channel {channel!r} below "
            f"{DEGENERATE_REL} of channel peak")
    nyquist = 0.5 / w.dt
    acc = 0.0
    for k in range(2, max_harmonic + 1):
        fk = k * f1
        if fk >= nyquist:
            break
        acc += abs(_projection(x, w.dt, fk)) ** 2
    return math.sqrt(acc) / h1


def wrap_phase_deg(deg: float) -> float:
    """Wrap an angle in degrees to (-180, 180]."""
    out = math.fmod(deg, 360.0)
    if out <= -180.0:
        out += 360.0
    elif out > 180.0:
        out -= 360.0
    return out


def phase_and_ratio(w: Waveform, ch_a: str, ch_b: str,
                    window: tuple[int, int]) -> tuple[float, float]:
    """Phase of channel A minus channel B and amplitude ratio |A|/|B| at the
    shared fundamental (estimated from channel B)."""
    f1 = estimate_frequency(w, ch_b, window)
    start, stop = window
    xa = np.asarray(w.channel(ch_a)[start:stop], dtype=float)
    xb = np.asarray(w.channel(ch_b)[start:stop], dtype=float)
    pa = _projection(xa, w.dt, f1)
    pb = _projection(xb, w.dt, f1)
    for label, proj, x in ((ch_a, pa, xa), (ch_b, pb, xb)):
        if abs(proj) <= DEGENERATE_REL * float(np.max(np.abs(x))):
            raise MeasurementError(f"degenerate amplitude in channel {label!r}")
    phase = wrap_phase_deg(math.degrees(np.angle(pa) - np.angle(pb)))
    return phase, abs(pa) / abs(pb)


@dataclass(frozen=True)
class QuadratureReport:
    """Combined steady-state measurement of a two-channel oscillator run."""

    f_measured: float
    phase_diff_deg: float
    amp_ratio: float
    thd_a: float
    thd_b: float
    window_used: tuple[int, int]
    channel_a: str
    channel_b: str


def quadrature_report(w: Waveform) -> QuadratureReport:
    """Measure frequency, phase difference, amplitude ratio and per-channel
    THD over a settled window.

    Requires exactly two channels.  The window and the shared fundamental
    are taken from the second channel (the integrated, less distorted
    output in the canonical circuit).
    """
    if len(w.channels) != 2:
        raise MeasurementError(
            f"need exactly two probe channels, waveform has {len(w.channels)}")
    (label_a, _), (label_b, _) = w.channels
    window = steady_state_window(w, label_b)
    f1 = estimate_frequency(w, label_b, window)
    phase, ratio = phase_and_ratio(w, label_a, label_b, window)
    return QuadratureReport(
        f_measured=f1,
        phase_diff_deg=phase,
        amp_ratio=ratio,
        thd_a=thd(w, label_a, window),
        thd_b=thd(w, label_b, window),
        window_used=window,
        channel_a=label_a,
        channel_b=label_b,
    )


def write_spectrum_csv(spec: Spectrum, path) -> None:
    """CSV export: header ``f_hz,magnitude,phase_deg``."""
    with open(path, "w") as fh:
        fh.write("f_hz,magnitude,phase_deg\n")
        freqs = spec.frequencies()
        mags = np.abs(spec.bins)
        phases = np.degrees(np.angle(spec.bins))
        for k in range(len(spec.bins)):
            fh.write(f"{freqs[k]:.9e},{mags[k]:.9e},{phases[k]:.9e}\n")
