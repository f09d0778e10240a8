"""Make synthesized speech fit the source segment it replaces.

Two adjustments, applied per segment:

* duration alignment, via phase-vocoder time-scale modification, so the
  dubbed chunk occupies the same span as the original speech;
* voice matching, via a fixed pitch shift computed from the mean
  fundamental frequencies of the synthesized and source audio.

The shift amount comes from ``shift_steps``: 2 * log2(f_src / f_tgt) under
the default signed reading, i.e. two steps per octave of separation. A
squared reading, (log2(f_src / f_tgt))**2, is available behind a flag; it
discards direction and is kept only for comparison experiments.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .audio import AudioBuffer, resample_by_ratio
from .errors import RefineWarning, UnvoicedError

# One shift step spans half an octave; pitch_shift counts 12 per octave.
SEMITONES_PER_STEP = 6.0

_PV_FRAME = 2048
_PV_HOP = 512

_PITCH_FRAME = 2048
_PITCH_HOP = 512
_VOICED_THRESHOLD = 0.5


@dataclass(frozen=True)
class VocalBand:
    """Accepted fundamental-frequency range, in Hz.

    Defaults span F2 to G6 (87.31 to 1567.98 Hz), covering speaking and
    singing voices.
    """

    low: float = 87.31
    high: float = 1567.98

    def __post_init__(self):
        if not 0 < self.low < self.high:
            raise ValueError(f"need 0 < low < high, got [{self.low}, {self.high}]")


# Narrow preset pinning both edges to the low end of the speaking range.
NARROW_SPEECH_BAND = VocalBand(low=87.31, high=98.0)


@dataclass(frozen=True)
class PitchEstimate:
    mean_f0: float
    voiced_fraction: float


@dataclass(frozen=True)
class ShiftSteps:
    n_steps: float

    def __post_init__(self):
        if not math.isfinite(self.n_steps):
            raise ValueError(f"n_steps must be finite, got {self.n_steps}")


def shift_steps(f_src: float, f_tgt: float, squared: bool = False) -> ShiftSteps:
    """Steps separating two frequencies: 2 * log2(f_src / f_tgt).

    With ``squared=True`` the result is (log2(f_src / f_tgt))**2 instead,
    which collapses both directions onto the same magnitude.
    """
    if f_src <= 0 or f_tgt <= 0:
        raise ValueError(f"frequencies must be positive, got {f_src}, {f_tgt}")
    log_ratio = math.log2(f_src / f_tgt)
    return ShiftSteps(log_ratio**2 if squared else 2.0 * log_ratio)


def _autocorrelation(frame: np.ndarray, tau_max: int) -> np.ndarray:
    """Unnormalized linear autocorrelation r(tau) for tau in [0, tau_max]."""
    n = len(frame)
    fft_size = 1 << (n + tau_max).bit_length()
    spectrum = np.fft.rfft(frame, fft_size)
    return np.fft.irfft(spectrum * spectrum.conjugate())[: tau_max + 1]


def _refine_peak(curve: np.ndarray, tau: int) -> tuple[float, float]:
    """Parabolic-interpolated (position, height) of the peak around tau."""
    left, mid, right = curve[tau - 1], curve[tau], curve[tau + 1]
    denom = left - 2.0 * mid + right
    if denom == 0:
        return float(tau), float(mid)
    offset = 0.5 * (left - right) / denom
    return tau + offset, mid - 0.25 * (left - right) * offset


def _frame_f0(
    frame: np.ndarray, sr: int, tau_min: int, tau_max: int
) -> Optional[float]:
    """Autocorrelation pitch estimate for one frame, or None when unvoiced.

    Picks the strongest local autocorrelation maximum with lag in
    [tau_min, tau_max), then walks its integer divisors: if a lag at 1/m of
    the winner supports a comparably high peak, the period was a multiple of
    the true one and the shortest strong lag wins. Heights are compared on
    the envelope-normalized curve r(tau) / (r(0) * (1 - tau/n)); frames
    whose best peak stays below half the zero-lag energy are unvoiced.
    """
    frame = frame - frame.mean()
    n = len(frame)
    autocorr = _autocorrelation(frame, tau_max)
    if autocorr[0] <= 0.0:
        return None
    normalized = autocorr * n / (autocorr[0] * np.maximum(n - np.arange(tau_max + 1), 1))

    interior = autocorr[tau_min : tau_max - 1]
    is_peak = (interior >= autocorr[tau_min - 1 : tau_max - 2]) & (
        interior >= autocorr[tau_min + 1 : tau_max]
    )
    peak_lags = np.nonzero(is_peak)[0] + tau_min
    if len(peak_lags) == 0:
        return None
    best = int(peak_lags[np.argmax(autocorr[peak_lags])])
    best_pos, best_height = _refine_peak(normalized, best)
    if best_height < _VOICED_THRESHOLD:
        return None

    for divisor in range(best // tau_min, 1, -1):
        candidate = int(round(best / divisor))
        lo, hi = max(candidate - 2, tau_min), min(candidate + 3, tau_max - 1)
        if lo + 1 >= hi:
            continue
        local = lo + int(np.argmax(autocorr[lo:hi]))
        if not (autocorr[local] >= autocorr[local - 1] and autocorr[local] >= autocorr[local + 1]):
            continue
        pos, height = _refine_peak(normalized, local)
        if height >= 0.95 * best_height and pos > 0:
            return sr / pos

    return sr / best_pos if best_pos > 0 else None


def estimate_pitch(
    buf: AudioBuffer, band: VocalBand = VocalBand()
) -> PitchEstimate:
    """Frame-wise fundamental-frequency estimate averaged over voiced frames.

    Candidates outside the band are rejected. Raises UnvoicedError when no
    frame yields an in-band pitch.
    """
    if len(buf) < _PITCH_FRAME + _PITCH_HOP:
        raise ValueError(
            f"buffer too short for pitch analysis: {len(buf)} samples, "
            f"need at least {_PITCH_FRAME + _PITCH_HOP}"
        )
    sr = buf.sample_rate
    tau_min = max(2, int(sr / band.high))
    tau_max = min(int(math.ceil(sr / band.low)) + 1, _PITCH_FRAME // 2)
    if tau_min >= tau_max:
        raise ValueError(f"band [{band.low}, {band.high}] unresolvable at {sr} Hz")

    voiced: list[float] = []
    n_frames = 0
    for start in range(0, len(buf) - _PITCH_FRAME + 1, _PITCH_HOP):
        n_frames += 1
        frame = buf.samples[start : start + _PITCH_FRAME].astype(np.float64)
        f0 = _frame_f0(frame, sr, tau_min, tau_max)
        if f0 is not None and band.low <= f0 <= band.high:
            voiced.append(f0)

    if not voiced:
        raise UnvoicedError("no voiced frames inside the vocal band")
    return PitchEstimate(
        mean_f0=float(np.mean(voiced)), voiced_fraction=len(voiced) / n_frames
    )


def _periodic_hann(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def _stft(samples: np.ndarray, n_fft: int, hop: int, window: np.ndarray) -> np.ndarray:
    pad = n_fft // 2
    padded = np.pad(samples, (pad, pad))
    n_frames = 1 + (len(padded) - n_fft) // hop
    strides = (padded.strides[0] * hop, padded.strides[0])
    frames = np.lib.stride_tricks.as_strided(
        padded, shape=(n_frames, n_fft), strides=strides
    )
    return np.fft.rfft(frames * window, axis=1)


def _istft(
    spectrogram: np.ndarray, n_fft: int, hop: int, window: np.ndarray, length: int
) -> np.ndarray:
    frames = np.fft.irfft(spectrogram, n=n_fft, axis=1) * window
    n_frames = len(frames)
    total = (n_frames - 1) * hop + n_fft
    out = np.zeros(total)
    norm = np.zeros(total)
    wsq = window**2
    for t in range(n_frames):
        out[t * hop : t * hop + n_fft] += frames[t]
        norm[t * hop : t * hop + n_fft] += wsq
    out /= np.maximum(norm, 1e-8)
    pad = n_fft // 2
    trimmed = out[pad : pad + length]
    if len(trimmed) < length:
        trimmed = np.pad(trimmed, (0, length - len(trimmed)))
    return trimmed


def time_stretch(buf: AudioBuffer, rate: float) -> AudioBuffer:
    """Change duration by 1/rate without changing pitch (phase vocoder).

    rate > 1 shortens, rate < 1 lengthens; output length is exactly
    ``round(len / rate)`` samples.
    """
    if rate <= 0:
        raise ValueError(f"rate must be positive, got {rate}")
    if len(buf) == 0:
        raise ValueError("cannot stretch an empty buffer")
    if rate == 1.0:
        return AudioBuffer(buf.samples.copy(), buf.sample_rate)

    window = _periodic_hann(_PV_FRAME)
    spec = _stft(buf.samples.astype(np.float64), _PV_FRAME, _PV_HOP, window)
    n_frames, n_bins = spec.shape
    spec = np.vstack([spec, np.zeros((2, n_bins), dtype=spec.dtype)])

    steps = np.arange(0, n_frames, rate)
    expected_advance = 2.0 * np.pi * _PV_HOP * np.arange(n_bins) / _PV_FRAME
    out_spec = np.empty((len(steps), n_bins), dtype=complex)
    phase = np.angle(spec[0])
    for i, step in enumerate(steps):
        t = int(step)
        frac = step - t
        magnitude = (1.0 - frac) * np.abs(spec[t]) + frac * np.abs(spec[t + 1])
        out_spec[i] = magnitude * np.exp(1j * phase)
        deviation = np.angle(spec[t + 1]) - np.angle(spec[t]) - expected_advance
        deviation -= 2.0 * np.pi * np.round(deviation / (2.0 * np.pi))
        phase = phase + expected_advance + deviation

    length = int(round(len(buf) / rate))
    stretched = _istft(out_spec, _PV_FRAME, _PV_HOP, window, length)
    return AudioBuffer(stretched, buf.sample_rate)


def pitch_shift(buf: AudioBuffer, steps: ShiftSteps | float) -> AudioBuffer:
    """Shift pitch by ``steps`` twelfths of an octave, duration preserved.

    A tone at f comes out at f * 2**(n_steps / 12) within 2%. Implemented as
    time-scale modification followed by resampling.
    """
    if len(buf) == 0:
        raise ValueError("cannot pitch-shift an empty buffer")
    n_steps = steps.n_steps if isinstance(steps, ShiftSteps) else float(steps)
    if n_steps == 0.0:
        return AudioBuffer(buf.samples.copy(), buf.sample_rate)
    rate = 2.0 ** (-n_steps / 12.0)
    stretched = time_stretch(buf, rate)
    shifted = resample_by_ratio(stretched.samples, rate)
    return AudioBuffer(shifted, buf.sample_rate)


def _pitch_or_none(buf: AudioBuffer, band: VocalBand) -> Optional[float]:
    if len(buf) < _PITCH_FRAME + _PITCH_HOP:
        return None
    try:
        return estimate_pitch(buf, band).mean_f0
    except UnvoicedError:
        return None


def match_segment(
    synth: AudioBuffer,
    source_chunk: AudioBuffer,
    band: VocalBand = VocalBand(),
    max_stretch_rate: float = 3.0,
    warn: Optional[Callable[[str], None]] = None,
) -> AudioBuffer:
    """Fit synthesized speech onto its source segment.

    Stretches the synthesized audio to the source duration, then shifts its
    pitch toward the source speaker's mean fundamental. When either side has
    no detectable pitch the shift is skipped and a warning is recorded; when
    the required stretch exceeds ``max_stretch_rate`` the rate is clamped
    and a warning is recorded.

    ``warn`` receives warning messages; by default they go through the
    :mod:`warnings` module as :class:`RefineWarning`.
    """
    if len(synth) == 0 or len(source_chunk) == 0:
        raise ValueError("both buffers must be non-empty")
    if synth.sample_rate != source_chunk.sample_rate:
        raise ValueError(
            f"sample rates differ: {synth.sample_rate} vs {source_chunk.sample_rate}"
        )
    if warn is None:
        warn = lambda msg: warnings.warn(msg, RefineWarning, stacklevel=3)

    rate = synth.duration_seconds / source_chunk.duration_seconds
    clamped = min(max(rate, 1.0 / max_stretch_rate), max_stretch_rate)
    if clamped != rate:
        warn(
            f"stretch rate {rate:.2f} clamped to {clamped:.2f}; "
            "durations will not fully align"
        )
    fitted = time_stretch(synth, clamped) if clamped != 1.0 else synth

    f_synth = _pitch_or_none(synth, band)
    f_source = _pitch_or_none(source_chunk, band)
    if f_synth is None or f_source is None:
        which = "synthesized" if f_synth is None else "source"
        warn(f"pitch step skipped: {which} audio has no detectable pitch")
        return AudioBuffer(fitted.samples.copy(), fitted.sample_rate)

    # Move the synthesized pitch onto the source speaker's: negate the
    # source-over-target steps and widen them from 2 to 12 per octave.
    applied = -SEMITONES_PER_STEP * shift_steps(f_synth, f_source).n_steps
    return pitch_shift(fitted, applied)
