"""Mono PCM audio container plus WAV codec, resampling, and frame energy.

Everything downstream (segmentation, synthesis refinement, track assembly)
operates on :class:`AudioBuffer`: mono float32 samples in [-1, 1] at a fixed
sample rate.
"""
from __future__ import annotations

import io
import math
import struct
import wave
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.signal import resample_poly

from .errors import FormatError, UnsupportedError

# WAVE format tags we accept on ingest
_WAVE_FORMAT_PCM = 0x0001
_WAVE_FORMAT_IEEE_FLOAT = 0x0003
_WAVE_FORMAT_EXTENSIBLE = 0xFFFE


@dataclass(eq=False)
class AudioBuffer:
    """Mono audio: float32 samples in [-1, 1] plus a sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        samples = np.asarray(self.samples, dtype=np.float32)
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("samples contain NaN or infinity")
        self.samples = np.clip(samples, -1.0, 1.0)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class FrameSpec:
    """Analysis framing: ``frame_length`` samples per frame, ``hop_length``
    samples between frame starts."""

    frame_length: int = 2048
    hop_length: int = 512

    def __post_init__(self):
        if not 0 < self.hop_length <= self.frame_length:
            raise ValueError(
                f"need 0 < hop_length <= frame_length, got "
                f"hop={self.hop_length} frame={self.frame_length}"
            )


def decode_wav(data: bytes) -> AudioBuffer:
    """Decode a RIFF/WAVE byte string into a mono AudioBuffer.

    Accepts 16-bit PCM and 32-bit float encodings with 1 or 2 channels.
    Stereo is downmixed by per-sample mean; integer samples are scaled by
    1/32768 so the result lies in [-1, 1].
    """
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise FormatError("not a RIFF/WAVE container")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise FormatError("fmt chunk truncated")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            payload = body
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None or payload is None:
        raise FormatError("missing fmt or data chunk")

    audio_format, channels, sample_rate, _, _, bits = fmt
    if audio_format == _WAVE_FORMAT_EXTENSIBLE:
        raise UnsupportedError("WAVE_FORMAT_EXTENSIBLE is not supported")
    if audio_format not in (_WAVE_FORMAT_PCM, _WAVE_FORMAT_IEEE_FLOAT):
        raise UnsupportedError(f"unsupported wave format tag 0x{audio_format:04x}")
    if channels not in (1, 2):
        raise UnsupportedError(f"unsupported channel count {channels}")
    if sample_rate <= 0:
        raise FormatError(f"invalid sample rate {sample_rate}")

    if audio_format == _WAVE_FORMAT_PCM:
        if bits != 16:
            raise UnsupportedError(f"unsupported PCM bit depth {bits}")
        raw = np.frombuffer(payload[: len(payload) - len(payload) % 2], dtype="<i2")
        samples = raw.astype(np.float32) / 32768.0
    else:
        if bits != 32:
            raise UnsupportedError(f"unsupported float bit depth {bits}")
        raw = np.frombuffer(payload[: len(payload) - len(payload) % 4], dtype="<f4")
        samples = raw.astype(np.float32)

    if channels == 2:
        samples = samples[: len(samples) - len(samples) % 2]
        samples = samples.reshape(-1, 2).mean(axis=1)

    return AudioBuffer(samples=samples, sample_rate=sample_rate)


def encode_wav(buf: AudioBuffer) -> bytes:
    """Encode an AudioBuffer as 16-bit PCM WAV bytes.

    Quantization uses a scale of 32768 (clipped at the positive rail), so
    ``decode_wav(encode_wav(b))`` reproduces samples within 1/32768.
    """
    quantized = np.clip(
        np.round(buf.samples.astype(np.float64) * 32768.0), -32768, 32767
    ).astype("<i2")
    out = io.BytesIO()
    with wave.open(out, "wb") as writer:
        writer.setnchannels(1)
        writer.setsampwidth(2)
        writer.setframerate(buf.sample_rate)
        writer.writeframes(quantized.tobytes())
    return out.getvalue()


def read_wav(path) -> AudioBuffer:
    with open(path, "rb") as handle:
        return decode_wav(handle.read())


def write_wav(path, buf: AudioBuffer) -> None:
    with open(path, "wb") as handle:
        handle.write(encode_wav(buf))


def resample(buf: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Resample to ``target_rate`` Hz with a polyphase filter.

    Output length is ``round(len * target_rate / source_rate)`` give or take
    one sample; tone frequencies are preserved well within 1%.
    """
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    if target_rate == buf.sample_rate:
        return AudioBuffer(buf.samples.copy(), buf.sample_rate)
    g = math.gcd(int(target_rate), buf.sample_rate)
    resampled = resample_poly(
        buf.samples.astype(np.float64), int(target_rate) // g, buf.sample_rate // g
    )
    return AudioBuffer(resampled, int(target_rate))


def resample_by_ratio(samples: np.ndarray, ratio: float) -> np.ndarray:
    """Resample raw samples so the output is ``ratio`` times as long."""
    if ratio <= 0:
        raise ValueError(f"ratio must be positive, got {ratio}")
    frac = Fraction(ratio).limit_denominator(1000)
    return resample_poly(samples.astype(np.float64), frac.numerator, frac.denominator)


def rms_frames(buf: AudioBuffer, spec: FrameSpec = FrameSpec()) -> np.ndarray:
    """Per-frame root-mean-square energy at hop intervals.

    Frames start every ``hop_length`` samples; frames running past the end of
    the buffer are zero-padded, so the output has ``ceil(len / hop)`` entries.
    """
    if len(buf) < 1:
        raise ValueError("buffer is empty")
    n_frames = -(-len(buf) // spec.hop_length)  # ceil division
    padded = np.zeros((n_frames - 1) * spec.hop_length + spec.frame_length)
    padded[: len(buf)] = buf.samples
    strides = (padded.strides[0] * spec.hop_length, padded.strides[0])
    frames = np.lib.stride_tricks.as_strided(
        padded, shape=(n_frames, spec.frame_length), strides=strides
    )
    return np.sqrt(np.mean(frames**2, axis=1))
