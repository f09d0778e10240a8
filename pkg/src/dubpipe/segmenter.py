"""Energy-based speech interval detection.

Splits a buffer into non-silent intervals so downstream stages can work
chunk by chunk. The threshold is relative to the loudest analysis frame
(``top_db`` below peak), which keeps detection independent of recording
gain. Detected runs are post-processed by merging short gaps and dropping
short intervals.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .audio import AudioBuffer, FrameSpec, rms_frames

# Non-overlapping energy frames keep boundary quantization within one hop.
DEFAULT_SILENCE_FRAME = FrameSpec(frame_length=512, hop_length=512)


@dataclass(frozen=True)
class SpeechInterval:
    """Half-open sample range [start_sample, end_sample) of detected speech."""

    start_sample: int
    end_sample: int

    def __post_init__(self):
        if not 0 <= self.start_sample < self.end_sample:
            raise ValueError(
                f"invalid interval [{self.start_sample}, {self.end_sample})"
            )

    def __len__(self) -> int:
        return self.end_sample - self.start_sample


@dataclass(frozen=True)
class SilenceConfig:
    top_db: float = 40.0
    frame: FrameSpec = field(default_factory=lambda: DEFAULT_SILENCE_FRAME)
    min_gap_s: float = 0.3
    min_len_s: float = 0.1

    def __post_init__(self):
        if self.top_db <= 0:
            raise ValueError(f"top_db must be positive, got {self.top_db}")
        if self.min_gap_s < 0 or self.min_len_s < 0:
            raise ValueError("min_gap_s and min_len_s must be non-negative")


def split_nonsilent(
    buf: AudioBuffer, cfg: SilenceConfig = SilenceConfig()
) -> list[SpeechInterval]:
    """Detect maximal non-silent intervals, sorted and disjoint.

    A frame is non-silent when its RMS is within ``top_db`` dB of the peak
    frame RMS. Runs of non-silent frames become sample intervals; gaps
    shorter than ``min_gap_s`` are merged, then intervals shorter than
    ``min_len_s`` are dropped.
    """
    if len(buf) == 0:
        raise ValueError("cannot segment an empty buffer")

    rms = rms_frames(buf, cfg.frame)
    peak = float(rms.max())
    if peak == 0.0:
        return []
    nonsilent = rms > peak * 10.0 ** (-cfg.top_db / 20.0)

    hop = cfg.frame.hop_length
    intervals: list[list[int]] = []
    run_start = None
    for i, flag in enumerate(nonsilent):
        if flag and run_start is None:
            run_start = i
        elif not flag and run_start is not None:
            intervals.append([run_start, i])
            run_start = None
    if run_start is not None:
        intervals.append([run_start, len(nonsilent)])

    # frame runs -> sample ranges, clamped to the buffer
    spans = [
        [f0 * hop, min(len(buf), (f1 - 1) * hop + cfg.frame.frame_length)]
        for f0, f1 in intervals
    ]

    min_gap = int(round(cfg.min_gap_s * buf.sample_rate))
    merged: list[list[int]] = []
    for span in spans:
        if merged and span[0] - merged[-1][1] < min_gap:
            merged[-1][1] = span[1]
        else:
            merged.append(span)

    min_len = int(round(cfg.min_len_s * buf.sample_rate))
    return [
        SpeechInterval(start, end) for start, end in merged if end - start >= min_len
    ]


def extract_chunks(
    buf: AudioBuffer, intervals: list[SpeechInterval]
) -> list[AudioBuffer]:
    """Slice the buffer into one chunk per interval, same sample rate."""
    for iv in intervals:
        if iv.end_sample > len(buf):
            raise ValueError(
                f"interval [{iv.start_sample}, {iv.end_sample}) exceeds "
                f"buffer length {len(buf)}"
            )
    return [
        AudioBuffer(buf.samples[iv.start_sample : iv.end_sample].copy(), buf.sample_rate)
        for iv in intervals
    ]


def interval_manifest(intervals: list[SpeechInterval], sample_rate: int) -> list[dict]:
    """Segment manifest entries: sample and second offsets per interval."""
    return [
        {
            "index": i,
            "start_sample": iv.start_sample,
            "end_sample": iv.end_sample,
            "start_s": iv.start_sample / sample_rate,
            "end_s": iv.end_sample / sample_rate,
        }
        for i, iv in enumerate(intervals)
    ]


def manifest_json(intervals: list[SpeechInterval], sample_rate: int) -> str:
    return json.dumps(interval_manifest(intervals, sample_rate), indent=2)
