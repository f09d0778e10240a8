"""dubpipe: an offline-testable video dubbing pipeline.

Segments source speech, runs pluggable ASR/translation/TTS backends per
chunk, refines the synthesized audio to match source timing and pitch,
reassembles a dubbed track, and exposes the workflow through a CLI and a
job-oriented HTTP service with a rater-agreement evaluation toolkit.
"""

from .audio import AudioBuffer, FrameSpec, decode_wav, encode_wav, resample, rms_frames
from .backends import BackendConfig, TranscriptChunk, VoiceModel
from .pipeline import DubResult, PipelineConfig, run_pipeline
from .refine import PitchEstimate, ShiftSteps, VocalBand, estimate_pitch, match_segment, pitch_shift, shift_steps, time_stretch
from .segmenter import SilenceConfig, SpeechInterval, extract_chunks, split_nonsilent

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer",
    "BackendConfig",
    "DubResult",
    "FrameSpec",
    "PipelineConfig",
    "PitchEstimate",
    "ShiftSteps",
    "SilenceConfig",
    "SpeechInterval",
    "TranscriptChunk",
    "VocalBand",
    "VoiceModel",
    "decode_wav",
    "encode_wav",
    "estimate_pitch",
    "extract_chunks",
    "match_segment",
    "pitch_shift",
    "resample",
    "rms_frames",
    "run_pipeline",
    "shift_steps",
    "split_nonsilent",
    "time_stretch",
]
