"""End-to-end dubbing orchestration.

Stages run in a fixed order: extract the source audio with an external
command, detect speech intervals, transcribe/translate/synthesize each
chunk, refine each synthesized chunk onto its source slot, assemble the
dubbed track, then produce the output video either by replacing the audio
(muxer command) or through an external lip-sync command.

External tools are invoked through command templates with ``{in}``,
``{out}``, and ``{audio}`` placeholders, so the core has no media-codec
dependencies and tests can substitute stub scripts.
"""
from __future__ import annotations

import hashlib
import json
import shlex
import subprocess
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .audio import AudioBuffer, read_wav, resample, write_wav
from .backends import (
    BackendConfig,
    TranscriptChunk,
    VoiceModel,
    asr_transcribe,
    translate_text,
    tts_synthesize,
    validate_language,
)
from .errors import AssemblyWarning, ConfigError, ExtractError, StageError
from .refine import VocalBand, match_segment
from .segmenter import SilenceConfig, SpeechInterval, extract_chunks, interval_manifest, split_nonsilent

STAGES = (
    "extract",
    "segment",
    "asr",
    "translate",
    "tts",
    "refine",
    "assemble",
    "lipsync",
    "mux",
)

LIPSYNC_MODES = ("audio_replace", "external_adapter")

DEFAULT_EXTRACTOR_CMD = (
    "ffmpeg -y -loglevel error -i {in} -vn -acodec pcm_s16le -ar 16000 -ac 1 {out}"
)
DEFAULT_MUXER_CMD = (
    "ffmpeg -y -loglevel error -i {in} -i {audio} -map 0:v -map 1:a -c:v copy {out}"
)


@dataclass(frozen=True)
class PipelineConfig:
    target_lang: str = "hi"
    source_lang: str = "en"
    voice: VoiceModel = field(
        default_factory=lambda: VoiceModel(id="mock-female", gender="female", language="hi")
    )
    silence: SilenceConfig = field(default_factory=SilenceConfig)
    band: VocalBand = field(default_factory=VocalBand)
    asr: BackendConfig = field(default_factory=BackendConfig)
    mt: BackendConfig = field(default_factory=BackendConfig)
    tts: BackendConfig = field(default_factory=BackendConfig)
    lipsync_mode: str = "audio_replace"
    extractor_cmd: str = DEFAULT_EXTRACTOR_CMD
    muxer_cmd: str = DEFAULT_MUXER_CMD
    lipsync_cmd: Optional[str] = None
    sample_rate: int = 16000
    max_stretch_rate: float = 3.0
    max_workers: int = 4

    def __post_init__(self):
        validate_language(self.source_lang)
        validate_language(self.target_lang)
        if self.source_lang == self.target_lang:
            raise ConfigError(
                f"target language must differ from source ({self.source_lang})"
            )
        if self.lipsync_mode not in LIPSYNC_MODES:
            raise ConfigError(
                f"lipsync_mode must be one of {LIPSYNC_MODES}, got {self.lipsync_mode!r}"
            )
        _check_template("extractor_cmd", self.extractor_cmd, ("{in}", "{out}"))
        _check_template("muxer_cmd", self.muxer_cmd, ("{in}", "{out}", "{audio}"))
        if self.lipsync_mode == "external_adapter":
            if not self.lipsync_cmd:
                raise ConfigError("external_adapter mode requires lipsync_cmd")
            _check_template("lipsync_cmd", self.lipsync_cmd, ("{in}", "{out}", "{audio}"))
        if self.sample_rate <= 0:
            raise ConfigError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.max_stretch_rate < 1.0:
            raise ConfigError("max_stretch_rate must be at least 1.0")


def _check_template(name: str, template: str, placeholders: tuple[str, ...]) -> None:
    missing = [p for p in placeholders if p not in template]
    if missing:
        raise ConfigError(f"{name} is missing placeholder(s) {', '.join(missing)}")


def _render_command(template: str, **values: str) -> list[str]:
    return [token.format(**values) for token in shlex.split(template)]


def _run_command(template: str, stage: str, **values: str) -> None:
    argv = _render_command(template, **values)
    try:
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=600)
    except FileNotFoundError as exc:
        raise StageError(stage, f"command not found: {argv[0]}") from exc
    except subprocess.TimeoutExpired as exc:
        raise StageError(stage, f"command timed out: {' '.join(argv)}") from exc
    if proc.returncode != 0:
        message = (
            f"command exited {proc.returncode}: {' '.join(argv)}\n"
            f"stdout: {proc.stdout.strip()}\nstderr: {proc.stderr.strip()}"
        )
        raise ExtractError(message) if stage == "extract" else StageError(stage, message)


@dataclass(frozen=True)
class StageArtifact:
    stage: str
    path: Path
    checksum: str
    duration_ms: float


@dataclass(frozen=True)
class TranscriptEntry:
    index: int
    start_s: float
    end_s: float
    source_text: str
    target_text: str


@dataclass
class DubResult:
    video_out: Path
    transcript: list[TranscriptEntry]
    track: AudioBuffer
    warnings: list[str]
    artifacts: list[StageArtifact]


def checksum_path(path: Path) -> str:
    """SHA-256 of a file, or of the sorted (name, digest) pairs of a directory."""
    path = Path(path)
    if path.is_dir():
        digest = hashlib.sha256()
        for child in sorted(path.rglob("*")):
            if child.is_file():
                digest.update(str(child.relative_to(path)).encode())
                digest.update(bytes.fromhex(checksum_path(child)))
        return digest.hexdigest()
    return hashlib.sha256(path.read_bytes()).hexdigest()


def extract_audio(video: Path, cfg: PipelineConfig, workdir: Path) -> AudioBuffer:
    """Pull the audio track out of the video via the extractor command."""
    video = Path(video)
    if not video.exists():
        raise ExtractError(f"input video not found: {video}")
    wav_path = Path(workdir) / "extracted.wav"
    _run_command(cfg.extractor_cmd, "extract", **{"in": str(video), "out": str(wav_path)})
    if not wav_path.exists():
        raise ExtractError(f"extractor produced no output at {wav_path}")
    buf = read_wav(wav_path)
    if buf.sample_rate != cfg.sample_rate:
        buf = resample(buf, cfg.sample_rate)
        write_wav(wav_path, buf)
    return buf


def assemble_track(
    source_len: int,
    intervals: list[SpeechInterval],
    refined: list[AudioBuffer],
    sample_rate: int,
    warn: Optional[Callable[[str], None]] = None,
) -> AudioBuffer:
    """Place each refined chunk at its interval start over silence.

    Chunks longer than their interval are trimmed to the interval end with a
    warning; shorter chunks leave trailing silence.
    """
    if len(intervals) != len(refined):
        raise ValueError(
            f"{len(intervals)} intervals but {len(refined)} refined chunks"
        )
    if warn is None:
        warn = lambda msg: warnings.warn(msg, AssemblyWarning, stacklevel=2)
    track = np.zeros(source_len, dtype=np.float32)
    for index, (interval, chunk) in enumerate(zip(intervals, refined)):
        if interval.end_sample > source_len:
            raise ValueError(
                f"interval [{interval.start_sample}, {interval.end_sample}) "
                f"exceeds track length {source_len}"
            )
        if chunk.sample_rate != sample_rate:
            raise ValueError(
                f"chunk {index} sample rate {chunk.sample_rate} != {sample_rate}"
            )
        slot = len(interval)
        samples = chunk.samples
        if len(samples) > slot:
            warn(
                f"chunk {index} is {len(samples) - slot} samples longer than its "
                f"interval; trimmed to the interval end"
            )
            samples = samples[:slot]
        track[interval.start_sample : interval.start_sample + len(samples)] = samples
    return AudioBuffer(track, sample_rate)


def _write_json(path: Path, payload) -> None:
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False),
        encoding="utf-8",
    )


def run_pipeline(
    video: Path,
    cfg: PipelineConfig,
    observer: Optional[Callable[[str, StageArtifact], None]] = None,
    workdir: Optional[Path] = None,
) -> DubResult:
    """Run every stage in order, returning the dubbed output.

    ``observer`` is called once per stage, in stage order, with the stage
    name and its completed artifact. The first failing stage raises a
    StageError tagged with the stage name; artifacts from earlier stages
    stay on disk for inspection.
    """
    video = Path(video)
    workdir = Path(workdir) if workdir is not None else video.parent / "dub_work"
    workdir.mkdir(parents=True, exist_ok=True)

    artifacts: list[StageArtifact] = []
    run_warnings: list[str] = []

    def finish_stage(stage: str, path: Path) -> None:
        elapsed_ms = (time.monotonic() - stage_started) * 1000.0
        artifact = StageArtifact(
            stage=stage, path=path, checksum=checksum_path(path), duration_ms=elapsed_ms
        )
        artifacts.append(artifact)
        if observer is not None:
            observer(stage, artifact)

    def run_stage(stage: str, action: Callable[[], Path]):
        nonlocal stage_started
        stage_started = time.monotonic()
        try:
            finish_stage(stage, action())
        except StageError:
            raise
        except Exception as exc:
            raise StageError(stage, f"{stage} stage failed: {exc}") from exc

    stage_started = time.monotonic()

    # extract
    source: AudioBuffer
    def do_extract() -> Path:
        nonlocal source
        source = extract_audio(video, cfg, workdir)
        return workdir / "extracted.wav"
    source = None  # type: ignore[assignment]
    run_stage("extract", do_extract)

    # segment
    intervals: list[SpeechInterval]
    def do_segment() -> Path:
        nonlocal intervals
        intervals = split_nonsilent(source, cfg.silence)
        path = workdir / "segments.json"
        _write_json(path, interval_manifest(intervals, source.sample_rate))
        return path
    intervals = []
    run_stage("segment", do_segment)

    chunks = extract_chunks(source, intervals)

    def pooled(fn, items):
        if not items:
            return []
        with ThreadPoolExecutor(max_workers=cfg.max_workers) as pool:
            return list(pool.map(fn, items))

    # asr
    transcripts: list[TranscriptChunk]
    def do_asr() -> Path:
        nonlocal transcripts
        transcripts = pooled(
            lambda pair: asr_transcribe(pair[1], cfg.source_lang, cfg.asr, pair[0]),
            list(enumerate(chunks)),
        )
        path = workdir / "asr.json"
        _write_json(path, [{"index": t.segment_index, "text": t.text} for t in transcripts])
        return path
    transcripts = []
    run_stage("asr", do_asr)

    # translate
    translations: list[str]
    def do_translate() -> Path:
        nonlocal translations
        translations = pooled(
            lambda t: translate_text(t.text, cfg.source_lang, cfg.target_lang, cfg.mt),
            transcripts,
        )
        path = workdir / "translation.json"
        _write_json(
            path,
            [
                {"index": t.segment_index, "source": t.text, "target": tr}
                for t, tr in zip(transcripts, translations)
            ],
        )
        return path
    translations = []
    run_stage("translate", do_translate)

    # tts
    synthesized: list[AudioBuffer]
    def do_tts() -> Path:
        nonlocal synthesized
        raw = pooled(lambda text: tts_synthesize(text, cfg.voice, cfg.tts), translations)
        synthesized = [
            buf if buf.sample_rate == cfg.sample_rate else resample(buf, cfg.sample_rate)
            for buf in raw
        ]
        tts_dir = workdir / "tts"
        tts_dir.mkdir(exist_ok=True)
        for index, buf in enumerate(synthesized):
            write_wav(tts_dir / f"chunk_{index:03d}.wav", buf)
        return tts_dir
    synthesized = []
    run_stage("tts", do_tts)

    # refine
    refined: list[AudioBuffer]
    def do_refine() -> Path:
        nonlocal refined
        def refine_one(pair):
            index, (synth, source_chunk) = pair
            collected: list[str] = []
            buf = match_segment(
                synth,
                source_chunk,
                cfg.band,
                cfg.max_stretch_rate,
                warn=lambda msg: collected.append(f"segment {index}: {msg}"),
            )
            return buf, collected
        results = pooled(refine_one, list(enumerate(zip(synthesized, chunks))))
        refined = [buf for buf, _ in results]
        for _, collected in results:
            run_warnings.extend(collected)
        refined_dir = workdir / "refined"
        refined_dir.mkdir(exist_ok=True)
        for index, buf in enumerate(refined):
            write_wav(refined_dir / f"chunk_{index:03d}.wav", buf)
        return refined_dir
    refined = []
    run_stage("refine", do_refine)

    # assemble
    track: AudioBuffer
    def do_assemble() -> Path:
        nonlocal track
        track = assemble_track(
            len(source),
            intervals,
            refined,
            cfg.sample_rate,
            warn=run_warnings.append,
        )
        path = workdir / "track.wav"
        write_wav(path, track)
        return path
    track = None  # type: ignore[assignment]
    run_stage("assemble", do_assemble)

    track_path = workdir / "track.wav"
    video_out = workdir / f"dubbed{video.suffix or '.bin'}"

    # lipsync
    def do_lipsync() -> Path:
        if cfg.lipsync_mode == "external_adapter":
            _run_command(
                cfg.lipsync_cmd,
                "lipsync",
                **{"in": str(video), "audio": str(track_path), "out": str(video_out)},
            )
            if not video_out.exists():
                raise StageError("lipsync", f"lip-sync produced no output at {video_out}")
            return video_out
        # audio_replace mode: nothing to do here, the muxer builds the output
        return track_path
    run_stage("lipsync", do_lipsync)

    # mux
    def do_mux() -> Path:
        if cfg.lipsync_mode == "audio_replace":
            _run_command(
                cfg.muxer_cmd,
                "mux",
                **{"in": str(video), "audio": str(track_path), "out": str(video_out)},
            )
            if not video_out.exists():
                raise StageError("mux", f"muxer produced no output at {video_out}")
        return video_out
    run_stage("mux", do_mux)

    transcript = [
        TranscriptEntry(
            index=i,
            start_s=intervals[i].start_sample / cfg.sample_rate,
            end_s=intervals[i].end_sample / cfg.sample_rate,
            source_text=transcripts[i].text,
            target_text=translations[i],
        )
        for i in range(len(intervals))
    ]
    _write_json(
        workdir / "transcript.json",
        [
            {
                "index": e.index,
                "start_s": e.start_s,
                "end_s": e.end_s,
                "source_text": e.source_text,
                "target_text": e.target_text,
            }
            for e in transcript
        ],
    )

    return DubResult(
        video_out=video_out,
        transcript=transcript,
        track=track,
        warnings=run_warnings,
        artifacts=artifacts,
    )
