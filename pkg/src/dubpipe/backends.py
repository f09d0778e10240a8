"""Pluggable ASR, translation, and TTS stages.

Each operation dispatches on ``BackendConfig.kind``:

* ``mock`` — deterministic offline implementations. The mock recognizer maps
  duration-bucketed chunks to canned text, the mock translator applies a
  word-for-word dictionary, and the mock synthesizer emits one 80 ms sine
  per character whose frequency depends on the voice gender and the
  character, so the refinement stages have real duration and pitch work to
  do without any network.
* ``remote`` — a generic HTTP/JSON adapter: POST a JSON body, read the
  service's reply verbatim. Failures raise BackendError tagged with the
  stage, after at most ``retries`` retries.
"""
from __future__ import annotations

import base64
import itertools
from dataclasses import dataclass
from importlib import resources
from typing import Mapping, Optional

import numpy as np
import requests

from .audio import AudioBuffer, decode_wav
from .errors import BackendError

SUPPORTED_LANGUAGES = frozenset({"en", "bn", "hi", "ne", "te"})
TARGET_LANGUAGES = frozenset({"bn", "hi", "ne", "te"})
GENDERS = frozenset({"male", "female"})

# mock TTS waveform layout
MOCK_TTS_SECONDS_PER_CHAR = 0.08
MOCK_TTS_BASE_HZ = {"male": 110.0, "female": 220.0}
_MOCK_TTS_AMPLITUDE = 0.5

# fallback transcript vocabulary for chunks missing from the fixture table
_FILLER_WORDS = ("hello", "world", "this", "is", "a", "test", "good", "morning")


def validate_language(code: str) -> str:
    if code not in SUPPORTED_LANGUAGES:
        raise ValueError(
            f"unsupported language {code!r}; expected one of "
            f"{sorted(SUPPORTED_LANGUAGES)}"
        )
    return code


@dataclass(frozen=True)
class VoiceModel:
    id: str
    gender: str
    language: str

    def __post_init__(self):
        if not self.id:
            raise ValueError("voice id must be non-empty")
        if self.gender not in GENDERS:
            raise ValueError(f"gender must be male or female, got {self.gender!r}")
        validate_language(self.language)


@dataclass(frozen=True)
class TranscriptChunk:
    segment_index: int
    text: str
    language: str


@dataclass(frozen=True)
class BackendConfig:
    """Stage backend selection plus transport and mock-fixture knobs."""

    kind: str = "mock"
    endpoint: Optional[str] = None
    timeout_s: float = 10.0
    retries: int = 2
    # mock-only: duration bucket (seconds, 0.1 resolution) -> transcript text
    asr_fixture: Optional[Mapping[float, str]] = None
    # mock-only: path to a "source<TAB>target" dictionary overriding the bundled one
    dictionary_path: Optional[str] = None
    sample_rate: int = 16000

    def __post_init__(self):
        if self.kind not in ("mock", "remote"):
            raise ValueError(f"kind must be mock or remote, got {self.kind!r}")
        if self.kind == "remote" and not self.endpoint:
            raise ValueError("remote backend requires an endpoint")
        if self.timeout_s <= 0:
            raise ValueError(f"timeout_s must be positive, got {self.timeout_s}")
        if self.retries < 0:
            raise ValueError(f"retries must be non-negative, got {self.retries}")


def _post_json(cfg: BackendConfig, stage: str, payload: dict) -> dict:
    last_error = None
    for _ in range(cfg.retries + 1):
        try:
            response = requests.post(cfg.endpoint, json=payload, timeout=cfg.timeout_s)
            if response.status_code >= 400:
                last_error = f"HTTP {response.status_code}: {response.text[:200]}"
                continue
            return response.json()
        except requests.RequestException as exc:
            last_error = str(exc)
    raise BackendError(stage, f"{stage} backend failed after {cfg.retries + 1} attempts: {last_error}")


def duration_bucket(buf: AudioBuffer) -> float:
    return round(buf.duration_seconds, 1)


def _mock_transcript(buf: AudioBuffer, cfg: BackendConfig) -> str:
    bucket = duration_bucket(buf)
    if cfg.asr_fixture is not None and bucket in cfg.asr_fixture:
        return cfg.asr_fixture[bucket]
    # no fixture entry: deterministic filler sized by duration
    n_words = max(1, int(round(bucket / 0.4)))
    return " ".join(itertools.islice(itertools.cycle(_FILLER_WORDS), n_words))


def asr_transcribe(
    chunk: AudioBuffer,
    source_lang: str,
    cfg: BackendConfig,
    segment_index: int = 0,
) -> TranscriptChunk:
    """Transcribe one audio chunk."""
    validate_language(source_lang)
    if len(chunk) == 0:
        raise ValueError("cannot transcribe an empty chunk")
    if cfg.kind == "mock":
        text = _mock_transcript(chunk, cfg)
    else:
        from .audio import encode_wav

        reply = _post_json(
            cfg,
            "asr",
            {
                "audio_b64": base64.b64encode(encode_wav(chunk)).decode("ascii"),
                "src": source_lang,
            },
        )
        text = reply.get("text", "")
    return TranscriptChunk(segment_index=segment_index, text=text, language=source_lang)


def _load_dictionary(src: str, tgt: str, path: Optional[str]) -> dict[str, str]:
    if path is not None:
        content = open(path, encoding="utf-8").read()
    else:
        name = f"dict_{src}_{tgt}.tsv"
        try:
            content = resources.files("dubpipe.data").joinpath(name).read_text("utf-8")
        except FileNotFoundError:
            return {}
    table = {}
    for line in content.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        source, _, target = line.partition("\t")
        if target:
            table[source] = target
    return table


def translate_text(text: str, src: str, tgt: str, cfg: BackendConfig) -> str:
    """Translate text word for word (mock) or via the remote service."""
    validate_language(src)
    validate_language(tgt)
    if src == tgt:
        raise ValueError(f"source and target language are both {src!r}")
    if not text:
        raise ValueError("cannot translate empty text")
    if cfg.kind == "mock":
        table = _load_dictionary(src, tgt, cfg.dictionary_path)
        return " ".join(table.get(word, word) for word in text.split())
    reply = _post_json(cfg, "translate", {"text": text, "src": src, "tgt": tgt})
    return reply.get("translation", reply.get("text", ""))


def mock_tts_char_hz(char: str, gender: str) -> float:
    return MOCK_TTS_BASE_HZ[gender] + 10.0 * (ord(char) % 16)


def tts_synthesize(text: str, voice: VoiceModel, cfg: BackendConfig) -> AudioBuffer:
    """Synthesize speech for the text in the given voice."""
    if not text:
        raise ValueError("cannot synthesize empty text")
    if cfg.kind == "mock":
        sr = cfg.sample_rate
        samples_per_char = int(round(MOCK_TTS_SECONDS_PER_CHAR * sr))
        pieces = []
        for char in text:
            hz = mock_tts_char_hz(char, voice.gender)
            t = np.arange(samples_per_char) / sr
            pieces.append(_MOCK_TTS_AMPLITUDE * np.sin(2.0 * np.pi * hz * t))
        return AudioBuffer(np.concatenate(pieces), sr)
    reply = _post_json(
        cfg,
        "tts",
        {
            "text": text,
            "voice": {"id": voice.id, "gender": voice.gender, "language": voice.language},
        },
    )
    try:
        wav_bytes = base64.b64decode(reply["audio_b64"])
    except KeyError:
        raise BackendError("tts", "tts backend reply missing audio_b64")
    return decode_wav(wav_bytes)
