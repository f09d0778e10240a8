import sys
import textwrap

import numpy as np
import pytest

from dubpipe import AudioBuffer
from dubpipe.audio import write_wav


def make_tone(hz: float, duration_s: float, sr: int = 16000, amp: float = 0.5) -> AudioBuffer:
    t = np.arange(int(round(duration_s * sr))) / sr
    return AudioBuffer(amp * np.sin(2.0 * np.pi * hz * t), sr)


def make_layout(segments, sr: int = 16000) -> AudioBuffer:
    """Concatenate (kind, duration_s[, hz, amp]) pieces; kind is 'sil' or 'tone'."""
    parts = []
    for piece in segments:
        if piece[0] == "sil":
            parts.append(np.zeros(int(round(piece[1] * sr)), dtype=np.float32))
        else:
            _, dur, hz, amp = piece
            t = np.arange(int(round(dur * sr))) / sr
            parts.append((amp * np.sin(2.0 * np.pi * hz * t)).astype(np.float32))
    return AudioBuffer(np.concatenate(parts), sr)


@pytest.fixture
def stub_tools(tmp_path):
    """Stub extractor/muxer/lipsync commands plus a fixture 'video'.

    The extractor copies ``<input>.wav`` to its output, so tests control the
    exact audio a fake video yields. The muxer and lip-sync stubs write
    deterministic concatenations of their inputs.
    """
    scripts = tmp_path / "stubs"
    scripts.mkdir()

    extract = scripts / "stub_extract.py"
    extract.write_text(
        textwrap.dedent(
            """\
            import shutil, sys
            shutil.copyfile(sys.argv[1] + ".wav", sys.argv[2])
            """
        )
    )
    mux = scripts / "stub_mux.py"
    mux.write_text(
        textwrap.dedent(
            """\
            import sys
            with open(sys.argv[3], "wb") as out:
                out.write(b"MUXED\\n")
                out.write(open(sys.argv[1], "rb").read())
                out.write(open(sys.argv[2], "rb").read())
            """
        )
    )
    lipsync = scripts / "stub_lipsync.py"
    lipsync.write_text(
        textwrap.dedent(
            """\
            import sys
            with open(sys.argv[3], "wb") as out:
                out.write(b"LIPSYNCED\\n")
                out.write(open(sys.argv[1], "rb").read())
                out.write(open(sys.argv[2], "rb").read())
            """
        )
    )
    failing = scripts / "stub_fail.py"
    failing.write_text(
        textwrap.dedent(
            """\
            import sys
            print("tool exploded", file=sys.stderr)
            sys.exit(1)
            """
        )
    )
    # self-contained extractor: always emits silence / 440 Hz tone / silence
    synth = scripts / "stub_synth_extract.py"
    synth.write_text(
        textwrap.dedent(
            """\
            import math, struct, sys, wave
            sr = 16000
            samples = [0.0] * sr
            samples += [0.5 * math.sin(2 * math.pi * 440 * i / sr) for i in range(sr)]
            samples += [0.0] * sr
            with wave.open(sys.argv[2], "wb") as w:
                w.setnchannels(1)
                w.setsampwidth(2)
                w.setframerate(sr)
                w.writeframes(
                    b"".join(
                        struct.pack("<h", max(-32768, min(32767, round(s * 32768))))
                        for s in samples
                    )
                )
            """
        )
    )

    python = sys.executable
    return {
        "dir": scripts,
        "extractor_cmd": f"{python} {extract} {{in}} {{out}}",
        "synth_extractor_cmd": f"{python} {synth} {{in}} {{out}}",
        "muxer_cmd": f"{python} {mux} {{in}} {{audio}} {{out}}",
        "lipsync_cmd": f"{python} {lipsync} {{in}} {{audio}} {{out}}",
        "failing_extractor_cmd": f"{python} {failing} {{in}} {{out}}",
    }


@pytest.fixture
def fixture_video(tmp_path):
    """A fake video whose stub-extracted audio is silence / 440 Hz / silence."""
    video = tmp_path / "clip.mp4"
    video.write_bytes(b"\x00fake-video-container\x00" * 64)
    audio = make_layout(
        [("sil", 1.0), ("tone", 1.0, 440.0, 0.5), ("sil", 1.0)]
    )
    write_wav(str(video) + ".wav", audio)
    return video
