#!/usr/bin/env python3
"""Offline end-to-end demo: build a synthetic input, dub it, print a summary.

No media tools are required; a stub extractor supplies a constructed
silence/tone/silence track and a stub muxer concatenates its inputs. Useful
for checking the installation and for eyeballing stage timings.

    python scripts/demo_translate.py --target hi --voice female
"""
import argparse
import sys
import tempfile
import textwrap
from pathlib import Path

import numpy as np

from dubpipe import AudioBuffer, BackendConfig, PipelineConfig, VoiceModel, run_pipeline
from dubpipe.audio import write_wav


def build_fixture(workdir: Path) -> Path:
    sr = 16000
    t = np.arange(sr) / sr
    layout = np.concatenate(
        [
            np.zeros(sr, dtype=np.float32),
            (0.5 * np.sin(2 * np.pi * 220 * t)).astype(np.float32),
            np.zeros(sr // 2, dtype=np.float32),
            (0.5 * np.sin(2 * np.pi * 330 * t)).astype(np.float32),
            np.zeros(sr, dtype=np.float32),
        ]
    )
    video = workdir / "demo.mp4"
    video.write_bytes(b"demo-container" * 100)
    write_wav(str(video) + ".wav", AudioBuffer(layout, sr))
    return video


def write_stubs(workdir: Path) -> tuple[str, str]:
    extract = workdir / "stub_extract.py"
    extract.write_text(
        textwrap.dedent(
            """\
            import shutil, sys
            shutil.copyfile(sys.argv[1] + ".wav", sys.argv[2])
            """
        )
    )
    mux = workdir / "stub_mux.py"
    mux.write_text(
        textwrap.dedent(
            """\
            import sys
            with open(sys.argv[3], "wb") as out:
                out.write(open(sys.argv[1], "rb").read())
                out.write(open(sys.argv[2], "rb").read())
            """
        )
    )
    python = sys.executable
    return (
        f"{python} {extract} {{in}} {{out}}",
        f"{python} {mux} {{in}} {{audio}} {{out}}",
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--target", default="hi", choices=["bn", "hi", "ne", "te"])
    parser.add_argument("--voice", default="female", choices=["male", "female"])
    parser.add_argument("--out", default=None, help="output directory (default: temp)")
    args = parser.parse_args()

    out_dir = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix="dubpipe_demo_"))
    out_dir.mkdir(parents=True, exist_ok=True)

    video = build_fixture(out_dir)
    extractor_cmd, muxer_cmd = write_stubs(out_dir)
    cfg = PipelineConfig(
        target_lang=args.target,
        voice=VoiceModel(f"mock-{args.voice}-{args.target}", args.voice, args.target),
        asr=BackendConfig(asr_fixture={1.0: "hello world"}),
        extractor_cmd=extractor_cmd,
        muxer_cmd=muxer_cmd,
    )
    result = run_pipeline(video, cfg, workdir=out_dir / "work")

    print(f"dubbed video: {result.video_out}")
    print(f"track length: {result.track.duration_seconds:.2f} s")
    print("transcript:")
    for entry in result.transcript:
        print(f"  [{entry.start_s:6.2f}-{entry.end_s:6.2f}] {entry.source_text!r} -> {entry.target_text!r}")
    print("stage timings:")
    for artifact in result.artifacts:
        print(f"  {artifact.stage:<10} {artifact.duration_ms:9.1f} ms")
    if result.warnings:
        print("warnings:")
        for warning in result.warnings:
            print(f"  {warning}")


if __name__ == "__main__":
    main()
