"""Command-line front door.

Subcommands:
    translate   dub a video file offline
    agreement   compute rater-agreement statistics from a ratings CSV
    pcc-check   recompute pairwise-correlation aggregates from a matrix bundle

``translate`` exits non-zero with a stage-specific code when a stage fails
(see STAGE_EXIT_CODES); usage errors exit 2.
"""
from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .agreement import (
    CRITERIA,
    PairwiseMatrix,
    build_report,
    load_ratings_csv,
    mean_pairwise,
    report_to_json,
    report_to_table,
)
from .backends import GENDERS, TARGET_LANGUAGES, BackendConfig, VoiceModel
from .errors import ConfigError, DubError, StageError
from .pipeline import STAGES, PipelineConfig, run_pipeline

STAGE_EXIT_CODES = {stage: 10 + i for i, stage in enumerate(STAGES)}
EXIT_ERROR = 1
EXIT_USAGE = 2

PCC_TOLERANCE = 0.001


def _add_translate_parser(subparsers) -> None:
    p = subparsers.add_parser("translate", help="dub a video file")
    p.add_argument("--in", dest="input", required=True, help="input video file")
    p.add_argument(
        "--target", required=True, help=f"target language {sorted(TARGET_LANGUAGES)}"
    )
    p.add_argument("--voice", required=True, help="voice gender: male or female")
    p.add_argument(
        "--backends",
        default="mock",
        choices=["mock", "remote"],
        help="backend kind for ASR/MT/TTS",
    )
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument(
        "--lipsync",
        default="audio-replace",
        choices=["audio-replace", "external"],
        help="produce output by muxing the dubbed track or via an external lip-sync command",
    )
    p.add_argument("--extractor-cmd", default=PipelineConfig.extractor_cmd)
    p.add_argument("--muxer-cmd", default=PipelineConfig.muxer_cmd)
    p.add_argument("--lipsync-cmd", default=None)
    p.add_argument("--asr-endpoint", default=None)
    p.add_argument("--mt-endpoint", default=None)
    p.add_argument("--tts-endpoint", default=None)


def cmd_translate(args: argparse.Namespace) -> int:
    if args.target not in TARGET_LANGUAGES:
        print(
            f"error: --target must be one of {sorted(TARGET_LANGUAGES)}, "
            f"got {args.target!r}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    if args.voice not in GENDERS:
        print(
            f"error: --voice must be male or female, got {args.voice!r}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    video = Path(args.input)
    if not video.is_file():
        print(f"error: input file not found: {video}", file=sys.stderr)
        return STAGE_EXIT_CODES["extract"]

    def backend(endpoint):
        if args.backends == "remote":
            return BackendConfig(kind="remote", endpoint=endpoint)
        return BackendConfig()

    try:
        cfg = PipelineConfig(
            target_lang=args.target,
            voice=VoiceModel(
                id=f"{args.backends}-{args.voice}-{args.target}",
                gender=args.voice,
                language=args.target,
            ),
            asr=backend(args.asr_endpoint),
            mt=backend(args.mt_endpoint),
            tts=backend(args.tts_endpoint),
            lipsync_mode=(
                "external_adapter" if args.lipsync == "external" else "audio_replace"
            ),
            extractor_cmd=args.extractor_cmd,
            muxer_cmd=args.muxer_cmd,
            lipsync_cmd=args.lipsync_cmd,
        )
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        result = run_pipeline(video, cfg, workdir=out_dir)
    except StageError as exc:
        print(f"error in stage {exc.stage}: {exc}", file=sys.stderr)
        return STAGE_EXIT_CODES.get(exc.stage, EXIT_ERROR)

    print(f"output video: {result.video_out}")
    print(f"transcript:   {out_dir / 'transcript.json'}")
    print(f"segments:     {out_dir / 'segments.json'}")
    print("stage timings:")
    for artifact in result.artifacts:
        print(f"  {artifact.stage:<10} {artifact.duration_ms:9.1f} ms")
    for warning in result.warnings:
        print(f"warning: {warning}")
    return 0


def cmd_agreement(args: argparse.Namespace) -> int:
    try:
        records = load_ratings_csv(args.ratings)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.language:
        records = [r for r in records if r.language == args.language]
    if args.criterion:
        records = [r for r in records if r.criterion == args.criterion]
    try:
        report = build_report(records)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.format == "json":
        print(report_to_json(report))
    else:
        print(report_to_table(report))
        for warning in report.warnings:
            print(f"warning: {warning}", file=sys.stderr)
    return 0


def default_matrices_path() -> Path:
    return Path(str(resources.files("dubpipe.data").joinpath("pcc_matrices.json")))


def cmd_pcc_check(args: argparse.Namespace) -> int:
    path = Path(args.matrices) if args.matrices else default_matrices_path()
    try:
        bundle = json.loads(Path(path).read_text(encoding="utf-8"))
        entries = bundle["matrices"]
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot load matrix bundle: {exc}", file=sys.stderr)
        return EXIT_ERROR

    all_match = True
    for entry in entries:
        try:
            matrix = PairwiseMatrix(
                raters=tuple(entry["raters"]), values=np.array(entry["values"])
            )
            computed = mean_pairwise(matrix)
        except (ValueError, KeyError) as exc:
            print(f"error: bad matrix entry: {exc}", file=sys.stderr)
            return EXIT_ERROR
        expected = float(entry["expected_mean"])
        match = abs(computed - expected) <= PCC_TOLERANCE
        all_match &= match
        print(
            f"{entry['language']:<8} {entry['criterion']:<20} "
            f"computed={computed:+.3f} expected={expected:+.3f} "
            f"{'MATCH' if match else 'MISMATCH'}"
        )
    return 0 if all_match else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dubpipe", description="video dubbing pipeline and evaluation tools"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    _add_translate_parser(subparsers)

    p = subparsers.add_parser("agreement", help="rater agreement from a ratings CSV")
    p.add_argument("--ratings", required=True, help="ratings CSV path")
    p.add_argument("--language", default=None)
    p.add_argument("--criterion", default=None, choices=list(CRITERIA))
    p.add_argument("--format", default="table", choices=["table", "json"])

    p = subparsers.add_parser(
        "pcc-check", help="verify pairwise-correlation aggregates against a bundle"
    )
    p.add_argument(
        "--matrices", default=None, help="matrix bundle JSON (default: bundled fixture)"
    )

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "translate": cmd_translate,
        "agreement": cmd_agreement,
        "pcc-check": cmd_pcc_check,
    }
    try:
        return handlers[args.command](args)
    except DubError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
