#!/usr/bin/env python3
"""Run the dubbing job service.

Configuration comes from flags, each overridable by a DUBPIPE_* environment
variable. Example (offline, mock backends and stub tools):

    python scripts/serve.py --data-dir /tmp/dubpipe --port 8000
"""
import argparse
import os
from pathlib import Path

import uvicorn

from dubpipe.pipeline import DEFAULT_EXTRACTOR_CMD, DEFAULT_MUXER_CMD
from dubpipe.service import ServiceConfig, create_app


def env_default(name, fallback):
    return os.environ.get(f"DUBPIPE_{name}", fallback)


def parse_args():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--host", default=env_default("HOST", "127.0.0.1"))
    parser.add_argument("--port", type=int, default=int(env_default("PORT", "8000")))
    parser.add_argument("--data-dir", default=env_default("DATA_DIR", "./dubpipe_data"))
    parser.add_argument(
        "--workers", type=int, default=int(env_default("WORKERS", str(os.cpu_count() or 1)))
    )
    parser.add_argument(
        "--upload-limit-mb", type=int, default=int(env_default("UPLOAD_LIMIT_MB", "100"))
    )
    parser.add_argument(
        "--extractor-cmd", default=env_default("EXTRACTOR_CMD", DEFAULT_EXTRACTOR_CMD)
    )
    parser.add_argument("--muxer-cmd", default=env_default("MUXER_CMD", DEFAULT_MUXER_CMD))
    parser.add_argument("--lipsync-cmd", default=env_default("LIPSYNC_CMD", None))
    parser.add_argument(
        "--lipsync-mode",
        choices=["audio_replace", "external_adapter"],
        default=env_default("LIPSYNC_MODE", "audio_replace"),
    )
    parser.add_argument(
        "--backends", choices=["mock", "remote"], default=env_default("BACKENDS", "mock")
    )
    parser.add_argument("--asr-endpoint", default=env_default("ASR_ENDPOINT", None))
    parser.add_argument("--mt-endpoint", default=env_default("MT_ENDPOINT", None))
    parser.add_argument("--tts-endpoint", default=env_default("TTS_ENDPOINT", None))
    parser.add_argument("--auth-token", default=env_default("AUTH_TOKEN", None))
    parser.add_argument(
        "--static-dir",
        default=env_default("STATIC_DIR", None),
        help="directory of built web client assets to serve at /",
    )
    return parser.parse_args()


def main():
    args = parse_args()
    cfg = ServiceConfig(
        data_dir=Path(args.data_dir),
        workers=args.workers,
        upload_limit_bytes=args.upload_limit_mb * 1024 * 1024,
        extractor_cmd=args.extractor_cmd,
        muxer_cmd=args.muxer_cmd,
        lipsync_cmd=args.lipsync_cmd,
        lipsync_mode=args.lipsync_mode,
        backend_kind=args.backends,
        asr_endpoint=args.asr_endpoint,
        mt_endpoint=args.mt_endpoint,
        tts_endpoint=args.tts_endpoint,
        auth_token=args.auth_token,
        static_dir=Path(args.static_dir) if args.static_dir else None,
    )
    uvicorn.run(create_app(cfg), host=args.host, port=args.port)


if __name__ == "__main__":
    main()
