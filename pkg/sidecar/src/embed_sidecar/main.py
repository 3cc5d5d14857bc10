"""Entry point: flags override the HOST/PORT/MODEL/BATCH_LIMIT environment."""

from __future__ import annotations

import argparse
import os

import uvicorn

from .app import DEFAULT_BATCH_LIMIT, create_app
from .encoders import DEFAULT_MODEL, KNOWN_MODELS, SentenceTransformerEncoder


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embed-sidecar", description=__doc__)
    parser.add_argument("--host", default=os.environ.get("HOST", "127.0.0.1"))
    parser.add_argument("--port", type=int, default=int(os.environ.get("PORT", "8000")))
    parser.add_argument(
        "--model",
        choices=KNOWN_MODELS,
        default=os.environ.get("MODEL", DEFAULT_MODEL),
    )
    parser.add_argument(
        "--batch-limit",
        type=int,
        default=int(os.environ.get("BATCH_LIMIT", str(DEFAULT_BATCH_LIMIT))),
    )
    parser.add_argument("--device", default=os.environ.get("DEVICE"))
    return parser


def main(argv=None) -> None:
    args = build_parser().parse_args(argv)
    encoder = SentenceTransformerEncoder(args.model, device=args.device)
    app = create_app(encoder, batch_limit=args.batch_limit)
    uvicorn.run(app, host=args.host, port=args.port)


if __name__ == "__main__":
    main()
