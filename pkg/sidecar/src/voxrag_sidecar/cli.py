"""Run the sidecar: voxrag-sidecar [--backend hash|models] [--port 8600] ..."""

from __future__ import annotations

import argparse

from .backends import (DEFAULT_ASR_MODEL, DEFAULT_EMBED_MODEL, DEFAULT_RERANKER_MODEL,
                       SidecarConfig)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="voxrag-sidecar",
                                     description="model sidecar for voxrag")
    parser.add_argument("--backend", choices=["hash", "models"], default="hash")
    parser.add_argument("--embed-model", default=DEFAULT_EMBED_MODEL)
    parser.add_argument("--asr-model", default=DEFAULT_ASR_MODEL)
    parser.add_argument("--reranker-model", default=DEFAULT_RERANKER_MODEL)
    parser.add_argument("--dim", type=int, default=512, help="hash backend dimension")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8600)
    return parser


def main(argv=None) -> int:
    import uvicorn

    from .app import create_app

    args = build_parser().parse_args(argv)
    cfg = SidecarConfig(backend=args.backend, embed_model=args.embed_model,
                        asr_model=args.asr_model, reranker_model=args.reranker_model,
                        dim=args.dim, device=args.device, port=args.port)
    uvicorn.run(create_app(cfg), host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    import sys

    sys.exit(main())
