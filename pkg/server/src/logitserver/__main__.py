"""Run the server: python -m logitserver --model <checkpoint> [--port 8100]."""

import argparse
import logging
import os

import uvicorn

from .app import create_app
from .model import ServerConfig


def main():
    ap = argparse.ArgumentParser(
        prog="logitserver",
        description="Serve a causal LM's tokenizer and next-token log-probabilities.",
    )
    ap.add_argument("--model", default=os.environ.get("LOGITSERVER_MODEL"),
                    required=os.environ.get("LOGITSERVER_MODEL") is None,
                    help="checkpoint path or hub id (env: LOGITSERVER_MODEL)")
    ap.add_argument("--device", default="cpu")
    ap.add_argument("--context-limit", type=int, default=None,
                    help="cap the usable context below the model maximum")
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int,
                    default=int(os.environ.get("LOGITSERVER_PORT", "8100")))
    args = ap.parse_args()

    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = ServerConfig(
        model_id=args.model, device=args.device,
        context_limit=args.context_limit, port=args.port, host=args.host,
    )
    uvicorn.run(create_app(cfg), host=cfg.host, port=cfg.port, log_level="warning")


if __name__ == "__main__":
    main()
