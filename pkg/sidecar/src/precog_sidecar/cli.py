"""Entry point: precog-sidecar --model bert-base-uncased --port 8400."""

import argparse
import logging

import uvicorn

from .service import DEFAULT_MODEL, SidecarConfig, create_app


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="precog-sidecar",
        description="Serve top-k masked-token predictions from a pretrained "
                    "masked language model.")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help="model name or local path (must have an MLM head)")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8400)
    parser.add_argument("--max-length", type=int, default=512,
                        help="maximum request sequence length")
    parser.add_argument("--device", default="cpu",
                        help="torch device, e.g. cpu or cuda:0")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    config = SidecarConfig(model_id=args.model, host=args.host, port=args.port,
                           max_length=args.max_length, device=args.device)
    uvicorn.run(create_app(config), host=config.host, port=config.port)


if __name__ == "__main__":
    main()
