"""Entry point: `dermsoap-sidecar [--config file.yaml]`."""

import argparse

import uvicorn

from .app import create_app
from .config import load_config


def main() -> int:
    parser = argparse.ArgumentParser(prog="dermsoap-sidecar")
    parser.add_argument("--config", default=None, help="YAML config file")
    parser.add_argument("--host", default=None)
    parser.add_argument("--port", type=int, default=None)
    args = parser.parse_args()

    config = load_config(args.config)
    host = args.host or config.host
    port = args.port if args.port is not None else config.port
    uvicorn.run(create_app(config), host=host, port=port, log_level="info")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
