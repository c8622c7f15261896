"""``sector-embed`` command line entry point."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import pipeline
from .config import config_keys, load_config
from .errors import SectorEmbedError

COMMANDS = ("ingest", "contexts", "train", "knn", "graph", "mismatch", "classify", "synth", "all")


def _literal(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


USAGE_EXIT = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(json.dumps({"error": "usage", "message": message}), file=sys.stderr)
        sys.exit(USAGE_EXIT)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sector-embed",
                     description="Multimodal company embeddings and industry classification.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON config file (defaults are used when omitted)")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--modality", default="both", choices=("returns", "news", "both"), help="train only")
    parser.add_argument("--embedding", default=None,
                        help="returns | news | multimodal (classify also accepts 'all')")
    parser.add_argument("--query", help="knn query ticker")
    parser.add_argument("--k", type=int, help="knn neighbours")
    overrides = parser.add_argument_group("config overrides")
    for key, _ in config_keys():
        overrides.add_argument(f"--{key}", dest=f"ov:{key}", metavar="VALUE", type=_literal,
                               default=argparse.SUPPRESS)
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k[3:]: v for k, v in vars(args).items() if k.startswith("ov:")}
    try:
        cfg = load_config(args.config, overrides)
        cmd = args.command
        if cmd == "synth":
            result = pipeline.cmd_synth(cfg)
        elif cmd == "ingest":
            result = pipeline.cmd_ingest(cfg)
        elif cmd == "contexts":
            result = pipeline.cmd_contexts(cfg)
        elif cmd == "train":
            result = pipeline.cmd_train(cfg, args.modality)
        elif cmd == "knn":
            result = pipeline.cmd_knn(cfg, args.query, args.k, args.embedding or "multimodal")
        elif cmd == "graph":
            result = pipeline.cmd_graph(cfg, args.embedding)
        elif cmd == "mismatch":
            result = pipeline.cmd_mismatch(cfg, args.embedding or "multimodal")
        elif cmd == "classify":
            result = pipeline.cmd_classify(cfg, args.embedding or "all")
        else:
            result = pipeline.run_all(cfg)
    except SectorEmbedError as exc:
        print(json.dumps({"error": exc.category, "message": str(exc)}), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}), file=sys.stderr)
        return 7

    if isinstance(result, dict) and "table" in result:
        print(result["table"], end="")
    else:
        print(json.dumps(result, indent=2, default=str))
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
