"""Command-line entry point: pipeline stages, server, fixture generation.

    rimap all --config config.json     run every stage into the run dir
    rimap ingest|enrich|build ...      run up to the named stage
    rimap serve --config config.json   serve the built snapshot over HTTP
    rimap fixture --out DIR            generate the synthetic input set

Exit codes: 0 ok, 2 configuration problem, 1 anything else.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rimap")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("ingest", "enrich", "build", "all", "serve"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="pipeline config JSON")
        if name == "serve":
            p.add_argument("--port", type=int, default=None, help="override config port")
            p.add_argument("--host", default=None, help="override config host")
            p.add_argument("--ui-dir", default=None,
                           help="serve a built UI directory at /")

    fx = sub.add_parser("fixture")
    fx.add_argument("--out", required=True, help="output directory")
    fx.add_argument("--eu", type=int, default=300)
    fx.add_argument("--regional", type=int, default=200)
    fx.add_argument("--seed", type=int, default=20240401)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )

    if args.command == "fixture":
        from .fixtures import generate_fixture

        paths = generate_fixture(args.out, n_eu=args.eu, n_regional=args.regional,
                                 seed=args.seed)
        print(f"fixture written to {paths.root}")
        print(f"config: {paths.config}")
        return 0

    from .config import ConfigError, load_config

    try:
        config = load_config(args.config)
    except ConfigError as err:
        for problem in err.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 2

    if args.command in ("ingest", "enrich", "build", "all"):
        from .pipeline import run_pipeline

        until = "build" if args.command == "all" else args.command
        try:
            result = run_pipeline(config, until=until)
        except Exception as err:  # surface stage failures with context
            logging.getLogger("rimap").error("pipeline failed: %s", err)
            return 1
        for stage, seconds in result.manifest.get("stageTimings", {}).items():
            print(f"{stage}: {seconds}s")
        print(f"artifacts in {config.run_dir}")
        return 0

    if args.command == "serve":
        from . import api
        from .pipeline import ARTIFACTS, run_pipeline
        from .snapshot import read_snapshot

        snapshot_path = config.run_dir / ARTIFACTS["snapshot"]
        if not snapshot_path.exists():
            print("snapshot missing; building first", file=sys.stderr)
            run_pipeline(config, until="build")
        snapshot = read_snapshot(snapshot_path)
        api.serve(
            snapshot,
            host=args.host or config.server.host,
            port=args.port or config.server.port,
            cors_origins=config.server.cors_origins,
            ui_dir=args.ui_dir,
        )
        return 0

    return 1  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
