"""Command-line entry point."""
from __future__ import annotations

import argparse
import logging
import os
import shutil
import sys
from importlib import resources
from pathlib import Path

from .errors import ConfigurationError, DaoGovError, PrerequisiteError
from .pipeline import STAGES, RunConfig, run
from .strategy import RPC_ENV

EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_PREREQ = 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="daogov", description="DAO governance contributor-influence pipeline")
    p.add_argument("--input-dir", type=Path, help="directory with spaces/proposals/votes/contributions/tvl JSONL")
    p.add_argument("--out-dir", type=Path, help="directory receiving one sub-directory per stage")
    p.add_argument("--stage", choices=(*STAGES, "all"), default="all")
    p.add_argument("--threshold", type=int, default=10, help="keep co-voting edges with more than T shared proposals")
    p.add_argument("--lookback-days", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--provider", choices=("fixture", "rpc"), default="fixture")
    p.add_argument("--rpc-endpoint", default=None, help=f"archive node URL (or set ${RPC_ENV})")
    p.add_argument("--balances", type=Path, default=None, help="fixture balance JSONL (default: INPUT/balances.jsonl)")
    p.add_argument("--min-tvl", type=float, default=100_000.0)
    p.add_argument("--top-k", type=int, default=500)
    p.add_argument("--sw-replicates", type=int, default=5)
    p.add_argument("--bootstrap-replicates", type=int, default=100_000)
    p.add_argument("--apl-exact-below", type=int, default=100_000)
    p.add_argument("--apl-sources", type=int, default=1000)
    p.add_argument("--betweenness-exact-below", type=int, default=10_000)
    p.add_argument("--betweenness-pivots", type=int, default=500)
    p.add_argument("--write-demo", type=Path, metavar="DIR", help="copy the bundled demo dataset to DIR and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def write_demo(target: Path) -> None:
    target.mkdir(parents=True, exist_ok=True)
    src = resources.files("daogov") / "data" / "demo"
    for item in src.iterdir():
        if item.name.endswith(".jsonl"):
            with resources.as_file(item) as path:
                shutil.copyfile(path, target / item.name)


def config_from(args) -> RunConfig:
    if args.input_dir is None or args.out_dir is None:
        raise ConfigurationError("--input-dir and --out-dir are required")
    return RunConfig(
        input_dir=args.input_dir,
        out_dir=args.out_dir,
        threshold=args.threshold,
        lookback_days=args.lookback_days,
        seed=args.seed,
        workers=args.workers,
        provider=args.provider,
        rpc_endpoint=args.rpc_endpoint or os.environ.get(RPC_ENV),
        balances=args.balances,
        min_tvl=args.min_tvl,
        top_k=args.top_k,
        sw_replicates=args.sw_replicates,
        bootstrap_replicates=args.bootstrap_replicates,
        apl_exact_below=args.apl_exact_below,
        apl_sources=args.apl_sources,
        betweenness_exact_below=args.betweenness_exact_below,
        betweenness_pivots=args.betweenness_pivots,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.write_demo is not None:
            write_demo(args.write_demo)
            return 0
        cfg = config_from(args)
        run(args.stage, cfg)
    except PrerequisiteError as exc:
        print(f"daogov: {exc}", file=sys.stderr)
        return EXIT_PREREQ
    except ConfigurationError as exc:
        print(f"daogov: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DaoGovError as exc:
        print(f"daogov: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
