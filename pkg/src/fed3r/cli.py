"""
Command line entry point (``python -m src <subcommand>``).

Subcommands: gen, run, coupon, inspect, cost, serve. Exit codes: 0 success,
1 invalid configuration or input, 2 I/O or file format error, 3 numerical failure.
"""

import argparse
import json
import logging
import sys
from os import environ
from pathlib import Path
from typing import Callable, Optional, Sequence

from dotenv import load_dotenv
from pydantic import ValidationError

from src.base.config import Config, ConfigError
from src.base.logger import configure_logging
from src.base.worker_pool import WorkerPool
from src.fed3r.config import load_run_config
from src.fed3r.cost import DATASET_SHAPES, CostAlgorithm, CostParams, cost_table
from src.fed3r.coverage import DEFAULT_FRACTIONS, coupon_rounds
from src.fed3r.data.dataset import read_features_header
from src.fed3r.data.files import atomic_write_text, read_bytes
from src.fed3r.data.partition import manifest_from_text
from src.fed3r.exception.core import Fed3RException, InvalidManifest
from src.fed3r.ridge import read_stats_header
from src.fed3r.runner import generate_files, load_data, rows_to_csv, run_experiment, write_run_outputs

logger = logging.getLogger(__name__)

COVERAGE_COLUMNS = ("K", "kappa", "fraction", "mean_rounds", "std_rounds", "trials")
COST_COLUMNS = (
    "algorithm",
    "down_bytes_per_client",
    "up_bytes_per_client",
    "flops_per_round_per_client",
    "flops_expected_cum_full_pass",
    "one_time_bootstrap_bytes",
    "one_time_rff_map_bytes",
)


def _emit(text: str, output: Optional[Path]) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        atomic_write_text(output, text)


def _float_list(value: str) -> list[float]:
    try:
        return [float(part) for part in value.split(",") if part.strip()]
    except ValueError as error:
        raise argparse.ArgumentTypeError(f"not a comma separated list of numbers: '{value}'") from error


# region: subcommands
def cmd_gen(args: argparse.Namespace, config: Config) -> int:
    paths = generate_files(
        args.out_dir,
        classes=args.classes,
        d=args.d,
        per_class_n=args.per_class,
        separation=args.separation,
        anisotropy=args.anisotropy,
        K=args.clients,
        alpha=args.alpha,
        clients_per_class=args.clients_per_class,
        test_fraction=args.test_fraction,
        seed=args.seed,
    )
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def cmd_run(args: argparse.Namespace, config: Config) -> int:
    overrides = list(args.set or [])
    if args.output is not None:
        overrides.append(f"output_dir={args.output}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.threads is not None:
        overrides.append(f"threads={args.threads}")

    cfg = load_run_config(args.config, overrides)
    # everything is read and validated before the output directory is touched
    data = load_data(cfg.data, cfg.federation.K, cfg.seed)
    with WorkerPool.from_config(config, cfg.threads) as pool:
        outcome = run_experiment(cfg, data, pool)
    paths = write_run_outputs(cfg, outcome)
    print(f"metrics: {paths['metrics']}")
    return 0


def cmd_coupon(args: argparse.Namespace, config: Config) -> int:
    result = coupon_rounds(args.K, args.kappa, args.fractions, args.trials, args.seed)
    _emit(rows_to_csv(result.rows(), COVERAGE_COLUMNS), args.output)
    return 0


def cmd_inspect(args: argparse.Namespace, config: Config) -> int:
    payload = read_bytes(args.path)
    magic = payload[:4]
    if magic == b"F3RD":
        header = read_features_header(args.path)
    elif magic == b"F3RS":
        header = read_stats_header(args.path)
    else:
        try:
            manifest = manifest_from_text(payload.decode("utf-8"))
        except UnicodeDecodeError as error:
            raise InvalidManifest("unrecognized_file") from error
        sizes = manifest.client_sizes()
        header = {
            "kind": "manifest",
            "scheme": manifest.scheme,
            "alpha": manifest.alpha,
            "seed": manifest.seed,
            "K": manifest.K,
            "n": manifest.n,
            "min_client_size": int(sizes.min()),
            "max_client_size": int(sizes.max()),
        }
    print(json.dumps(header, indent=2))
    return 0


def cmd_cost(args: argparse.Namespace, config: Config) -> int:
    K, _, avg_n_k = DATASET_SHAPES[args.preset]
    overrides = {
        "d": args.d,
        "D": args.D,
        "E": args.E,
        "kappa": min(args.kappa, K),
        "include_bootstrap": args.include_bootstrap,
        "ship_rff_map": args.ship_rff_map,
    }
    params = CostParams.from_preset(args.preset, **overrides)
    rows = cost_table(params, args.n_k if args.n_k is not None else avg_n_k, args.algorithms)
    _emit(rows_to_csv(rows, COST_COLUMNS), args.output)
    return 0


def cmd_serve(args: argparse.Namespace, config: Config) -> int:
    import uvicorn

    uvicorn.run(
        "src.main:app", host=args.host, port=args.port, ws="none", reload=args.reload, log_level=args.log_level.lower()
    )
    return 0
# endregion: subcommands


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fed3r-sim", description="Federated closed-form classifier simulator")
    parser.add_argument("--log-level", default=None, help="Overrides LOG_LEVEL")
    subparsers = parser.add_subparsers(dest="command", required=True)

    gen = subparsers.add_parser("gen", help="Generate a synthetic feature file and partition manifest")
    gen.add_argument("--out-dir", type=Path, required=True)
    gen.add_argument("--classes", type=int, default=10)
    gen.add_argument("--d", type=int, default=64)
    gen.add_argument("--per-class", type=int, default=500)
    gen.add_argument("--separation", type=float, default=3.0)
    gen.add_argument("--anisotropy", type=float, default=1.0)
    gen.add_argument("--clients", "-K", type=int, default=50)
    gen.add_argument("--alpha", type=float, default=0.1, help="Dirichlet concentration; 0 gives single-class clients")
    gen.add_argument("--clients-per-class", type=int, default=1)
    gen.add_argument("--test-fraction", type=float, default=0.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.set_defaults(handler=cmd_gen)

    run = subparsers.add_parser("run", help="Run one experiment from a YAML config")
    run.add_argument("config", type=Path)
    run.add_argument("--set", action="append", metavar="KEY=VALUE", help="Override a config field (repeatable)")
    run.add_argument("--threads", type=int, default=None, help="Worker threads (default: FED3R_THREADS or CPU count)")
    run.add_argument("--output", type=Path, default=None)
    run.add_argument("--seed", type=int, default=None)
    run.set_defaults(handler=cmd_run)

    coupon = subparsers.add_parser("coupon", help="Rounds until coverage, batch coupon collector")
    coupon.add_argument("--K", type=int, required=True)
    coupon.add_argument("--kappa", type=int, required=True)
    coupon.add_argument("--trials", type=int, default=1000)
    coupon.add_argument("--seed", type=int, default=0)
    coupon.add_argument("--fractions", type=_float_list, default=list(DEFAULT_FRACTIONS))
    coupon.add_argument("--output", type=Path, default=None)
    coupon.set_defaults(handler=cmd_coupon)

    inspect = subparsers.add_parser("inspect", help="Print the header of a feature, statistics or manifest file")
    inspect.add_argument("path", type=Path)
    inspect.set_defaults(handler=cmd_inspect)

    cost = subparsers.add_parser("cost", help="Per-client cost table for a dataset preset")
    cost.add_argument("--preset", choices=sorted(DATASET_SHAPES), default="landmarks")
    cost.add_argument("--d", type=int, default=1280)
    cost.add_argument("--D", type=int, default=None)
    cost.add_argument("--E", type=int, default=5)
    cost.add_argument("--kappa", type=int, default=10)
    cost.add_argument("--n-k", type=float, default=None, help="Samples per client (default: preset average)")
    cost.add_argument(
        "--algorithms", type=lambda value: value.split(","), default=[alg.value for alg in CostAlgorithm]
    )
    cost.add_argument("--include-bootstrap", action="store_true")
    cost.add_argument("--ship-rff-map", action="store_true")
    cost.add_argument("--output", type=Path, default=None)
    cost.set_defaults(handler=cmd_cost)

    serve = subparsers.add_parser("serve", help="Start the HTTP service")
    serve.add_argument("--host", default="0.0.0.0")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--reload", action="store_true")
    serve.set_defaults(handler=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv(".env")
    args = build_parser().parse_args(argv)
    config = Config(environ)

    try:
        args.log_level = configure_logging(config, args.log_level)
        handler: Callable[[argparse.Namespace, Config], int] = args.handler
        return handler(args, config)
    except (ConfigError, ValidationError) as error:
        print(f"error: {error}".replace("\n", " "), file=sys.stderr)
        return 1
    except Fed3RException as error:
        print(f"error: {error.detail}", file=sys.stderr)
        return error.exit_code
