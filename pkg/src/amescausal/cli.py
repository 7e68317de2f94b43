"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 stage failure.
Failures emit a one-line JSON error record on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import load_config, write_default_config
from .errors import ConfigError, DataError, PipelineError, SchemaError, StageError
from .pipeline import COMMANDS, run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_STAGE = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amescausal",
        description="Housing-price pipeline: boosted trees, SHAP attribution, "
                    "causal effects, and rank alignment.")
    sub = parser.add_subparsers(dest="command", required=True)

    init = sub.add_parser("init-config", help="write a default config file")
    init.add_argument("path", help="where to write the JSON config")

    for command in COMMANDS:
        p = sub.add_parser(command, help=f"run the {command} stage")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--data", help="input CSV path")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="master random seed")
        p.add_argument("--model", choices=["leafwise", "levelwise", "both"],
                       help="model family to run")
        p.add_argument("--top-k", type=int, dest="top_k",
                       help="attribution features entering the alignment")
        p.add_argument("--treatment", help="what-if / heterogeneity feature")
        p.add_argument("--value", help="what-if intervention value")
        p.add_argument("--cost", type=float, help="policy-tree treatment cost")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    out = {}
    for key in ("data", "out", "seed", "model"):
        if getattr(args, key, None) is not None:
            out[key] = getattr(args, key)
    if getattr(args, "top_k", None) is not None:
        out["shap_top_k"] = args.top_k
    causal = {}
    if getattr(args, "cost", None) is not None:
        causal["cost"] = args.cost
    if getattr(args, "treatment", None) is not None:
        causal["heterogeneity_feature"] = args.treatment
    if causal:
        out["causal"] = causal
    whatif = {}
    if getattr(args, "treatment", None) is not None:
        whatif["feature"] = args.treatment
    if getattr(args, "value", None) is not None:
        whatif["value"] = args.value
    if whatif:
        out["whatif"] = whatif
    return out


def _fail(exc: PipelineError, code: int) -> int:
    record = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, StageError) and exc.required_command:
        record["required_command"] = exc.required_command
    print(json.dumps(record), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "init-config":
        write_default_config(args.path)
        return EXIT_OK
    try:
        cfg = load_config(args.config, _overrides(args))
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG)
    try:
        run(args.command, cfg)
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG)
    except (DataError, SchemaError) as exc:
        return _fail(exc, EXIT_DATA)
    except PipelineError as exc:
        return _fail(exc, EXIT_STAGE)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
