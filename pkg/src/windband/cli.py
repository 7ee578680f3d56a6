"""Command-line front end.

Exit codes: 0 success, 1 input or configuration error, 2 fit failure,
3 partial success (some leads skipped).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .errors import FitError, InputError, StageError
from .pipeline import (
    cmd_convert,
    cmd_fit_uncertainty,
    cmd_fit_variability,
    cmd_pipeline,
    cmd_synth,
    load_config,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_FIT = 2
EXIT_PARTIAL = 3

_COMMANDS = {
    "synth": cmd_synth,
    "fit-variability": cmd_fit_variability,
    "fit-uncertainty": cmd_fit_uncertainty,
    "convert": cmd_convert,
    "pipeline": cmd_pipeline,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="windband",
        description="Estimate wind power uncertainty sets from wind-speed history.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    help_text = {
        "synth": "generate synthetic measurement and forecast files",
        "fit-variability": "fit the intra-hour variability law",
        "fit-uncertainty": "fit per-lead forecast-error bands",
        "convert": "convert fitted bands to speed/power uncertainty sets",
        "pipeline": "run all stages and write a consolidated report",
    }
    for name in _COMMANDS:
        sp = sub.add_parser(name, help=help_text[name])
        sp.add_argument("--config", required=True, help="JSON configuration file")
        sp.add_argument("--seed", type=int, help="override the configured seed")
        sp.add_argument("--lead", type=float, help="restrict the run to one lead time")
        sp.add_argument(
            "--forecast-mean", type=float, dest="forecast_mean",
            help="override the forecast mean used for conversion (m/s)",
        )
        sp.add_argument("--out", help="override the output directory")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.lead is not None:
            overrides["leads"] = (args.lead,)
        if args.forecast_mean is not None:
            overrides["forecast_mean"] = args.forecast_mean
        if args.out is not None:
            overrides["output_dir"] = args.out
        if overrides:
            cfg = dataclasses.replace(cfg, **overrides)
        report = _COMMANDS[args.command](cfg)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FIT if isinstance(exc.cause, FitError) else EXIT_INPUT
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FIT

    skipped = report.get("skipped_leads") or report.get("uncertainty", {}).get(
        "skipped_leads"
    )
    print(f"{args.command}: wrote outputs to {cfg.output_dir}")
    if skipped:
        for tag, reason in skipped.items():
            print(f"lead {tag} skipped: {reason}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
