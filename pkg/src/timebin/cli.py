from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .commands import cmd_design, cmd_franson, cmd_simulate, cmd_sweep
from .config import ConfigError, load_config
from .designer import DesignError, DesignNotConverged
from .dynamics import IntegrationError
from .franson import DelayMismatchError

COMMANDS = {
    "simulate": cmd_simulate,
    "design": cmd_design,
    "franson": cmd_franson,
    "sweep": cmd_sweep,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="timebin",
        description="Heralded multi-time-bin single-photon source: simulate, design read pulses, "
        "and run the Franson coherence test.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--out", help="output directory (overrides [output] dir)")
        p.add_argument("--seed", type=int, help="Monte Carlo seed (overrides [franson] seed)")
        p.add_argument("--fixed-step", type=float, metavar="DT",
                       help="fixed RK4 step in 1/gamma instead of the adaptive integrator")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out) if args.out else None
    try:
        cfg = load_config(args.config)
        if args.command == "franson":
            if args.fixed_step is not None:
                raise ConfigError("--fixed-step", "not used by franson")
            cmd_franson(cfg, out, args.seed)
        else:
            if args.seed is not None:
                raise ConfigError("--seed", f"not used by {args.command}")
            COMMANDS[args.command](cfg, out, args.fixed_step)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DesignNotConverged as exc:
        print(f"design infeasible: {exc}", file=sys.stderr)
        return 3
    except (DesignError, DelayMismatchError, IntegrationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
