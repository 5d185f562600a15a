import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import yaml
from dotenv import load_dotenv

from . import __version__
from .experiment import ConfigError, ExperimentConfig, load_config
from .tools import (
    AnalyzeTool,
    ExactTool,
    PlotTool,
    PolyaTool,
    SimulateTool,
    ValidateTool,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_USAGE = 2


class QuantumGraphLab:
    """Runs the commands listed in ``config/commands.yaml`` against one experiment config."""

    def __init__(self, config_path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None,
                 long_run: bool = False):
        load_dotenv()
        self.config_dir = Path(__file__).parent / "config"
        self.commands = self._load_commands()
        self.config: ExperimentConfig = load_config(config_path, overrides)
        self.output_dir = Path(self.config.output_dir)
        self.long_run = long_run
        if long_run:
            logger.warning("--long: exhaustive sums unlocked up to n=10; expect long runtimes")

    def _load_commands(self) -> Dict[str, Dict[str, Any]]:
        with open(self.config_dir / "commands.yaml", "r", encoding="utf-8") as f:
            return yaml.safe_load(f)

    def _tools(self) -> Dict[str, Any]:
        out = str(self.output_dir)
        threads = self.config.threads
        return {
            "ExactTool": ExactTool(output_dir=out),
            "PolyaTool": PolyaTool(output_dir=out),
            "SimulateTool": SimulateTool(output_dir=out, threads=threads),
            "AnalyzeTool": AnalyzeTool(output_dir=out),
            "ValidateTool": ValidateTool(output_dir=out, threads=threads),
            "PlotTool": PlotTool(output_dir=out),
        }

    def metadata(self, command: str) -> Dict[str, Any]:
        """Header written above every CSV; enough to re-run ``command`` exactly."""
        return {
            "version": __version__,
            "command": command,
            "config_sha256": self.config.sha256(),
            "seed": self.config.seed,
            "long": self.long_run,
            "config": self.config.canonical_json(),
        }

    def run(self, command: str) -> int:
        """Run one command and return the process exit status."""
        if command not in self.commands:
            raise ConfigError(f"unknown command {command!r}; expected one of {sorted(self.commands)}", "command")
        self.output_dir.mkdir(parents=True, exist_ok=True)
        tool = self._tools()[self.commands[command]["tools"][0]]
        logger.info(f"Starting {command} (config {self.config.sha256()[:12]})")
        logger.info(f"Output {self.output_dir}, {self.config.threads} worker(s)")
        meta = self.metadata(command)

        if command == "exact":
            tool._run(config=self.config, metadata=meta, long_run=self.long_run)
        elif command in ("analyze", "reweight"):
            tool._run(config=self.config, metadata=meta, mode=command)
        elif command == "validate":
            results = tool._run(config=self.config, metadata=meta, long_run=self.long_run)
            failed = [r.check for r in results if not r.passed]
            if failed:
                logger.error(f"Validation failed: {', '.join(failed)}")
                return EXIT_VALIDATION_FAILED
        else:
            tool._run(config=self.config, metadata=meta)

        logger.info(f"Finished {command}")
        return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quantum-graphs",
        description="Exact and Monte Carlo thermodynamics of labeled and unlabeled quantum graph states.",
    )
    parser.add_argument("command", choices=["exact", "polya", "simulate", "analyze", "reweight", "validate", "plot"])
    parser.add_argument("--config", help="Experiment config (flat YAML)")
    parser.add_argument("--out", help="Output directory, overrides output_dir")
    parser.add_argument("--threads", type=int, help="Worker processes for Monte Carlo grids")
    parser.add_argument("--seed", type=int, help="Master seed, overrides the config")
    parser.add_argument("--long", action="store_true", help="Unlock exhaustive sums for n = 8..10")
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    overrides = {"output_dir": args.out, "threads": args.threads, "seed": args.seed}
    try:
        lab = QuantumGraphLab(args.config, overrides, long_run=args.long)
        return lab.run(args.command)
    except ConfigError as e:
        print(f"✗ Config error: {e}", file=sys.stderr)
    except FileNotFoundError as e:
        print(f"✗ Missing input: {e}", file=sys.stderr)
    except ValueError as e:
        print(f"✗ {args.command} failed: {e}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
