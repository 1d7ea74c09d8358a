"""``micropolar <experiment> --config FILE [--out-dir D] [--seed S] [--jobs K]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import EXPERIMENTS, ConfigError, iter_entries, parse_config
from .experiments import EXIT_CONFIG, run_experiment, write_meta


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="micropolar", description="Run a micropolar-flow experiment.")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", required=True, type=Path, help="flat 'section.key = value' file")
    ap.add_argument("--out-dir", type=Path, help="output directory (default: run.out_dir)")
    ap.add_argument("--seed", type=int, help="overrides run.seed")
    ap.add_argument("--jobs", type=int, help="worker processes for independent sub-runs")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _config_errors(text: str, experiment: str) -> list[str]:
    for no, key, raw in iter_entries(text):
        if key == "run.experiment" and raw != experiment:
            return [f"line {no}: run.experiment: config says {raw!r} but {experiment!r} was requested"]
    return []


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    out = args.out_dir
    try:
        text = args.config.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        errors = [f"cannot read {args.config}: {exc}"]
        text = None
    else:
        errors = _config_errors(text, args.experiment)

    cfg = None
    if not errors:
        overrides = {"run.experiment": args.experiment}
        if args.seed is not None:
            overrides["run.seed"] = args.seed
        if args.jobs is not None:
            overrides["run.jobs"] = args.jobs
        if out is not None:
            overrides["run.out_dir"] = str(out)
        try:
            cfg = parse_config(text, overrides)
        except ConfigError as exc:
            errors = exc.errors

    if errors:
        for e in errors:
            print(f"config error: {e}", file=sys.stderr)
        write_meta(
            Path(out) if out is not None else Path("out"),
            {"experiment": args.experiment, "status": "config-error", "exit_code": EXIT_CONFIG, "errors": errors},
        )
        return EXIT_CONFIG

    code = run_experiment(cfg)
    status = {0: "PASS", 1: "FAIL"}.get(code, "ERROR")
    print(f"{cfg.experiment}: {status} (see {Path(cfg.out_dir) / 'meta.json'})")
    return code


if __name__ == "__main__":
    sys.exit(main())
