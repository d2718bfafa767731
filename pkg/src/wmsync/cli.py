"""Command-line workbench: ``wmsync <subcommand> [options]``.

Exit codes: 0 success, 1 usage error, 2 runtime failure or decoder failure
rate above the configured threshold.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .exceptions import ConfigError, WmsyncError
from .markov import BANDS, TransitionMatrix, generate_matrix_for_entropy
from .plotting import emit_plots

log = logging.getLogger("wmsync")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, out_help: str = "output directory"):
    p.add_argument("--config", type=Path, help="JSON file overriding config defaults")
    p.add_argument("--preset", choices=("desk", "paper"), default=None)
    p.add_argument("--out", type=Path, default=None, help=out_help)
    p.add_argument("--decoders", default=None, help="comma list from dm1,dm2,fsmc")
    p.add_argument("--seed", type=int, default=None, help="base seed")
    p.add_argument("--workers", type=int, default=None, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wmsync", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-matrix", help="rejection-sample a 4-state matrix for a target entropy")
    p.add_argument("--target", type=float, required=True)
    p.add_argument("--tol", type=float, default=0.001)
    p.add_argument("--band", type=int, choices=sorted(BANDS), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-attempts", type=int, default=100_000)
    p.add_argument("--out", type=Path, default=None, help="matrix JSON file (stdout if omitted)")

    p = sub.add_parser("simulate", help="run N channel uses over a fixed matrix")
    p.add_argument("--matrix", type=Path, required=True)
    p.add_argument("--runs", type=int, default=100)
    _common(p)

    for name, help_ in (("sweep-overall", "fresh matrices per entropy target"),
                        ("sweep-constant", "one fixed matrix per entropy target")):
        _common(sub.add_parser(name, help=help_))

    for name, help_ in (("analyze-errors", "DM1/FSMC win-tie counts per error level"),
                        ("analyze-ps", "mean NIIS per realised substitution count")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.add_argument("--input", type=Path, default=None, help="constant.csv path")

    p = sub.add_parser("plot", help="render SVG plots from overall.csv / constant.csv")
    _common(p)
    return parser


def _config(args) -> ex.ExperimentConfig:
    cfg = ex.ExperimentConfig.preset(args.preset) if args.preset else ex.ExperimentConfig()
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        cfg = ex.ExperimentConfig.from_dict(data, base=cfg)
    overrides = {}
    if args.out is not None:
        overrides["out_dir"] = str(args.out)
    if args.decoders:
        overrides["decoders"] = tuple(d.strip() for d in args.decoders.split(",") if d.strip())
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if overrides:
        cfg = ex.ExperimentConfig.from_dict(overrides, base=cfg)
    return cfg


def _failure_check(results, cfg) -> int:
    if not results:
        return EXIT_OK
    rate = sum(r.failed for r in results) / len(results)
    if rate > cfg.failure_threshold:
        log.error("decoder failure rate %.3f exceeds threshold %.3f", rate, cfg.failure_threshold)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_gen_matrix(args) -> int:
    band = BANDS[args.band] if args.band is not None else None
    a4, a3, h = generate_matrix_for_entropy(args.target, args.tol, band,
                                            np.random.default_rng(args.seed), args.max_attempts)
    text = a4.to_json(indent=2) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text)
        print(f"wrote {args.out} (entropy {h:.6f} bits/symbol)")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args)
    try:
        a4 = TransitionMatrix.from_json(args.matrix.read_text())
    except OSError as exc:
        raise UsageError(f"cannot read matrix {args.matrix}: {exc}") from None
    if a4.states != ("T", "S", "D", "I"):
        raise UsageError("simulate needs a four-state (T,S,D,I) matrix")
    if args.runs < 1:
        raise UsageError("--runs must be at least 1")
    model = ex.ChannelModel.from_matrix(a4, cfg.max_insertions)
    results = []
    for ri in range(args.runs):
        results.extend(ex.run_single(model, ex._rng(cfg.base_seed, ex._RUN_STREAM, 0, 0, ri),
                                     cfg.decoders, cfg.message_bits,
                                     initial_state=cfg.initial_state,
                                     entropy_target=model.entropy, run_id=ri))
    path = ex.write_constant_csv(Path(cfg.out_dir) / "simulate.csv", results)
    print(f"entropy {model.entropy:.6f}; wrote {path}")
    for dec in cfg.decoders:
        rs = [r for r in results if r.decoder == dec]
        print(f"{dec:5s} ber={np.mean([r.ber for r in rs]):.5f} "
              f"niis={np.mean([r.niis for r in rs]):.5f} sao={np.mean([r.sao for r in rs]):.2f}")
    return _failure_check(results, cfg)


def cmd_sweep_overall(args) -> int:
    cfg = _config(args)
    results, skipped = ex.sweep_overall_runs(cfg)
    rows = ex.aggregate_overall(results, cfg, skipped)
    path = ex.write_overall_csv(Path(cfg.out_dir) / "overall.csv", rows)
    print(f"wrote {path}")
    return _failure_check(results, cfg)


def cmd_sweep_constant(args) -> int:
    cfg = _config(args)
    results, models = ex.sweep_constant_entropy(cfg)
    out = Path(cfg.out_dir)
    path = ex.write_constant_csv(out / "constant.csv", results)
    ex.write_models_json(out / "matrices.json", models)
    print(f"wrote {path}")
    return _failure_check(results, cfg)


def _constant_input(args, cfg) -> tuple[Path, list]:
    path = args.input or Path(cfg.out_dir) / "constant.csv"
    if not path.exists():
        raise UsageError(f"{path} not found; run sweep-constant first")
    return path, ex.read_rows(path)


def cmd_analyze_errors(args) -> int:
    cfg = _config(args)
    path, rows = _constant_input(args, cfg)
    models = path.parent / "matrices.json"
    stationary = ex.read_stationary(models) if models.exists() else None
    table = ex.error_level_analysis(rows, stationary)
    out = ex.write_rows(Path(cfg.out_dir) / "error_levels.csv",
                        ["entropy", "parameter", "realized_value", "dm1_better",
                         "fsmc_better", "tie", "stationary_value"], table)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_analyze_ps(args) -> int:
    cfg = _config(args)
    _, rows = _constant_input(args, cfg)
    table = ex.ps_effect_analysis(rows, cfg.gamma)
    out = ex.write_rows(Path(cfg.out_dir) / "ps_effect.csv",
                        ["entropy", "n_substitutions", "p_s", "decoder", "count", "mean_niis"],
                        table)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_plot(args) -> int:
    cfg = _config(args)
    out = Path(cfg.out_dir)
    overall = ex.read_rows(out / "overall.csv") if (out / "overall.csv").exists() else None
    constant = ex.read_rows(out / "constant.csv") if (out / "constant.csv").exists() else None
    if overall is None and constant is None:
        raise UsageError(f"no overall.csv or constant.csv in {out}")
    for path in emit_plots(out, overall, constant):
        print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {
    "gen-matrix": cmd_gen_matrix,
    "simulate": cmd_simulate,
    "sweep-overall": cmd_sweep_overall,
    "sweep-constant": cmd_sweep_constant,
    "analyze-errors": cmd_analyze_errors,
    "analyze-ps": cmd_analyze_ps,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"wmsync: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (WmsyncError, ValueError) as exc:
        print(f"wmsync: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
