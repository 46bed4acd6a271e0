"""Command-line entry points: ``optimize``, ``ber``, ``convergence``.

Each command reads an INI configuration file (see ``--dump-defaults``),
runs deterministically from the configured seed, and writes CSV or
structured text.  Exit codes: 0 success, 2 configuration error, 3 I/O
failure, 4 cost-budget refusal.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .config import default_config_text, load_config, write_manifest
from .errors import BudgetExceededError, ConfigError
from .risopt import adam_optimize, build_rank_one_cache, canonicalize_phases, objective
from .sim import (
    SimConfig,
    draw_channels,
    run_ber,
    run_convergence,
    validate_config,
    write_records_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_BUDGET = 4

_PHASE_FILE_MAGIC = "# atomris-phase-solution v1"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atomris",
        description="RIS-assisted atomic MIMO receiver experiments",
    )
    parser.add_argument("--version", action="version", version=f"atomris {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("optimize", "optimize RIS phases for one channel realization"),
        ("ber", "run a Monte-Carlo BER campaign"),
        ("convergence", "record the optimizer's per-iteration objective"),
    ):
        cmd = sub.add_parser(name, help=helptext)
        cmd.add_argument("--config", help="configuration file path")
        cmd.add_argument("--out", help="output file path")
        cmd.add_argument("--seed", type=int, default=None, help="override the master seed")
        cmd.add_argument("--threads", type=int, default=1,
                         help="worker threads for BER trials (0 = auto)")
        cmd.add_argument("--dump-defaults", action="store_true",
                         help="print the default configuration and exit")
    return parser


def _load(args) -> SimConfig:
    if not args.config:
        raise ConfigError("--config is required")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    validate_config(cfg)
    return cfg


def save_phase_solution(path, cfg: SimConfig, theta: np.ndarray, final_objective: float) -> None:
    """Structured text: seed, dimensions, final objective, one phase per line."""
    lines = [
        _PHASE_FILE_MAGIC,
        f"seed = {cfg.master_seed}",
        f"cells = {cfg.num_cells}",
        f"ris_elements = {cfg.num_elements}",
        f"users = {cfg.num_users}",
        f"objective = {final_objective!r}",
        "theta =",
    ]
    lines.extend(repr(float(t)) for t in theta)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_phase_solution(path) -> dict:
    """Read a phase-solution file back into a dict with keys
    seed/cells/ris_elements/users/objective/theta."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != _PHASE_FILE_MAGIC:
        raise ConfigError(f"{path}: not a phase-solution file")
    out: dict = {}
    idx = 1
    for key, conv in (("seed", int), ("cells", int), ("ris_elements", int),
                      ("users", int), ("objective", float)):
        name, _, val = lines[idx].partition("=")
        if name.strip() != key:
            raise ConfigError(f"{path}: expected field {key} at line {idx + 1}")
        out[key] = conv(val.strip())
        idx += 1
    if lines[idx].strip() != "theta =":
        raise ConfigError(f"{path}: expected theta block at line {idx + 1}")
    out["theta"] = np.array([float(v) for v in lines[idx + 1:] if v.strip()])
    return out


def cmd_optimize(cfg: SimConfig, out_path: str) -> int:
    rng = np.random.default_rng(np.random.SeedSequence(cfg.master_seed))
    ch = draw_channels(cfg, rng)
    cache = build_rank_one_cache(ch)
    theta, _ = adam_optimize(cache, ch.h_uv, cfg.adam, rng)
    theta = canonicalize_phases(theta)
    final = objective(theta, cache, ch.h_uv)
    save_phase_solution(out_path, cfg, theta, final)
    return EXIT_OK


def cmd_convergence(cfg: SimConfig, out_path: str) -> int:
    trace = run_convergence(cfg)
    lines = ["iter,objective,grad_norm"]
    for i in range(len(trace)):
        lines.append(f"{i},{float(trace.objective[i])!r},{float(trace.grad_norm[i])!r}")
    with open(out_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_ber(cfg: SimConfig, out_path: str, threads: int) -> int:
    records = run_ber(cfg, threads=threads)
    write_records_csv(records, out_path)
    write_manifest(cfg, f"{out_path}.manifest", [str(out_path)], __version__)
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.dump_defaults:
        sys.stdout.write(default_config_text())
        return EXIT_OK
    try:
        cfg = _load(args)
        if not args.out:
            raise ConfigError("--out is required")
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "optimize":
            return cmd_optimize(cfg, args.out)
        if args.command == "convergence":
            return cmd_convergence(cfg, args.out)
        return cmd_ber(cfg, args.out, args.threads)
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
