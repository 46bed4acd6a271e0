"""Seeded Monte-Carlo BER campaigns and convergence experiments.

Campaign structure: for each Eb/N0 grid point and each trial, a fresh
channel realization is drawn, the RIS phases are optimized once (the
optimizer runs on the LO-de-phased channels so the effective channel
aligns with the LO phase), and a block of random symbol vectors is
transmitted through the magnitude front end.  All enabled detectors see
identical observations, so detector comparisons are paired.

Every trial derives its own generator from
``SeedSequence(master_seed, spawn_key=(point_key, trial_index))`` where
``point_key`` is the bit pattern of the Eb/N0 value.  Keying on the value
rather than the grid position means splitting a grid across runs and
merging the records reproduces a single run exactly, and any degree of
parallelism yields bit-identical results.  Early aborts are decided on
fixed-size trial batches for the same reason.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    ChannelSet,
    LOParams,
    PhysicalPathParams,
    effective_channel,
    gen_lo_vector,
    gen_physical_channel,
    gen_user_ris_channel,
)
from .detect import (
    detect_exhaustive_batch,
    detect_proposed_batch,
    detect_zf_batch,
)
from .errors import BudgetExceededError, ConfigError
from .modem import hamming_table, make_pam, noise_sigma
from .risopt import AdamConfig, ConvergenceTrace, adam_optimize, build_rank_one_cache

__all__ = [
    "SimConfig",
    "BerRecord",
    "DETECTOR_NAMES",
    "trial_seed",
    "draw_channels",
    "optimize_aligned_phases",
    "run_convergence",
    "run_ber",
    "merge_records",
    "records_to_csv",
    "write_records_csv",
]

DETECTOR_NAMES = ("proposed", "exhaustive", "zf_genie")

# Trials are executed and abort decisions taken in fixed-size batches so
# the set of executed trials never depends on thread timing.
_BATCH_SIZE = 8


@dataclass(frozen=True)
class SimConfig:
    """Full description of one campaign (dimensions, modulation, grid,
    channel/LO/optimizer parameters, seeding and stopping rules)."""

    num_cells: int = 36
    num_elements: int = 150
    num_users: int = 3
    mod_order: int = 4
    eb_n0_grid_db: tuple[float, ...] = (-40.0, -36.0, -32.0, -28.0)
    trials_per_point: int = 50
    symbols_per_trial: int = 100
    detectors: tuple[str, ...] = DETECTOR_NAMES
    channel: PhysicalPathParams = field(default_factory=PhysicalPathParams)
    lo: LOParams = field(default_factory=LOParams)
    adam: AdamConfig = field(default_factory=AdamConfig)
    master_seed: int = 0
    error_target: int | None = 200
    trial_offset: int = 0
    exhaustive_budget: int = 2**20


@dataclass(frozen=True)
class BerRecord:
    """Exact error counts for one (Eb/N0, detector) cell of a campaign."""

    eb_n0_db: float
    detector: str
    bits_sent: int
    bit_errors: int
    ber: float
    ci_halfwidth: float
    stop_reason: str = "trial_cap"


def _ci_halfwidth(errors: int, bits: int) -> float:
    if bits == 0:
        return 0.0
    p = errors / bits
    return 3.0 * math.sqrt(p * (1.0 - p) / bits)


def _make_record(db: float, det: str, bits: int, errors: int, reason: str) -> BerRecord:
    return BerRecord(
        eb_n0_db=db,
        detector=det,
        bits_sent=bits,
        bit_errors=errors,
        ber=errors / bits if bits else 0.0,
        ci_halfwidth=_ci_halfwidth(errors, bits),
        stop_reason=reason,
    )


def validate_config(cfg: SimConfig) -> None:
    """Reject inconsistent campaign configurations before any computation."""
    if cfg.num_cells < 1:
        raise ConfigError("num_cells must be >= 1")
    if cfg.num_elements < 0:
        raise ConfigError("num_elements must be >= 0")
    if cfg.num_users < 1:
        raise ConfigError("num_users must be >= 1")
    if cfg.num_users > cfg.num_cells:
        raise ConfigError(
            f"num_users ({cfg.num_users}) exceeds num_cells ({cfg.num_cells}); "
            "least-squares detection needs K <= M"
        )
    if cfg.mod_order not in (2, 4, 8, 16):
        raise ConfigError(f"mod_order {cfg.mod_order} unsupported")
    if not cfg.eb_n0_grid_db:
        raise ConfigError("eb_n0_grid_db must be nonempty")
    if cfg.trials_per_point < 1:
        raise ConfigError("trials_per_point must be >= 1")
    if cfg.symbols_per_trial < 1:
        raise ConfigError("symbols_per_trial must be >= 1")
    if cfg.trial_offset < 0:
        raise ConfigError("trial_offset must be >= 0")
    unknown = set(cfg.detectors) - set(DETECTOR_NAMES)
    if unknown or not cfg.detectors:
        raise ConfigError(
            f"detectors must be a nonempty subset of {DETECTOR_NAMES}, got {cfg.detectors}"
        )
    if "exhaustive" in cfg.detectors:
        cost = cfg.mod_order**cfg.num_users
        if cost > cfg.exhaustive_budget:
            raise BudgetExceededError(
                f"exhaustive detector needs Q^K = {cfg.mod_order}^{cfg.num_users} "
                f"= {cost} candidates (budget {cfg.exhaustive_budget})"
            )
    if cfg.error_target is not None and cfg.error_target < 1:
        raise ConfigError("error_target must be >= 1 or None")


def trial_seed(master_seed: int, eb_n0_db: float, trial_index: int) -> np.random.SeedSequence:
    """Splittable per-trial seed, keyed by the Eb/N0 bit pattern so grid
    partitions reproduce the trials of a single full run."""
    point_key = int(np.float64(eb_n0_db).view(np.uint64))
    return np.random.SeedSequence(master_seed, spawn_key=(point_key, trial_index))


def draw_channels(cfg: SimConfig, rng: np.random.Generator) -> ChannelSet:
    """One channel realization, in a fixed draw order (h_ur, h_rv, h_uv)."""
    m, n, k = cfg.num_cells, cfg.num_elements, cfg.num_users
    if n == 0:
        h_ur = np.zeros((0, k), dtype=complex)
        h_rv = np.zeros((m, 0), dtype=complex)
    else:
        h_ur = gen_user_ris_channel(k, n, rng)
        h_rv = gen_physical_channel(m, n, cfg.channel, rng)
    h_uv = gen_physical_channel(m, k, cfg.channel, rng)
    return ChannelSet(h_ur=h_ur, h_rv=h_rv, h_uv=h_uv)


def optimize_aligned_phases(
    ch: ChannelSet, b: np.ndarray, adam: AdamConfig, rng: np.random.Generator
) -> tuple[np.ndarray, ConvergenceTrace]:
    """Optimize theta so the effective channel aligns with the LO phase.

    Runs the Frobenius-objective optimizer on the channel set with its
    rows de-phased by exp(-j angle(b)); a zero objective there makes
    H_eq s o exp(-j angle(b)) real for every real s.
    """
    rot = np.exp(-1j * np.angle(b))
    dephased = ChannelSet(
        h_ur=ch.h_ur, h_rv=rot[:, None] * ch.h_rv, h_uv=rot[:, None] * ch.h_uv
    )
    cache = build_rank_one_cache(dephased)
    return adam_optimize(cache, dephased.h_uv, adam, rng)


def run_convergence(cfg: SimConfig, theta0: np.ndarray | None = None) -> ConvergenceTrace:
    """One channel realization from the master seed, one optimizer run."""
    validate_config(cfg)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.master_seed))
    ch = draw_channels(cfg, rng)
    cache = build_rank_one_cache(ch)
    _, trace = adam_optimize(cache, ch.h_uv, cfg.adam, rng, theta0=theta0)
    return trace


def _run_trial(
    cfg: SimConfig, eb_n0_db: float, sigma2: float, trial_index: int, const, lut
) -> dict[str, tuple[int, int]]:
    """Execute one trial; returns {detector: (bits_sent, bit_errors)}."""
    rng = np.random.default_rng(trial_seed(cfg.master_seed, eb_n0_db, trial_index))
    ch = draw_channels(cfg, rng)
    b = gen_lo_vector(cfg.num_cells, cfg.lo, rng)
    theta, _ = optimize_aligned_phases(ch, b, cfg.adam, rng)
    h_eq = effective_channel(ch, theta)

    k = cfg.num_users
    n_sym = cfg.symbols_per_trial
    sent = rng.integers(0, const.order, size=(k, n_sym))
    s_mat = const.points[sent]
    scale = math.sqrt(sigma2 / 2.0)
    noise = scale * (
        rng.standard_normal((cfg.num_cells, n_sym))
        + 1j * rng.standard_normal((cfg.num_cells, n_sym))
    )
    y = h_eq @ s_mat + b[:, None] + noise
    z = np.abs(y)

    bits_per_vector = k * const.bits_per_symbol
    out: dict[str, tuple[int, int]] = {}
    for det in cfg.detectors:
        if det == "proposed":
            got = detect_proposed_batch(z, h_eq, b, const)
        elif det == "exhaustive":
            got = detect_exhaustive_batch(z, h_eq, b, const, cfg.exhaustive_budget)
        else:
            got = detect_zf_batch(y, h_eq, b, const)
        errors = int(lut[sent, got].sum())
        out[det] = (bits_per_vector * n_sym, errors)
    return out


def run_ber(cfg: SimConfig, threads: int = 1) -> list[BerRecord]:
    """Run the full campaign and return one record per (Eb/N0, detector).

    ``threads`` distributes trials inside each fixed-size batch; results
    are bit-identical for any thread count.
    """
    validate_config(cfg)
    const = make_pam(cfg.mod_order)
    lut = hamming_table(const)
    if threads == 0:
        threads = _default_thread_count()

    records: list[BerRecord] = []
    executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for db in cfg.eb_n0_grid_db:
            sigma2 = noise_sigma(db, cfg.mod_order).sigma2
            bits = {det: 0 for det in cfg.detectors}
            errors = {det: 0 for det in cfg.detectors}
            reason = "trial_cap"
            first = cfg.trial_offset
            last = cfg.trial_offset + cfg.trials_per_point
            for batch_start in range(first, last, _BATCH_SIZE):
                batch = range(batch_start, min(batch_start + _BATCH_SIZE, last))
                run = lambda t: _run_trial(cfg, db, sigma2, t, const, lut)
                results = list(executor.map(run, batch)) if executor else [run(t) for t in batch]
                for res in results:
                    for det, (nb, ne) in res.items():
                        bits[det] += nb
                        errors[det] += ne
                if cfg.error_target is not None and all(
                    errors[det] >= cfg.error_target for det in cfg.detectors
                ):
                    reason = "error_target"
                    break
            for det in cfg.detectors:
                records.append(_make_record(db, det, bits[det], errors[det], reason))
    finally:
        if executor:
            executor.shutdown()
    return records


def _default_thread_count() -> int:
    import os

    return os.cpu_count() or 1


def merge_records(a: list[BerRecord], b: list[BerRecord]) -> list[BerRecord]:
    """Combine two campaigns: counts add on matching (eb_n0_db, detector)
    keys, unmatched records pass through.  Associative and commutative."""

    def keyed(records, source):
        out = {}
        for rec in records:
            key = (rec.eb_n0_db, rec.detector)
            if key in out:
                raise ValueError(f"duplicate record key {key} in {source} input")
            out[key] = rec
        return out

    left = keyed(a, "first")
    right = keyed(b, "second")
    merged = []
    for key in sorted(set(left) | set(right)):
        if key in left and key in right:
            x, y = left[key], right[key]
            reason = x.stop_reason if x.stop_reason == y.stop_reason else "mixed"
            merged.append(
                _make_record(
                    key[0], key[1], x.bits_sent + y.bits_sent,
                    x.bit_errors + y.bit_errors, reason,
                )
            )
        else:
            merged.append(left.get(key) or right[key])
    return merged


def records_to_csv(records: list[BerRecord]) -> str:
    """Render records as CSV, sorted by (eb_n0_db, detector)."""
    lines = ["eb_n0_db,detector,bits_sent,bit_errors,ber,ci_halfwidth"]
    for rec in sorted(records, key=lambda r: (r.eb_n0_db, r.detector)):
        lines.append(
            f"{rec.eb_n0_db!r},{rec.detector},{rec.bits_sent},{rec.bit_errors},"
            f"{rec.ber!r},{rec.ci_halfwidth!r}"
        )
    return "\n".join(lines) + "\n"


def write_records_csv(records: list[BerRecord], path) -> None:
    with open(path, "w") as fh:
        fh.write(records_to_csv(records))
