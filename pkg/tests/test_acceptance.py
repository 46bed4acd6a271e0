"""Acceptance suite: one test per criterion, one printed PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` (the campaign-backed
criteria take a few minutes).

Criterion 6 asserts the full detector ordering
BER(zf_genie) <= BER(exhaustive) <= BER(proposed) within 3-sigma bands.
The genie-vs-exhaustive leg is expected to FAIL: with a strong local
oscillator the magnitude observation loses almost no information, so the
exhaustive (maximum-likelihood) detector's finite-alphabet advantage beats
linear zero-forcing even with genie phase knowledge.  The check is kept
as stated rather than weakened; see the analysis in the project notes.
"""

import math

import numpy as np
import pytest

from atomris.channel import (
    ChannelSet,
    LOParams,
    PhysicalPathParams,
    effective_channel,
    gen_lo_vector,
    gen_physical_channel,
    gen_user_ris_channel,
)
from atomris.detect import detect_proposed_batch, enumerate_symbol_vectors
from atomris.modem import make_pam
from atomris.risopt import (
    AdamConfig,
    adam_optimize,
    brute_force_phases,
    build_rank_one_cache,
    gradient,
    gradient_op_count,
    multistart_adam,
    objective,
    signal_domain_objective,
)
from atomris.sim import SimConfig, optimize_aligned_phases, records_to_csv, run_ber


def report(num: int, name: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {num} {name}: {'PASS' if ok else 'FAIL'} ({detail})")


def random_channel_set(m, n, k, rng):
    return ChannelSet(
        h_ur=gen_user_ris_channel(k, n, rng),
        h_rv=gen_user_ris_channel(n, m, rng),
        h_uv=gen_user_ris_channel(k, m, rng),
    )


def snr_at_ber(points, target):
    """Log-linear interpolation of the Eb/N0 where a BER curve crosses
    ``target``; points is a sorted list of (db, ber)."""
    for (d1, b1), (d2, b2) in zip(points, points[1:]):
        if b1 >= target >= b2 and b2 > 0:
            t = (math.log10(target) - math.log10(b1)) / (math.log10(b2) - math.log10(b1))
            return d1 + t * (d2 - d1)
    return None


def test_criterion_1_gradient_correctness():
    """50 random instances, M,K,N <= 8: every gradient component matches
    central finite differences (step 1e-6) within 1e-5 relative error.

    Components whose magnitude is below 1e-4 are compared against the
    finite-difference roundoff scale (eps * J / step ~ 1e-10 * J) instead
    of relatively, since there the quotient measures roundoff, not the
    derivative.
    """
    rng = np.random.default_rng(108)
    worst = 0.0
    for _ in range(50):
        m, n, k = rng.integers(1, 9, 3)
        ch = random_channel_set(m, n, k, rng)
        cache = build_rank_one_cache(ch)
        theta = rng.uniform(0, 2 * np.pi, n)
        g = gradient(theta, cache, ch.h_uv)
        step = 1e-6
        fd = np.empty(n)
        for i in range(n):
            tp = theta.copy()
            tp[i] += step
            tm = theta.copy()
            tm[i] -= step
            fd[i] = (objective(tp, cache, ch.h_uv) - objective(tm, cache, ch.h_uv)) / (2 * step)
        denom = np.maximum(np.maximum(np.abs(g), np.abs(fd)), 1e-4)
        worst = max(worst, float(np.max(np.abs(g - fd) / denom)))
    ok = worst < 1e-5
    report(1, "gradient-correctness", ok, f"worst relative error {worst:.2e}")
    assert ok


def test_criterion_2_alignment_equivalence():
    """Aligned instances with Frobenius objective < 1e-20 keep the
    signal-domain objective below 1e-18 * ||s||^2 for 100 random real s,
    for real LO vectors and for complex LO vectors with phased rows."""
    rng = np.random.default_rng(212)

    def cgauss(shape):
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)

    worst_obj = 0.0
    worst_sdo = 0.0
    for case in range(10):
        m, n, k = rng.integers(2, 7, 3)
        a = cgauss((m, n))
        b_mat = cgauss((n, k))
        theta = rng.uniform(0, 2 * np.pi, n)
        bridge = (a * np.exp(1j * theta)) @ b_mat
        real_target = rng.standard_normal((m, k))
        complex_lo = case % 2 == 1
        if complex_lo:
            lo = cgauss(m)
        else:
            lo = np.abs(rng.standard_normal(m)) + 0.5
        rot = np.exp(1j * np.angle(lo))
        h_uv = rot[:, None] * real_target - bridge
        ch = ChannelSet(b_mat, a, h_uv)
        dephased = ChannelSet(
            b_mat, np.conj(rot)[:, None] * a, np.conj(rot)[:, None] * h_uv
        )
        j_val = objective(theta, build_rank_one_cache(dephased), dephased.h_uv)
        worst_obj = max(worst_obj, j_val)
        for _ in range(100):
            s = rng.standard_normal(k)
            v = signal_domain_objective(theta, ch, s, lo) / (s @ s)
            worst_sdo = max(worst_sdo, v)
    ok = worst_obj < 1e-20 and worst_sdo < 1e-18
    report(2, "alignment-equivalence", ok,
           f"worst objective {worst_obj:.2e}, worst signal residual {worst_sdo:.2e}")
    assert ok


def test_criterion_3_convergence_reproduction():
    """Reference configuration (M=36, N=150, K=3; eta=0.05, beta1=0.9,
    beta2=0.999, eps=1e-5, 100 iterations): the running minimum at the
    last iteration is below 20% of the initial objective in >= 90% of 20
    seeded runs."""
    params = PhysicalPathParams()
    hits = 0
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        ch = ChannelSet(
            gen_user_ris_channel(3, 150, rng),
            gen_physical_channel(36, 150, params, rng),
            gen_physical_channel(36, 3, params, rng),
        )
        cache = build_rank_one_cache(ch)
        _, trace = adam_optimize(cache, ch.h_uv, AdamConfig(), rng)
        assert len(trace) == 100
        ratio = float(np.min(trace.objective) / trace.objective[0])
        worst = max(worst, ratio)
        hits += ratio < 0.20
    ok = hits >= 18
    report(3, "convergence-reproduction", ok,
           f"{hits}/20 runs below 20% of initial; worst ratio {worst:.3f}")
    assert ok


def test_criterion_4_oracle_equivalence():
    """N <= 2, M <= 3, K <= 2: best of 5 stratified optimizer restarts is
    within 1e-3 of a 360-points-per-dimension grid search on 20 random
    instances."""
    rng = np.random.default_rng(404)
    cfg = AdamConfig(max_iters=2000, step=0.005)
    worst = -np.inf
    for _ in range(20):
        n = int(rng.integers(1, 3))
        m = int(rng.integers(1, 4))
        k = int(rng.integers(1, 3))
        ch = random_channel_set(m, n, k, rng)
        cache = build_rank_one_cache(ch)
        grid_theta = brute_force_phases(cache, ch.h_uv, 360)
        grid_j = objective(grid_theta, cache, ch.h_uv)
        _, best_j = multistart_adam(cache, ch.h_uv, cfg, rng, restarts=5)
        worst = max(worst, best_j - grid_j)
    ok = worst <= 1e-3
    report(4, "oracle-equivalence", ok, f"worst gap to grid minimum {worst:+.2e}")
    assert ok


def test_criterion_5_noiseless_exactness():
    """sigma^2 = 0 on an optimizer-aligned channel: the least-squares
    detector recovers every vector of constellation^K exactly for
    Q in {4, 8, 16}, K = 3."""
    rng = np.random.default_rng(505)
    params = PhysicalPathParams()
    ch = ChannelSet(
        gen_user_ris_channel(3, 150, rng),
        gen_physical_channel(36, 150, params, rng),
        gen_physical_channel(36, 3, params, rng),
    )
    b = gen_lo_vector(36, LOParams(), rng)
    theta, _ = optimize_aligned_phases(ch, b, AdamConfig(), rng)
    h_eq = effective_channel(ch, theta)
    failures = []
    for q in (4, 8, 16):
        c = make_pam(q)
        idx = enumerate_symbol_vectors(c, 3)
        z = np.abs(h_eq @ c.points[idx] + b[:, None])
        got = detect_proposed_batch(z, h_eq, b, c)
        wrong = int((got != idx).any(axis=0).sum())
        if wrong:
            failures.append(f"Q={q}: {wrong}/{idx.shape[1]} vectors wrong")
    ok = not failures
    report(5, "noiseless-exactness", ok,
           "all 64+512+4096 vectors exact" if ok else "; ".join(failures))
    assert ok


@pytest.fixture(scope="module")
def ordering_campaign():
    """Criterion 6 campaign: reference configuration, 1e5 symbol vectors per
    SNR point (1000 channel realizations x 100 vectors)."""
    cfg = SimConfig(
        num_cells=36, num_elements=150, num_users=3, mod_order=4,
        eb_n0_grid_db=(-30.0, -28.0, -26.0, -24.0, -22.0),
        trials_per_point=1000, symbols_per_trial=100,
        master_seed=2024, error_target=None,
    )
    records = run_ber(cfg, threads=4)
    by_det = {}
    for rec in records:
        by_det.setdefault(rec.detector, []).append(rec)
    for det in by_det:
        by_det[det].sort(key=lambda r: r.eb_n0_db)
    return by_det


def test_criterion_6_detector_ordering(ordering_campaign):
    """4-PAM, M=36, K=3, N=150, >= 1e5 vectors per point:
    BER(zf_genie) <= BER(exhaustive) <= BER(proposed) within 3-sigma
    binomial bands at every point, and the proposed detector within 1 dB
    of the genie at BER = 1e-2.

    The genie <= exhaustive leg fails by construction of the receivers
    (maximum likelihood beats linear detection when the magnitude readout
    is nearly lossless); it is asserted anyway because the criterion
    states it.
    """
    by_det = ordering_campaign
    legs = []
    for rec_g, rec_e, rec_p in zip(by_det["zf_genie"], by_det["exhaustive"],
                                   by_det["proposed"]):
        band_ge = rec_g.ci_halfwidth + rec_e.ci_halfwidth
        band_ep = rec_e.ci_halfwidth + rec_p.ci_halfwidth
        legs.append(
            (rec_g.eb_n0_db,
             rec_g.ber <= rec_e.ber + band_ge,
             rec_e.ber <= rec_p.ber + band_ep)
        )
    genie_ok = all(leg[1] for leg in legs)
    exh_ok = all(leg[2] for leg in legs)

    prop_curve = [(r.eb_n0_db, r.ber) for r in by_det["proposed"]]
    genie_curve = [(r.eb_n0_db, r.ber) for r in by_det["zf_genie"]]
    snr_prop = snr_at_ber(prop_curve, 1e-2)
    snr_genie = snr_at_ber(genie_curve, 1e-2)
    gap = None if snr_prop is None or snr_genie is None else snr_prop - snr_genie
    gap_ok = gap is not None and gap <= 1.0

    ok = genie_ok and exh_ok and gap_ok
    bad_points = [f"{db:+.0f}dB" for db, ge, ep in legs if not (ge and ep)]
    gap_text = f"{gap:.2f} dB" if gap is not None else "no 1e-2 crossing"
    report(
        6, "detector-ordering", ok,
        f"exhaustive<=proposed {'holds' if exh_ok else 'violated'}; "
        f"genie<=exhaustive {'holds' if genie_ok else 'violated at ' + ','.join(bad_points)}; "
        f"proposed-genie gap at 1e-2 = {gap_text}",
    )
    assert exh_ok, "exhaustive detector worse than proposed beyond 3-sigma bands"
    assert gap_ok, f"proposed-to-genie gap {gap} dB exceeds 1 dB"
    assert genie_ok, (
        "genie <= exhaustive violated at "
        + ", ".join(bad_points)
        + " (known model-level failure: ML beats linear ZF at strong LO)"
    )


def test_criterion_7_multiuser_degradation():
    """M=16, K=8 with 4-PAM shows strictly higher BER than M=36, K=3 at
    equal Eb/N0 for the proposed detector (paired master seeds, 3-sigma
    separation)."""
    grid = (-30.0, -27.0, -24.0)
    base = dict(mod_order=4, eb_n0_grid_db=grid, trials_per_point=200,
                symbols_per_trial=100, master_seed=7, error_target=None,
                detectors=("proposed",))
    few = run_ber(SimConfig(num_cells=36, num_elements=150, num_users=3, **base), threads=4)
    many = run_ber(SimConfig(num_cells=16, num_elements=150, num_users=8, **base), threads=4)
    few.sort(key=lambda r: r.eb_n0_db)
    many.sort(key=lambda r: r.eb_n0_db)
    details = []
    ok = True
    for a, b in zip(few, many):
        sep = b.ber - a.ber
        band = a.ci_halfwidth + b.ci_halfwidth
        ok &= sep > band
        details.append(f"{a.eb_n0_db:+.0f}dB: {a.ber:.2e} -> {b.ber:.2e}")
    report(7, "multiuser-degradation", ok, "; ".join(details))
    assert ok


def test_criterion_8_complexity_accounting():
    """The optimizer performs exactly max_iters gradient evaluations, and
    the per-evaluation arithmetic count is linear in N at fixed M, K
    (each point within 15% of the least-squares linear fit over
    N in {50, 100, 200, 400})."""
    rng = np.random.default_rng(808)
    for iters in (1, 17, 100):
        ch = random_channel_set(6, 20, 2, rng)
        cache = build_rank_one_cache(ch)
        _, trace = adam_optimize(cache, ch.h_uv, AdamConfig(max_iters=iters), rng)
        assert len(trace) == iters

    sizes = np.array([50, 100, 200, 400])
    counts = []
    for n in sizes:
        ch = random_channel_set(6, int(n), 2, rng)
        counts.append(gradient_op_count(build_rank_one_cache(ch)))
    counts = np.array(counts, dtype=float)
    slope, intercept = np.polyfit(sizes, counts, 1)
    fit = slope * sizes + intercept
    worst_dev = float(np.max(np.abs(counts - fit) / fit))
    ok = worst_dev <= 0.15
    report(8, "complexity-accounting", ok,
           f"evals == max_iters; linear-fit deviation {worst_dev:.2%}")
    assert ok


def test_criterion_9_determinism_across_threads():
    """A BER campaign rerun with the same config and seed produces
    byte-identical CSV at thread counts 1, 4, and 8."""
    cfg = SimConfig(
        num_cells=12, num_elements=32, num_users=2, mod_order=4,
        eb_n0_grid_db=(-28.0, -24.0), trials_per_point=16,
        symbols_per_trial=25, master_seed=31, error_target=None,
    )
    csvs = {t: records_to_csv(run_ber(cfg, threads=t)) for t in (1, 4, 8)}
    rerun = records_to_csv(run_ber(cfg, threads=4))
    ok = csvs[1] == csvs[4] == csvs[8] == rerun
    report(9, "determinism", ok,
           "thread counts 1/4/8 and rerun byte-identical" if ok else "outputs differ")
    assert ok
