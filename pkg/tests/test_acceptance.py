"""Acceptance criteria, one test each. Every test appends a PASS/FAIL line
that is echoed in the terminal summary."""
import random
import time

import numpy as np
import pytest

from zdf.codec import FountainEncoder, build_factor_graph, pack_packet, unpack_packet
from zdf.decoder import (bitwise_original, bitwise_scheduled, decode, packet_wise_pa,
                         warm_up)
from zdf.distributions import DEFAULT_DELTA, DEFAULT_OMEGA
from zdf.precode import build_precode, precode_packets, read_alist, write_alist
from zdf.sim import (ExperimentConfig, decode_instance, der_interval, make_instance,
                     t_a_value)
from zdf.ternary import (TernaryWord, factor_update, fill, make_erased, make_known,
                         resolution_flag, shift_pad, window, xor_merge)

from oracles import zigzag_brute_force

pytestmark = pytest.mark.acceptance

W = TernaryWord.from_string
ALPHAS = (0.10, 0.15, 0.20, 0.25, 0.30)


def verdict(log, label, ok, detail):
    log.append(f"{label:<34} {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_c1_mapping_suite(acceptance_log):
    start = time.perf_counter()
    examples = [
        str(shift_pad(1, W("10*"), 1)) == "010*",
        str(shift_pad(0, W("110"), 1)) == "1100",
        str(xor_merge([W("10*1"), W("1100")])) == "01*1",
        str(xor_merge([W("11"), W("*0")])) == "*1",
        str(window(1, W("010*"), 3)) == "10*",
        str(fill(W("1*0"), W("011"))) == "110",
        str(fill(W("***"), W("101"))) == "101",
        resolution_flag(W("101")) == 0 and resolution_flag(W("1*1")) == 1,
        str(make_known([1, 0, 1])) == "101" and str(make_erased(3)) == "***",
        str(factor_update(W("1001"), 0, W("***"), [(1, W("***"))])) == "1**",
        str(factor_update(W("1001"), 1, W("***"), [(0, W("1**"))])) == "**1",
        str(factor_update(W("1100"), 0, W("110"), [])) == "110",
    ]
    rng = random.Random(1)
    bad = 0
    for _ in range(10**4):
        ell, D = rng.randint(0, 32), rng.randint(0, 3)
        known = rng.getrandbits(ell) if ell else 0
        w = TernaryWord(ell, known, rng.getrandbits(ell) & known if ell else 0)
        k = rng.randint(0, D)
        bad += window(k, shift_pad(k, w, D), ell) != w
    elapsed = time.perf_counter() - start
    ok = all(examples) and bad == 0 and elapsed < 1.0
    verdict(acceptance_log, "C1 mapping unit suite", ok,
            f"{sum(examples)}/{len(examples)} examples, {bad} composition mismatches "
            f"in 10^4, {elapsed:.2f}s")


def test_c2_zigzag_oracle(acceptance_log):
    from test_decoder import ZIGZAG
    sols = zigzag_brute_force(ZIGZAG.memory.tolist(), [(0, 0), (0, 1)], 3)
    r = packet_wise_pa(ZIGZAG)
    so, ro = bitwise_original(r)
    ss, rs = bitwise_scheduled(r)
    got = [tuple(map(tuple, s.value.tolist())) for s in (so, ss)]
    ok = len(sols) == 1 and ro.success and rs.success and got == [sols[0], sols[0]]
    verdict(acceptance_log, "C2 zigzag vs brute force", ok,
            f"{len(sols)} solution(s) over 2^6; processes original={ro.total_processes} "
            f"scheduled={rs.total_processes}")


def test_c3_fixed_point_equivalence(acceptance_log):
    warm_up()
    start = time.perf_counter()
    cfg = ExperimentConfig(n=50, ell=32, seed=17)
    mismatches = bitwise = 0
    for t in range(1000):
        inst = make_instance(cfg, (0.1, 0.2, 0.3)[t % 3], t)
        r = packet_wise_pa(inst.graph)
        so, _ = bitwise_original(r)
        ss, _ = bitwise_scheduled(r, None)
        mismatches += not so.same_as(ss)
        bitwise += not r.resolved.all()
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 60
    verdict(acceptance_log, "C3 fixed-point equivalence", ok,
            f"{mismatches} mismatches / 1000 ({bitwise} needed bit-wise), {elapsed:.1f}s")


@pytest.fixture(scope="module")
def desk_runs():
    """n=300, l=100, 500 trials per alpha; three decoders per instance."""
    warm_up()
    cfg = ExperimentConfig(n=300, ell=100, seed=2024)
    runs = {}
    for alpha in ALPHAS:
        algos = ["original", ("scheduled", None), ("scheduled", t_a_value("6/alpha", alpha))]
        rows = []
        for t in range(500):
            inst = make_instance(cfg, alpha, t)
            reports = [rep for _, _, rep in decode_instance(inst, algos, t_b=20)]
            rows.append(reports)
        runs[alpha] = rows
    return runs


def test_c4_der_comparison(desk_runs, acceptance_log):
    ok = True
    parts = []
    for alpha in ALPHAS:
        fails = [sum(not row[c].success for row in desk_runs[alpha]) for c in range(3)]
        (lo_o, hi_o), (lo_i, hi_i), _ = (der_interval(f, 500) for f in fails)
        overlap = lo_o <= hi_i and lo_i <= hi_o
        der_o, der_i, der_b = (f / 500 for f in fails)
        bounded_ok = der_b >= der_i - (hi_i - lo_i)
        ok &= overlap and bounded_ok
        parts.append(f"a={alpha:.2f}: {der_o:.3f}/{der_i:.3f}/{der_b:.3f}")
    verdict(acceptance_log, "C4 DER original/sched-inf/sched-6a", ok, "; ".join(parts))


def test_c5_process_reduction(desk_runs, acceptance_log):
    ratios, fewer = [], []
    for orig, _, bounded in desk_runs[0.10]:
        if orig.iterations >= 5 and orig.success and bounded.success:
            ratios.append(bounded.total_processes / orig.total_processes)
            fewer.append(bounded.total_processes < orig.total_processes)
    share, mean = float(np.mean(fewer)), float(np.mean(ratios))
    ok = len(ratios) > 0 and share >= 0.9 and mean < 0.5
    verdict(acceptance_log, "C5 process-count reduction", ok,
            f"{len(ratios)} trials, strictly fewer in {share:.1%}, mean ratio {mean:.3f}")


def test_c6_counter_identities(desk_runs, acceptance_log):
    reports = [row[0] for row in desk_runs[0.10][:100]]
    issues = []
    fractions = []
    for t, rep in enumerate(reports):
        if rep.iterations == 0:
            continue
        if not np.all(rep.processes == rep.residual_edges):
            issues.append(f"t{t}: processes != residual edges")
        if np.any(rep.updating > rep.processes):
            issues.append(f"t{t}: updating > processes")
        if np.any(np.diff(rep.active) < 0) or rep.active[-1] >= rep.residual_edges:
            issues.append(f"t{t}: active not monotone or saturates")
        # plateau: the second half of the run adds no more active edges than the first
        mid = (rep.iterations - 1) // 2
        if rep.active[-1] - rep.active[mid] > rep.active[mid]:
            issues.append(f"t{t}: active curve does not flatten")
        fractions.append(rep.active[-1] / rep.residual_edges)
    mean_frac = float(np.mean(fractions))
    ok = not issues and mean_frac <= 0.5
    verdict(acceptance_log, "C6 counter identities", ok,
            f"{len(fractions)} bit-wise runs, final active/edges mean {mean_frac:.2f} "
            f"max {max(fractions):.2f}" + (f"; {issues[:3]}" if issues else ""))


def test_c7_wall_time(acceptance_log):
    warm_up()
    cfg = ExperimentConfig(n=300, ell=1000, seed=7, benchmark=True)
    t_o, t_s = [], []
    for t in range(50):
        inst = make_instance(cfg, 0.10, t)
        res = decode_instance(inst, ["original", ("scheduled", t_a_value("6/alpha", 0.10))])
        t_o.append(res[0][2].wall_time)
        t_s.append(res[1][2].wall_time)
    mo, ms = 1e3 * np.mean(t_o), 1e3 * np.mean(t_s)
    verdict(acceptance_log, "C7 wall-time direction", ms < mo,
            f"mean bit-wise ms original={mo:.2f} scheduled={ms:.2f}")


def test_c8_codec_integrity(acceptance_log):
    warm_up()
    H, plan, _ = build_precode(100, 0)
    successes = mismatches = 0
    for t in range(10**4):
        rng = np.random.default_rng([99, t])
        source = rng.integers(0, 2, (plan.k, 16), dtype=np.uint8)
        precoded = precode_packets(plan, source)
        enc = FountainEncoder(precoded, DEFAULT_OMEGA, DEFAULT_DELTA, rng)
        wire = [pack_packet(p, DEFAULT_DELTA.max_shift) for p in enc.generate(2 * plan.k)]
        received = [unpack_packet(buf)[0] for buf in wire]
        g = build_factor_graph(H, received, 16, DEFAULT_DELTA.max_shift)
        res = decode(g, "scheduled" if t % 2 else "original", t_a=6)
        if res.success:
            successes += 1
            mismatches += not np.array_equal(res.packets[plan.systematic], source)
    ok = mismatches == 0 and successes > 0
    verdict(acceptance_log, "C8 codec integrity", ok,
            f"{successes}/10^4 successes, {mismatches} mismatches")


def test_c9_precode_suite(tmp_path, acceptance_log):
    start = time.perf_counter()
    checks = []
    for n in (300, 1000):
        H, plan, _ = build_precode(n, 0)
        checks += [np.all(H.column_weights() == 3), np.all(H.row_weights() == 30),
                   H.m == n // 10]
        src = np.random.default_rng(n).integers(0, 2, (plan.k, 64), dtype=np.uint8)
        b = precode_packets(plan, src)
        dense = (H.dense().astype(np.int64) @ b.astype(np.int64)) % 2
        checks.append(not dense.any())
        path = tmp_path / f"h{n}.alist"
        write_alist(H, path)
        checks.append(read_alist(path) == H)
    elapsed = time.perf_counter() - start
    ok = all(checks) and elapsed < 10
    verdict(acceptance_log, "C9 precode suite", ok,
            f"{sum(map(bool, checks))}/{len(checks)} checks, {elapsed:.2f}s")

