"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or as a script.
"""

import math
import sys
import time

import numpy as np
import pytest

from rwlab.bergman import KernelSeries, adjoint_monomial, block_norm_equivalence, decomposition_for, kernel_eval
from rwlab.grids import operator_grid
from rwlab.operators import chain_violations, increasing_profiles, level_points, random_profiles, weak_type_check
from rwlab.scenarios import BUILTIN_CALDERON, counterexample_report, forelli_rudin_grid, verify_calderon
from rwlab.weights import log_weight, parse_weight, power_tail_weight, standard

_printer = None


@pytest.fixture(autouse=True)
def _acceptance_printer(capsys):
    global _printer
    _printer = capsys
    yield
    _printer = None


def report(num, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {title} ({detail})"
    if _printer is not None:
        with _printer.disabled():
            print("\n" + line)
    else:
        print(line)
    assert ok, line


def test_1_kernel_closed_form():
    t0 = time.perf_counter()
    u = np.linspace(0.0, 0.9, 200)
    worst = 0.0
    for gamma in (0.0, 1.0, 2.5):
        K = KernelSeries(standard(gamma))
        vals = np.array([kernel_eval(K, x) for x in u])
        exact = (gamma + 1) * (1 - u) ** (-(2 + gamma))
        worst = max(worst, float(np.max(np.abs(vals / exact - 1))))
    dt = time.perf_counter() - t0
    report(1, "kernel closed form", worst <= 1e-10 and dt < 5, f"max rel err {worst:.2e}, {dt:.2f} s")


def test_2_forelli_rudin_grid():
    t0 = time.perf_counter()
    rep = forelli_rudin_grid()
    dt = time.perf_counter() - t0
    sign = [c for c in rep.checks if c.name.startswith("sign[")]
    const = [c for c in rep.checks if c.name.startswith("constant[")]
    mismatches = sum(not c.passed for c in sign)
    worst = max(c.detail["relative_error"] for c in const)
    ok = mismatches == 0 and all(c.passed for c in const) and dt < 30
    report(2, "Forelli-Rudin grid", ok,
           f"{len(sign)} cases, {mismatches} mismatches, {len(const)} constants, max rel err {worst:.2e}, {dt:.1f} s")


def test_3_counterexample():
    t0 = time.perf_counter()
    rep = counterexample_report(alpha=2.0, p=2.0)
    dt = time.perf_counter() - t0
    by = {c.name.split("[")[0]: c for c in rep.checks}
    ok = rep.passed and dt < 30
    report(3, "counterexample", ok,
           f"M_2 change {by['mp_stable'].value:.2e}, A_2 log-ratio spread {by['ap_log_ratio'].value:.3f}, {dt:.1f} s")


def test_4_weak_type():
    t = operator_grid(256)
    rng = np.random.default_rng(4)
    worst, count, fails = 0.0, 0, 0
    for gamma in (0.0, 1.0):
        w = standard(gamma)
        profiles = random_profiles(t, 500, seed=40 + int(gamma))
        for f in profiles:
            lam = float(np.max(f.values)) * 10 ** rng.uniform(-3, 1)
            res = weak_type_check(w, f, lam)
            count += 1
            fails += not res.holds
            if res.bound > 0:
                worst = max(worst, res.level_measure / res.bound)
    report(4, "weak type", fails == 0 and count == 1000, f"{count} pairs, {fails} violations, max ratio {worst:.6f}")


def test_5_level_sets():
    t = operator_grid(256)
    w = standard(0)
    worst1 = worst2 = 0.0
    levels = 0
    for f in increasing_profiles(t, 100, seed=5):
        lp = level_points(w, f, -20, 60)
        levels += len(lp.bk1)
        worst1 = max([worst1, *lp.bk1.values()])
        worst2 = max([worst2, *lp.bk2.values()])
    ok = worst1 <= 0.5 + 1e-6 and worst2 <= 2 + 1e-6 and levels > 0
    report(5, "level sets", ok, f"{levels} levels, max bk1 {worst1:.9f}, max bk2 {worst2:.9f}")


def test_6_pointwise_chains():
    t = operator_grid(256)
    weights = [standard(0), standard(1), log_weight(2), power_tail_weight(standard(0), 0.5)]
    worst = {"maximal_stieltjes": 0.0, "calderon_lower": 0.0, "calderon_upper": 0.0}
    n = 0
    for i, w in enumerate(weights):
        for f in random_profiles(t, 1000, seed=600 + i, tail_range=(0.0, 1.0)):
            v = chain_violations(w, f)
            n += 1
            for k in worst:
                worst[k] = max(worst[k], v[k])
    ok = all(v <= 1e-8 for v in worst.values()) and n == 4000
    report(6, "pointwise chains", ok,
           f"{n} profile-weight pairs, max scaled violation {max(worst.values()):.2e}")


def test_7_calderon_comparability():
    fails = []
    for a, b, p in BUILTIN_CALDERON:
        rep = verify_calderon(parse_weight(a), parse_weight(b), p, n_profiles=10)
        wanted = [c for c in rep.checks if c.name.split("[")[0].startswith(("ap_below", "band_", "refinement_"))]
        fails += [c.name for c in wanted if not c.passed]
    ok = not fails and len(BUILTIN_CALDERON) >= 6
    report(7, "Calderon comparability", ok, f"{len(BUILTIN_CALDERON)} pairs, failing checks: {fails or 'none'}")


def test_8_block_equivalence():
    t0 = time.perf_counter()
    om = standard(0)
    d = decomposition_for(om, 4096)
    lo_m, hi_m = math.inf, 0.0
    for k in range(4097):
        f = np.zeros(k + 1)
        f[k] = 1.0
        r = block_norm_equivalence(om, om, f, 2.0, d)
        lo_m, hi_m = min(lo_m, r), max(hi_m, r)
    rng = np.random.default_rng(8)
    ratios = []
    for _ in range(50):
        deg = int(rng.integers(0, 1025))
        c = rng.standard_normal(deg + 1) + 1j * rng.standard_normal(deg + 1)
        c[deg] = c[deg] if c[deg] != 0 else 1.0
        ratios.append(block_norm_equivalence(om, om, c, 2.0, d))
    width = max(ratios) / min(ratios)
    dt = time.perf_counter() - t0
    ok = 2 ** -3 <= lo_m and hi_m <= 2 ** 3 and width <= 2 ** 6 and dt < 60
    report(8, "block equivalence", ok,
           f"monomial ratios in [{lo_m:.4f}, {hi_m:.4f}], random band width {width:.3f}, {dt:.1f} s")


def test_9_adjoint_identity():
    pairs = [(standard(1), standard(0)), (standard(0), standard(0)),
             (standard(0), power_tail_weight(standard(0), 0.5)), (log_weight(3), log_weight(2))]
    worst, divergent = 0.0, 0
    for om, nu in pairs:
        for n in range(65):
            res = adjoint_monomial(om, nu, n, 2.0)
            divergent += res.divergent
            worst = max(worst, res.relative_gap)
    ok = worst <= 1e-8 and divergent == 0
    report(9, "adjoint identity", ok, f"4 pairs, n <= 64, max rel gap {worst:.2e}")


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
