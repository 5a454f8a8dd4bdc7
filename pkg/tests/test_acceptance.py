"""Exit criteria: each test reproduces one published result at a pinned tolerance.

A pass/fail line per criterion is printed in the pytest terminal summary.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from homvol.geometry import (
    closed_domain_volume,
    closed_surface_volume,
    gram_volume,
    jacobian,
    ratio_v_over_f,
    volume_element,
)
from homvol.inference import SCALES, fit_alpha, table_wald
from homvol.integrate import DEFAULT_P_GRID, McConfig, mc_volume, quad_domain_volume, quad_surface_volume, table_thm1, table_thm2
from homvol.scales import (
    BOUNDARY_SLACK,
    OR,
    RD,
    RR,
    CellTriple,
    OutcomeQuad,
    domain_mask,
    fourth_cell,
    interaction_measure,
    null_value,
    solve_fourth,
)

PUBLISHED_F_O = (0.75, 0.76, 0.76, 0.77, 0.77, 0.78, 0.79, 0.81, 0.85, 1.00)
PUBLISHED_V_O = (1.76, 1.76, 1.76, 1.77, 1.78, 1.79, 1.81, 1.85, 1.93, 2.47)
PUBLISHED_RATIO_O = (2.33, 2.32, 2.32, 2.31, 2.30, 2.29, 2.28, 2.27, 2.27, 2.47)
PUBLISHED_WALD = {
    RD: (0.214, 0.097, 0.049, 0.031, 0.022),
    RR: (0.246, 0.107, 0.053, 0.034, 0.024),
    OR: (0.253, 0.111, 0.055, 0.035, 0.025),
}
PUBLISHED_WALD_RATIOS = {
    RR: (1.148, 1.106, 1.096, 1.093, 1.092),
    OR: (1.182, 1.151, 1.139, 1.135, 1.134),
}
WALD_NS = (100, 500, 2000, 5000, 10000)
RR_BASE = (math.sqrt(2) + math.log(1 + math.sqrt(2))) ** 2


@pytest.fixture(scope="module")
def thm2_rows():
    start = time.perf_counter()
    rows = table_thm2(DEFAULT_P_GRID)
    return rows, time.perf_counter() - start


def test_criterion_01_closed_forms(report):
    worst = 0.0
    for p in (0.1, 0.37, 1.0):
        pairs = [
            (closed_domain_volume(RD, p), 2 / 3 * p**3),
            (closed_domain_volume(RR, p), 3 / 4 * p**3),
            (closed_surface_volume(RD, p), 4 / 3 * p**3),
            (closed_surface_volume(RR, p), RR_BASE / 3 * p**3),
        ]
        worst = max(worst, max(abs(a - b) for a, b in pairs))
    assert report(1, worst <= 1e-12, f"closed forms, max |diff| = {worst:.1e} (tol 1e-12)")


def test_criterion_02_cubature_vs_closed(report):
    start = time.perf_counter()
    rr = quad_surface_volume(RR, 1.0).value
    t_rr = time.perf_counter() - start
    start = time.perf_counter()
    rd = quad_surface_volume(RD, 1.0).value
    t_rd = time.perf_counter() - start
    ok = abs(rr - 1.756573) <= 1e-4 and abs(rd - 4 / 3) <= 1e-8 and t_rr <= 10 and t_rd <= 10
    assert report(
        2, ok, f"V_m(1) quad = {rr:.7f} (|d| {abs(rr - 1.756573):.1e}), V_a(1) quad |d| = {abs(rd - 4 / 3):.1e}, "
        f"times {t_rr:.1f}s/{t_rd:.2f}s"
    )


def test_criterion_03_or_domain_table(report):
    start = time.perf_counter()
    rows = table_thm1(DEFAULT_P_GRID)
    elapsed = time.perf_counter() - start
    got = [r.normalized for r in rows]
    worst = max(abs(g - e) for g, e in zip(got, PUBLISHED_F_O))
    ok = worst <= 0.01 and elapsed <= 60
    assert report(3, ok, f"F_o/p^3 = {' '.join(f'{g:.3f}' for g in got)}; max |d| = {worst:.4f}; {elapsed:.1f}s")


def test_criterion_04_or_surface_table(report, thm2_rows):
    rows, elapsed = thm2_rows
    got = [r.normalized for r in rows]
    errs = [abs(g - e) for g, e in zip(got, PUBLISHED_V_O)]
    ok = max(errs[:-1]) <= 0.01 and errs[-1] <= 0.02 and elapsed <= 300
    assert report(4, ok, f"V_o/p^3 = {' '.join(f'{g:.3f}' for g in got)}; max |d| = {max(errs):.4f}; {elapsed:.1f}s")


def test_criterion_05_ratio_table(report, thm2_rows):
    rows, _ = thm2_rows
    got = [r.ratio for r in rows]
    worst = max(abs(g - e) for g, e in zip(got, PUBLISHED_RATIO_O))
    rd_exact = all(ratio_v_over_f(RD, p) == 2 for p in DEFAULT_P_GRID)
    rr_err = max(abs(ratio_v_over_f(RR, p) - 4 / 9 * RR_BASE) for p in DEFAULT_P_GRID)
    ok = worst <= 0.02 and rd_exact and rr_err <= 1e-10
    assert report(
        5, ok, f"V_o/F_o = {' '.join(f'{g:.3f}' for g in got)}; max |d| = {worst:.4f}; RD ratio 2 exact: {rd_exact}; "
        f"RR ratio |d| = {rr_err:.1e}"
    )


def test_criterion_06_monte_carlo_consistency(report):
    quantities = [
        ("domain", RD, 1.0), ("domain", RR, 1.0), ("surface", RD, 1.0), ("surface", RR, 1.0),
        ("domain", RR, 0.37), ("surface", RR, 0.37), ("domain", OR, 1.0),
    ]
    closed = {"domain": closed_domain_volume, "surface": closed_surface_volume}
    summary = []
    ok = True
    for kind, scale, p in quantities:
        exact = closed[kind](scale, p)
        passes = 0
        for seed in range(20):
            est = mc_volume(kind, scale, p, McConfig(samples=10**6, seed=1000 + seed))
            passes += abs(est.value - exact) <= 4 * est.std_error
        summary.append(f"{kind[0]}/{scale.value}/p={p}: {passes}/20")
        ok &= passes >= 19
    assert report(6, ok, "MC within 4 SE: " + ", ".join(summary))


def test_criterion_07_gram_oracle(report):
    rng = np.random.default_rng(2017)
    pts = rng.uniform(0.01, 0.99, size=(1000, 3))
    worst = max(
        abs(volume_element(s, x, y, z) - gram_volume(jacobian(s, x, y, z))) for s in SCALES for x, y, z in pts
    )
    assert report(7, worst <= 1e-10, f"max |v - sqrt(det JtJ)| over 3000 points = {worst:.2e} (tol 1e-10)")


def test_criterion_08_wald_table(report):
    mc = McConfig(samples=10**7, seed=42)
    rows = table_wald(WALD_NS, 0.05, mc)
    cell_err = max(abs(r.volumes[s].value - PUBLISHED_WALD[s][i]) for s in SCALES for i, r in enumerate(rows))
    ratio_err = max(abs(r.ratios[s] - PUBLISHED_WALD_RATIOS[s][i]) for s in (RR, OR) for i, r in enumerate(rows))
    monotone = all(
        a.volumes[s].value >= b.volumes[s].value for s in SCALES for a, b in zip(rows, rows[1:])
    )
    ordered = all(r.volumes[RD].value < r.volumes[RR].value < r.volumes[OR].value for r in rows)
    ok = cell_err <= 0.005 and ratio_err <= 0.02 and monotone and ordered
    detail = f"alpha=0.05, 1e7 draws: max cell |d| = {cell_err:.4f}, max ratio |d| = {ratio_err:.4f}, " \
             f"monotone={monotone}, ordered={ordered}"
    if cell_err > 0.005:
        alpha, err = fit_alpha(PUBLISHED_WALD, WALD_NS, mc=McConfig(samples=10**6, seed=42))
        detail += f"; best-fitting alpha = {alpha:.4f} (max |d| {err:.4f})"
    assert report(8, ok, detail)


def test_criterion_09_property_suite(report):
    rng = np.random.default_rng(9)
    # round trip on interior triples: solve_fourth -> interaction_measure = null
    rt = 0.0
    for s in SCALES:
        for x, y, z in rng.uniform(0.1, 0.9, size=(3000, 3)):
            w = solve_fourth(CellTriple(x, y, z), s)
            if 0 < w < 1:
                rt = max(rt, abs(interaction_measure(OutcomeQuad(x, y, z, w), s) - null_value(s)))
    # domain characterisation
    mismatches = 0
    for s in SCALES:
        for p in (0.4, 1.0):
            x, y, z = rng.uniform(0, p, size=(3, 10**5))
            w = fourth_cell(x, y, z, s)
            diff = domain_mask(x, y, z, p, s) != ((w > 0) & (w < p))
            far = np.minimum(np.abs(w[diff]), np.abs(w[diff] - p)) > BOUNDARY_SLACK
            mismatches += int(far.sum())
    # scaling law for RD/RR surfaces
    scaling_ok = True
    for s in (RD, RR):
        base = mc_volume("surface", s, 1.0, McConfig(samples=10**6, seed=90))
        for p in (0.2, 0.6):
            est = mc_volume("surface", s, p, McConfig(samples=10**6, seed=91)).scaled(p**-3)
            scaling_ok &= abs(est.value - base.value) <= 4 * math.hypot(est.std_error, base.std_error)
    # rare-outcome agreement of RR and OR
    p = 0.1
    df = abs(closed_domain_volume(RR, p) - quad_domain_volume(OR, p).value) / p**3
    dv = abs(closed_surface_volume(RR, p) - quad_surface_volume(OR, p).value) / p**3
    ok = rt <= 1e-12 and mismatches == 0 and scaling_ok and df <= 0.01 and dv <= 0.01
    assert report(
        9, ok, f"round trip max {rt:.1e}; domain mismatches {mismatches}; scaling ok {scaling_ok}; "
        f"p=0.1 |F_m-F_o|/p^3 = {df:.4f}, |V_m-V_o|/p^3 = {dv:.4f}"
    )


def test_criterion_10_determinism(report):
    cmd = [sys.executable, "-m", "homvol.cli", "tables", "--which", "wald", "--seed", "42"]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, check=True).stdout
    ok = first == second and len(first) > 0
    assert report(10, ok, f"two runs of `homvol tables --which wald --seed 42`: byte-identical={first == second} "
                          f"({len(first)} bytes)")
