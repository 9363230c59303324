"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they
happen; they are also repeated in the terminal summary.
"""
import io
import math
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy import integrate

from wom_search import analytics as an
from wom_search import cli
from wom_search import equilibrium as eq
from wom_search.analytics import MarketParams
from wom_search.equilibrium import Stability
from wom_search.simulator import SimConfig, simulate_market, verify_equal_profit

SCAN_K = [2**j for j in range(17)]


@pytest.fixture(scope="module")
def scan():
    t0 = time.perf_counter()
    rows = eq.asymptotic_scan(1.0, 0.01, SCAN_K)
    return rows, time.perf_counter() - t0


def _stable_rows(rows):
    return [r for r in rows if r.status == "ok"]


def test_ac1_closed_forms(acceptance):
    t0 = time.perf_counter()
    eta_err = max(
        abs(an.eta(1.0, k) * 2 * (2**k - 1) - 1.0) for k in range(1, 51)
    )
    bound_err = 0.0
    for v in (1.0, 3.0):
        for k in range(1, 31):
            closed = an.lower_cost_bound(k, v)
            for q in (1.0, 1 - 1e-9):
                bound_err = max(bound_err, abs(closed - an.search_benefit(q, k, v)) / v)
    elapsed = time.perf_counter() - t0
    ok = eta_err <= 1e-12 and bound_err <= 1e-7 and elapsed < 1.0
    acceptance("AC1 closed forms", ok,
               f"max rel eta err {eta_err:.2e}, max lower-bound gap {bound_err:.2e}*v, {elapsed:.3f}s")
    assert ok


def test_ac2_reference_curve(acceptance):
    t0 = time.perf_counter()
    report = eq.solve_search_equilibrium(MarketParams(v=1.0, c=0.075, k=1))
    bounds = eq.cost_bounds(1.0, 1)
    elapsed = time.perf_counter() - t0
    stabilities = [r.stability for r in report]
    ok = (
        len(report) == 2
        and stabilities == [Stability.UNSTABLE, Stability.STABLE]
        and report[1].q > report[0].q
        and abs(bounds.c_lower - (math.log(3) - 1) / 2) < 1e-15
        and bounds.c_lower < 0.075 < bounds.c_upper
        and elapsed < 1.0
    )
    acceptance("AC2 two roots at c=0.075", ok,
               f"roots {[round(r.q, 6) for r in report]} {[s.value for s in stabilities]}, "
               f"c_lower {bounds.c_lower:.7f} < 0.075 < c_upper {bounds.c_upper:.7f}, {elapsed:.3f}s")
    assert ok


def _quad_moments(eta, v):
    lo = v * eta / (1 + eta)
    survival = lambda p: eta * (v / p - 1.0)  # 1 - F(p) on the support
    opts = dict(epsabs=1e-14, epsrel=1e-13, limit=200)
    mean = lo + integrate.quad(survival, lo, v, **opts)[0]
    mean_min = lo + integrate.quad(lambda p: survival(p) ** 2, lo, v, **opts)[0]
    return mean, mean - mean_min


def test_ac3_quadrature(acceptance):
    t0 = time.perf_counter()
    worst = 0.0
    for v in (1.0, 2.5):
        for e in (1e-2, 1e-1, 0.5, 1.0, 2.5, 10.0, 1e3):
            mean, gap = _quad_moments(e, v)
            worst = max(worst, abs(an.expected_price(e, v) - mean) / v,
                        abs(an.expected_min_gap(e, v) - gap) / v)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and elapsed < 5.0
    acceptance("AC3 quadrature", ok, f"max error {worst:.2e}*v, {elapsed:.3f}s")
    assert ok


def test_ac4_monte_carlo(acceptance):
    t0 = time.perf_counter()
    cfg = SimConfig(n_consumers=100_000, k=1, q=0.5, master_seed=20240501, replications=64)
    res = simulate_market(cfg)
    shares = an.information_shares(0.5, 1)
    profit = an.firm_profit(0.5, 1)
    checks = {
        "none": res.share_none.within(shares.none_share),
        "captive": res.share_captive.within(shares.captive_share),
        "compare": res.share_compare.within(shares.compare_share),
        "profit_a": res.firm_profits[0].within(profit),
        "profit_b": res.firm_profits[1].within(profit),
        "benefit": res.search_benefit_estimate.within(an.search_benefit(0.5, 1)),
    }
    dist = cfg.price_distribution()
    grid = np.linspace(dist.p_low, dist.v, 5)
    rows = verify_equal_profit(cfg, grid)
    checks["equal_profit"] = all(r.within_3se for r in rows)
    elapsed = time.perf_counter() - t0
    z = max(abs(r.profit - r.analytic) / r.se for r in rows)
    ok = all(checks.values()) and elapsed < 120.0
    failed = [name for name, good in checks.items() if not good]
    acceptance("AC4 Monte Carlo", ok,
               f"failed {failed or 'none'}, worst equal-profit z {z:.2f}, {elapsed:.1f}s")
    assert ok


def test_ac5_vanishing_search(acceptance, scan):
    rows, scan_time = scan
    t0 = time.perf_counter()
    ok_rows = _stable_rows(rows)
    qs = [r.q for r in ok_rows]
    decreasing = all(b < a for a, b in zip(qs, qs[1:]))
    tail_eta = [r.eta for r in ok_rows[-5:]]
    band = max(tail_eta) / min(tail_eta)
    prices_positive = all(r.expected_price > 0 and r.eta > 0 for r in ok_rows)
    big_k_bounds = [an.lower_cost_bound(2**j) for j in range(20, 41)]
    elapsed = scan_time + time.perf_counter() - t0
    ok = (
        ok_rows[-1].k == SCAN_K[-1]
        and decreasing
        and qs[-1] < 1e-3
        and band < 10
        and prices_positive
        and max(big_k_bounds) < 1e-9
        and elapsed < 30.0
    )
    acceptance("AC5 search share vanishes", ok,
               f"stable roots for k>={ok_rows[0].k}, q*(2^16)={qs[-1]:.3e}, tail eta ratio {band:.3f}, "
               f"max c_lower(k>=2^20)={max(big_k_bounds):.1e}, {elapsed:.2f}s")
    assert ok


def test_ac6_links_persist(acceptance, scan):
    rows, scan_time = scan
    t0 = time.perf_counter()
    ok_rows = _stable_rows(rows)
    tail = [r.l_bar for r in ok_rows[-5:]]
    med = float(np.median(tail))
    implication = all(r.implication_holds for r in ok_rows)
    elapsed = scan_time + time.perf_counter() - t0
    ok = (
        all(r.l_bar > 0 for r in ok_rows)
        and all(x > 0.5 * med for x in tail)
        and implication
        and elapsed < 30.0
    )
    acceptance("AC6 links persist", ok,
               f"tail l_bar {min(tail):.4f}..{max(tail):.4f} (median {med:.4f}), "
               f"implication holds at {sum(r.implication_holds for r in ok_rows)}/{len(ok_rows)}, {elapsed:.2f}s")
    assert ok


def test_ac7_stability_semantics(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    failures = []
    for i in range(20):
        k = int(rng.choice([1, 2, 4, 8]))
        b = eq.cost_bounds(1.0, k)
        eps = 0.05 * (b.c_upper - b.c_lower)
        c = float(rng.uniform(b.c_lower + eps, b.c_upper - eps))
        report = eq.solve_search_equilibrium(MarketParams(v=1.0, c=c, k=k))
        if [r.stability for r in report] != [Stability.UNSTABLE, Stability.STABLE]:
            failures.append((i, k, c, "classification"))
            continue
        for root in report:
            for delta in (-0.05, 0.05):
                q0 = min(max(root.q + delta, eq.BR_CLAMP), 1 - eq.BR_CLAMP)
                traj = eq.best_response_dynamics(1.0, c, k, q0)
                if root.stability is Stability.STABLE:
                    good = traj.converged and abs(traj.final - root.q) < 1e-6
                else:
                    # a start clamped onto the boundary stays there, hence >=
                    away = abs(traj.final - root.q)
                    good = away >= abs(q0 - root.q) and away > 1e-6
                if not good:
                    failures.append((i, k, c, root.stability.value, delta))
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 30.0
    acceptance("AC7 stability semantics", ok,
               f"20 instances x 2 roots x 2 perturbations, failures {failures or 'none'}, {elapsed:.2f}s")
    assert ok


_CLI_RUNS = [
    ["solve", "--v", "1", "--k", "1", "--c", "0.075", "--l", "0.01"],
    ["solve", "--v", "1", "--k", "3", "--c", "0.05", "--format", "json"],
    ["bounds", "--k", "5"],
    ["figure1"],
    ["scan", "--v", "1", "--c", "0.01", "--k-max-exp", "16"],
    ["link", "--v", "1", "--k", "2", "--q", "0.3", "--l", "0.02"],
    ["dynamics", "--v", "1", "--k", "1", "--c", "0.075", "--q0", "0.9"],
    ["simulate", "--q", "0.5", "--k", "1", "--n", "100000", "--seed", "42", "--reps", "64"],
    ["simulate", "--q", "0.3", "--k", "4", "--n", "20000", "--seed", "42", "--reps", "16", "--format", "csv"],
]


def test_ac8_cli_determinism(acceptance, tmp_path):
    mismatched = []
    for i, argv in enumerate(_CLI_RUNS):
        outputs = []
        for rep in range(2):
            path = tmp_path / f"run{i}_{rep}.out"
            code = cli.main(argv + ["--out", str(path)], stdout=io.StringIO(), stderr=io.StringIO(), environ={})
            assert code == 0, argv
            outputs.append(path.read_bytes())
        if outputs[0] != outputs[1] or not outputs[0]:
            mismatched.append(argv[0])
    # once more through a fresh interpreter, exercising the installed entry point
    fresh = tmp_path / "fresh.out"
    subprocess.run([sys.executable, "-m", "wom_search", *_CLI_RUNS[7], "--out", str(fresh)], check=True)
    if fresh.read_bytes() != (tmp_path / "run7_0.out").read_bytes():
        mismatched.append("simulate (fresh process)")
    ok = not mismatched
    acceptance("AC8 CLI determinism", ok,
               f"{len(_CLI_RUNS)} invocations rerun plus one fresh process, mismatches {mismatched or 'none'}")
    assert ok
