"""End-to-end acceptance run.

Each criterion prints a single PASS/FAIL line (also repeated in the pytest
terminal summary). Heavy artifacts are produced once per session through
the CLI, exactly as a user would invoke it.
"""

import csv
import hashlib
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from acceptance_report import report
from cvqkd.adversary import Attack, Direction, RateQuery, Scheme, compute_kgr, holevo_eb_hd, holevo_eb_pnr
from cvqkd.channel import ProtocolParams
from cvqkd.info import Numerics, default_grid, hd_mutual_info_ab, pnr_mutual_info
from cvqkd.selfcheck import (
    eve_given_x_agreement,
    eve_unconditional_agreement,
    homodyne_conditioning_agreement,
    mc_agreement,
    mixture_reconstruction,
    thermal_entropy_agreement,
)

pytestmark = pytest.mark.slow

HD_CONSTANTS = {1: 5, 2: 9, 3: 13}


def cli(out: Path, *argv, threads: int = 1) -> float:
    env = dict(os.environ, CVQKD_THREADS=str(threads))
    start = time.perf_counter()
    subprocess.run([sys.executable, "-m", "cvqkd", *argv, "--out", str(out)],
                   env=env, check=True, capture_output=True, text=True)
    return time.perf_counter() - start


def read(path: Path) -> list[dict]:
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def column(rows, name):
    return np.array([float(r[name]) for r in rows])


def digests(folder: Path) -> dict:
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(folder.glob("*.csv"))}


@pytest.fixture(scope="session")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.fixture(scope="session")
def figure2(workdir):
    return workdir / "fig2", cli(workdir / "fig2", "figure", "2")


@pytest.fixture(scope="session")
def figure3(workdir):
    return workdir / "fig3", cli(workdir / "fig3", "figure", "3")


@pytest.fixture(scope="session")
def figure4_runs(workdir):
    runs = [(workdir / "fig4_a", 1), (workdir / "fig4_b", 1), (workdir / "fig4_c", 8)]
    return [(out, threads, cli(out, "figure", "4", threads=threads)) for out, threads in runs]


@pytest.fixture(scope="session")
def figure5(workdir):
    return workdir / "fig5", cli(workdir / "fig5", "figure", "5")


def curves(folder: Path, fig: int) -> dict:
    return {(s, d): read(folder / f"fig{fig}_{s}_{d}.csv") for s in ("hd", "pnr") for d in ("dr", "rr")}


# ---------------------------------------------------------------------------

def test_criterion_1_closed_forms():
    start = time.perf_counter()
    mi_err = abs(hd_mutual_info_ab(2.0, 1.0) - 0.5 * math.log2(9))
    kgr = compute_kgr(RateQuery(Scheme.HD, Attack.INDIVIDUAL, Direction.DIRECT, ProtocolParams(eta=0.5)))
    kgr_err = abs(kgr.delta_i)
    elapsed = time.perf_counter() - start
    ok = report("1", mi_err <= 1e-14 and kgr_err <= 1e-14 and elapsed < 5,
                f"|I_HD - log2(9)/2|={mi_err:.1e}, HD KGR at eta=0.5 {kgr_err:.1e} (tol 1e-14), {elapsed:.2f}s")
    assert ok


def test_criterion_2_single_crossing(figure2, figure3):
    folder, elapsed = figure2
    fig3_folder, _ = figure3
    thresholds = {float(r["sigma2"]): float(r["beta_th"]) for r in read(fig3_folder / "fig3_threshold.csv")}
    problems = []
    start = time.perf_counter()
    for s2, arg in HD_CONSTANTS.items():
        hd = 0.5 * math.log2(arg)
        rows = read(folder / f"fig2_pnr_sigma2_{s2}.csv")
        gap = column(rows, "mi_bits") - hd
        changes = np.count_nonzero(np.diff(np.sign(gap)))
        if changes != 1 or gap[0] >= 0:
            problems.append(f"sigma2={s2}: {changes} sign changes")
        hd_rows = read(folder / f"fig2_hd_sigma2_{s2}.csv")
        if np.abs(column(hd_rows, "mi_bits") - hd).max() > 1e-14:
            problems.append(f"sigma2={s2}: HD constant off")
        beta_th = thresholds[float(s2)]
        betas = column(rows, "beta")
        k = int(np.argmax(gap >= 0))
        if not betas[k - 1] <= beta_th <= betas[k]:
            problems.append(f"sigma2={s2}: threshold {beta_th} outside sweep bracket")
        below, above = (ProtocolParams(sigma2=float(s2), beta=beta_th + d, eta=1.0) for d in (-1e-3, 1e-3))
        if not pnr_mutual_info(below, default_grid(below)) < hd < pnr_mutual_info(above, default_grid(above)):
            problems.append(f"sigma2={s2}: crossing not within 1e-3 of {beta_th}")
    elapsed += time.perf_counter() - start
    ok = report("2", not problems and elapsed <= 120,
                f"one crossing from below for sigma2=1,2,3; beta_th="
                f"{', '.join(f'{thresholds[float(s)]:.4f}' for s in HD_CONSTANTS)} (+-1e-3); "
                f"{elapsed:.0f}s {'; '.join(problems)}")
    assert ok


def test_criterion_3_threshold_decreasing(figure3):
    folder, elapsed = figure3
    rows = read(folder / "fig3_threshold.csv")
    sigma2, beta = column(rows, "sigma2"), column(rows, "beta_th")
    decreasing = bool(np.all(np.diff(beta) < 0))
    at_two = float(beta[np.isclose(sigma2, 2.0)][0])
    ok = report("3", decreasing and at_two < 2 and len(rows) == 9 and elapsed <= 300,
                f"beta_th strictly decreasing over sigma2=1..3 step 0.25: {decreasing}; "
                f"beta_th(2)={at_two:.4f} < 2; {elapsed:.0f}s")
    assert ok


@pytest.fixture(scope="session")
def criterion_4(figure4_runs):
    folder, _, elapsed = figure4_runs[0]
    data = curves(folder, 4)
    eta = column(data["hd", "dr"], "eta")
    crossings = {}
    for scheme in ("hd", "pnr"):
        d = column(data[scheme, "dr"], "delta_i_bits")
        k = int(np.argmax(d > 0))
        # linear interpolation between the bracketing sweep points
        crossings[scheme] = eta[k - 1] - d[k - 1] * (eta[k] - eta[k - 1]) / (d[k] - d[k - 1])
    margin = {direction: column(data["pnr", direction], "delta_i_bits")
              - column(data["hd", direction], "delta_i_bits") for direction in ("dr", "rr")}
    result = {
        "a": all(abs(c - 0.5) <= 1e-3 for c in crossings.values()),
        "b_rr": bool(np.all(margin["rr"] >= -1e-4)),
        "b_dr": bool(np.all(margin["dr"] >= -1e-4)),
        "eta": eta, "margin": margin, "crossings": crossings, "elapsed": elapsed,
    }
    dr_bad = eta[margin["dr"] < -1e-4]
    report("4", result["a"] and result["b_rr"] and result["b_dr"] and elapsed <= 300,
           f"(a) DR zero crossings hd={crossings['hd']:.6f} pnr={crossings['pnr']:.6f} (0.5+-1e-3): "
           f"{result['a']}; (b) RR PNR>=HD-1e-4 everywhere: {result['b_rr']}; "
           f"(b) DR PNR>=HD-1e-4 everywhere: {result['b_dr']}"
           + (f" (violated at {dr_bad.size} points, eta {dr_bad.min():.2f}..{dr_bad.max():.2f},"
              f" worst {margin['dr'].min():.3e} bits)" if dr_bad.size else "")
           + f"; {elapsed:.0f}s")
    return result


def test_criterion_4a_zero_crossings(criterion_4):
    assert criterion_4["a"] and criterion_4["elapsed"] <= 300


def test_criterion_4b_reverse(criterion_4):
    assert criterion_4["b_rr"]


@pytest.mark.xfail(strict=True, reason="for individual DR the PNR-HD gap is odd about eta=0.5, "
                                       "so PNR cannot lead HD on both sides of 0.5")
def test_criterion_4b_direct(criterion_4):
    assert criterion_4["b_dr"]


def test_criterion_4_direct_gap_is_antisymmetric(criterion_4):
    # why 4b-DR cannot hold: DR rate is F(eta) - F(1 - eta) for either scheme
    eta, gap = criterion_4["eta"], criterion_4["margin"]["dr"]
    for e, g in zip(eta, gap):
        mirror = 1.0 - e
        params = [ProtocolParams(eta=x) for x in (e, mirror)]
        pnr = [pnr_mutual_info(p, default_grid(p)) for p in params]
        hd = [hd_mutual_info_ab(2.0, p.eta) for p in params]
        assert g == pytest.approx((pnr[0] - hd[0]) - (pnr[1] - hd[1]), abs=1e-9)
    upper = eta > 0.5
    assert np.all(gap[upper] > 0)


def test_criterion_5_collective_ordering(figure5):
    folder, elapsed = figure5
    data = curves(folder, 5)
    eta = column(data["hd", "rr"], "eta")
    rr = column(data["pnr", "rr"], "delta_i_bits") - column(data["hd", "rr"], "delta_i_bits")
    dr = column(data["hd", "dr"], "delta_i_bits") - column(data["pnr", "dr"], "delta_i_bits")
    a = bool(np.all(rr >= -1e-3))
    b_low = bool(np.all(dr[eta <= 0.8 + 1e-12] > 0))
    b_high = bool(np.any(dr[eta >= 0.95 - 1e-12] < 0))
    ok = report("5", a and b_low and b_high and elapsed <= 1800,
                f"(a) RR PNR>=HD-1e-3 everywhere (min margin {rr.min():.2e}): {a}; "
                f"(b) DR HD>PNR for eta<=0.8: {b_low}, PNR>HD at some eta>=0.95: {b_high}; {elapsed:.0f}s")
    assert ok


def test_criterion_6_entropy_oracles():
    start = time.perf_counter()
    deltas = {"thermal": thermal_entropy_agreement(), "rho_E|x": eve_given_x_agreement(),
              "rho_E": eve_unconditional_agreement()}
    elapsed = time.perf_counter() - start
    ok = report("6", max(deltas.values()) <= 1e-4 and elapsed <= 120,
                ", ".join(f"{k} {v:.1e}" for k, v in deltas.items()) + f" bits (tol 1e-4); {elapsed:.0f}s")
    assert ok


def test_criterion_7_homodyne_conditioning():
    start = time.perf_counter()
    delta = homodyne_conditioning_agreement(etas=(0.3, 0.7))
    ends = [abs(f(ProtocolParams(eta=e))) for f in (holevo_eb_hd, holevo_eb_pnr) for e in (0.0, 1.0)]
    elapsed = time.perf_counter() - start
    ok = report("7", delta <= 1e-3 and max(ends) <= 1e-6 and elapsed <= 300,
                f"Fock oracle vs derived covariance {delta:.1e} bits (tol 1e-3); "
                f"chi(E;B) at eta=0,1 max {max(ends):.1e} (tol 1e-6); {elapsed:.0f}s")
    assert ok


def test_criterion_8_monte_carlo():
    start = time.perf_counter()
    checks = {eta: mc_agreement(eta, 10**7) for eta in (0.5, 1.0)}
    elapsed = time.perf_counter() - start
    ok = report("8", all(d <= tol for d, tol in checks.values()) and elapsed <= 600,
                "; ".join(f"eta={e}: |diff|={d:.2e} <= {tol:.2e}" for e, (d, tol) in checks.items())
                + f" (10^7 samples); {elapsed:.0f}s")
    assert ok


def test_criterion_9_convergence():
    start = time.perf_counter()
    worst, where = 0.0, None
    fine = Numerics(order=128, cutoff_scale=2)
    for eta in (0.3, 0.7, 1.0):
        params = ProtocolParams(eta=eta)
        for attack in Attack:
            for scheme in Scheme:
                for direction in Direction:
                    base = compute_kgr(RateQuery(scheme, attack, direction, params)).delta_i
                    refined = compute_kgr(RateQuery(scheme, attack, direction, params, fine)).delta_i
                    if abs(base - refined) >= worst:
                        worst, where = abs(base - refined), (eta, attack.value, scheme.value, direction.value)
    mixture = max(mixture_reconstruction(eta) for eta in (0.3, 0.5, 0.8))
    elapsed = time.perf_counter() - start
    ok = report("9", worst < 1e-4 and mixture <= 1e-8 and elapsed <= 900,
                f"max |dDeltaI| under doubled order and cutoff {worst:.1e} bits at {where} (tol 1e-4); "
                f"mixture reconstruction {mixture:.1e} (tol 1e-8); {elapsed:.0f}s")
    assert ok


def test_criterion_10_determinism(figure4_runs):
    hashes = [digests(out) for out, _, _ in figure4_runs]
    same = len(hashes[0]) == 4 and all(h == hashes[0] for h in hashes)
    ok = report("10", same, f"figure 4 CSV digests identical across runs with CVQKD_THREADS="
                f"{[t for _, t, _ in figure4_runs]}: {same}")
    assert ok
