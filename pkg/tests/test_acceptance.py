"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines.  Every tolerance is pinned here; nothing is deferred to later
calibration.
"""

import json
import time
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from scengen.bnet import Dag, fit_regression, full_count, learn_structure, \
    parameter_count, score_dag
from scengen.cli import main
from scengen.data import MONTHLY, StationMeta, aggregate_to_monthly
from scengen.disagg import disaggregate, fit_disagg
from scengen.fixtures import build_fixture
from scengen.pipeline import (
    ModelOptions,
    fit_marginals,
    fit_model,
    merge_monthly_panels,
    month_range,
    simulate_model,
)
from scengen.simulate import ScenarioSet
from scengen.transform import NormalPanel, forward, inverse
from scengen.validate import build_report, fisher_z_pair


def _verdict(num: int, ok: bool, detail: str, elapsed: float | None = None) -> None:
    stamp = "" if elapsed is None else f" [{elapsed:.2f}s]"
    print(f"[criterion {num}] {'PASS' if ok else 'FAIL'}: {detail}{stamp}",
          flush=True)
    assert ok, f"criterion {num}: {detail}"


@pytest.fixture(scope="module")
def bundled():
    """The bundled desk fixture: 8 stations (6 VRE + 2 hydro), 30 years."""
    return build_fixture(n_vre=6, n_hydro=2, years=30, seed=42, hourly=True)


@pytest.fixture(scope="module")
def bundled_monthly(bundled):
    return merge_monthly_panels(aggregate_to_monthly(bundled.vre_hourly),
                                bundled.inflows_monthly)


@pytest.fixture(scope="module")
def bundled_marginals(bundled_monthly):
    return fit_marginals(bundled_monthly, 2048)


def test_criterion_1_round_trip_fidelity(bundled_monthly, bundled_marginals):
    panel, marginals = bundled_monthly, bundled_marginals
    start = time.perf_counter()
    back = inverse(forward(panel, marginals), marginals)
    elapsed = time.perf_counter() - start
    ranges = np.nanmax(panel.values, axis=0) - np.nanmin(panel.values, axis=0)
    err = float(np.nanmax(np.abs(back.values - panel.values) / ranges[None, :]))
    ok = err <= 1e-6 and elapsed < 1.0
    _verdict(1, ok, f"360x8 inverse(forward) max err {err:.2e} (<= 1e-6)",
             elapsed)


def test_criterion_2_pit_uniformity(bundled_marginals):
    start = time.perf_counter()
    worst = (None, 0.0)
    critical = 1.358 / np.sqrt(5000)
    ok = True
    for j, (sid, model) in enumerate(sorted(bundled_marginals.items())):
        fresh = model.sample(5000, np.random.default_rng(
            np.random.SeedSequence(entropy=2, spawn_key=(j,))))
        d = stats.kstest(model.cdf(fresh), "uniform").statistic
        if d > worst[1]:
            worst = (sid, d)
        ok = ok and d < critical
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 5.0
    _verdict(2, ok, f"KS vs U(0,1) worst {worst[0]} d={worst[1]:.4f} "
                    f"(< {critical:.4f})", elapsed)


def test_criterion_3_copula_recovery(bundled, bundled_monthly):
    import os

    start = time.perf_counter()
    model = fit_model(bundled.vre_hourly, bundled.inflows_monthly,
                      ModelOptions(seed=11))
    sim = simulate_model(model, 500, month_range("2031-01", 12), seed=5,
                         threads=min(4, os.cpu_count() or 1),
                         disaggregate_hourly=False)
    report = build_report(bundled_monthly, sim.monthly, alpha=0.10)
    elapsed = time.perf_counter() - start
    mean_dr = float(np.mean([abs(t.r_synth - t.r_hist)
                             for t in report.pair_tests]))
    ok = (report.pass_fraction >= 0.90 and mean_dr <= 0.1 and elapsed < 30.0)
    _verdict(3, ok, f"Fisher pass fraction {report.pass_fraction:.3f} "
                    f"(>= 0.90), mean |dr| {mean_dr:.4f} (<= 0.1)", elapsed)


def _oracle_local_score(y, x):
    n = len(y)
    yc = y - y.mean()
    if x is None or x.shape[1] == 0:
        rss, k = float(yc @ yc), 0
    else:
        xc = x - x.mean(axis=0)
        a = np.linalg.inv(xc.T @ xc) @ (xc.T @ yc)
        r = yc - xc @ a
        rss, k = float(r @ r), x.shape[1]
    return -0.5 * n * np.log(rss / n) - 0.5 * (k + 1) * np.log(n)


def _oracle_total(z, parents):
    return sum(_oracle_local_score(z[:, i], z[:, list(pa)] if pa else None)
               for i, pa in enumerate(parents))


def _all_three_node_dags():
    arcs = [(u, v) for u in range(3) for v in range(3) if u != v]
    for mask in range(2 ** len(arcs)):
        chosen = [arcs[k] for k in range(len(arcs)) if mask >> k & 1]
        parents = [tuple(u for u, v in chosen if v == i) for i in range(3)]
        placed, remaining = set(), {0, 1, 2}
        while True:
            ready = {i for i in remaining if set(parents[i]) <= placed}
            if not ready:
                break
            placed |= ready
            remaining -= ready
        if not remaining:
            yield parents


def test_criterion_4_structure_recovery():
    start = time.perf_counter()
    rng = np.random.default_rng(12)
    n_obs, a = 2000, 0.9
    e = np.sqrt(1 - a * a)
    z = np.empty((n_obs, 6))
    z[:, 0] = rng.standard_normal(n_obs)
    for k in range(1, 6):
        z[:, k] = a * z[:, k - 1] + e * rng.standard_normal(n_obs)
    stations = tuple(StationMeta(f"n{j}", "wind", 100.0, False)
                     for j in range(6))
    panel = NormalPanel(stations, pd.date_range("1990-01-01", periods=n_obs,
                                                freq="h"),
                        z, MONTHLY, "capacity_factor")
    dag = learn_structure(panel, max_parents=2, restarts=3, seed=4)
    skeleton = {frozenset(edge) for edge in dag.edges()}
    truth = {frozenset({f"n{k}", f"n{k + 1}"}) for k in range(5)}
    skeleton_ok = skeleton == truth

    # Exhaustive-enumeration oracle on every consecutive 3-node subproblem.
    oracle_ok = True
    for i in range(4):
        sub = z[:, i:i + 3]
        best = max(_all_three_node_dags(), key=lambda p: _oracle_total(sub, p))
        best_skel = {frozenset({u, k}) for k, pa in enumerate(best) for u in pa}
        oracle_ok = oracle_ok and best_skel == {frozenset({0, 1}),
                                                frozenset({1, 2})}

    true_dag = Dag(tuple(f"n{j}" for j in range(6)),
                   {"n0": (), **{f"n{k}": (f"n{k - 1}",) for k in range(1, 6)}},
                   max_parents=2)
    bic_ok = score_dag(panel, dag) >= score_dag(panel, true_dag) - 1e-6
    elapsed = time.perf_counter() - start
    ok = skeleton_ok and oracle_ok and bic_ok and elapsed < 10.0
    _verdict(4, ok, f"chain skeleton recovered={skeleton_ok}, "
                    f"triple-oracle={oracle_ok}, BIC >= truth-1e-6={bic_ok}",
             elapsed)


def test_criterion_5_parameter_reduction(bundled_monthly):
    start = time.perf_counter()
    marginals = fit_marginals(bundled_monthly, 2048)
    z8 = forward(bundled_monthly, marginals)
    net8 = fit_regression(
        learn_structure(z8, max_parents=3, restarts=2, seed=6), z8)
    count8 = parameter_count(net8)
    ok8 = count8 <= 32 < full_count(8) == 36

    big = build_fixture(n_vre=40, n_hydro=10, years=30, seed=13, hourly=False)
    monthly50 = merge_monthly_panels(big.vre_monthly, big.inflows_monthly)
    marg50 = fit_marginals(monthly50, 2048)
    z50 = forward(monthly50, marg50)
    net50 = fit_regression(
        learn_structure(z50, max_parents=6, restarts=2, seed=6), z50)
    count50 = parameter_count(net50)
    ok50 = count50 <= 350 and count50 / full_count(50) <= 0.28
    elapsed = time.perf_counter() - start
    ok = ok8 and ok50 and elapsed < 60.0
    _verdict(5, ok, f"8-station count {count8} <= 32 < 36; "
                    f"50-station count {count50} <= 350 "
                    f"({count50 / 12.75:.1f}% of 1275)", elapsed)


def test_criterion_6_disaggregation(bundled):
    start = time.perf_counter()
    model = fit_disagg(bundled.vre_hourly, 0.95)
    months = pd.DatetimeIndex([pd.Timestamp(f"2031-{m:02d}-01")
                               for m in range(1, 13)])
    rng = np.random.default_rng(21)
    n_st = len(model.stations)
    # Constructed to avoid clipping: for every candidate year y the scaled
    # peak is value * profile_max(y) / cf_hist(y), so capping each station at
    # min_y cf_hist(y) / profile_max(y) keeps all hours inside [0, 1]
    # whichever profile the matcher selects; profiles are nonnegative.
    values = np.empty((4, 12, n_st))
    for t, ts in enumerate(months):
        dec = model.months[ts.month]
        peak = np.vstack([dec.profiles[int(y)].max(axis=0) for y in dec.years])
        bound = (dec.monthly_cf / peak).min(axis=0)
        values[:, t, :] = bound[None, :] * rng.uniform(0.5, 0.95, size=(4, n_st))
    sset = ScenarioSet(model.stations, months, values, seed=0)
    result = disaggregate(sset, model)

    assert (result.clipping["rel_mean_deviation"] == 0.0).all()
    hourly = result.hourly.values
    mean_ok = True
    offset = 0
    for t, ts in enumerate(months):
        n_h = (pd.Period(ts, freq="M").end_time.dayofyear
               - pd.Period(ts, freq="M").start_time.dayofyear + 1) * 24
        block = hourly[:, offset:offset + n_h, :].mean(axis=1)
        rel = np.abs(block - values[:, t, :]) / values[:, t, :]
        mean_ok = mean_ok and float(rel.max()) <= 1e-9
        offset += n_h

    prov = result.provenance.set_index(["scenario", "month"])
    nn_ok = True
    for s in range(4):
        for t, ts in enumerate(months):
            dec = model.months[ts.month]
            proj = (values[s, t] - dec.col_means) @ dec.loadings
            d2 = ((dec.projections - proj) ** 2).sum(axis=1)
            expected = int(dec.years[np.argmin(d2)])
            got = int(prov.loc[(s, f"{ts.year:04d}-{ts.month:02d}"),
                               "selected_year"])
            nn_ok = nn_ok and got == expected
    elapsed = time.perf_counter() - start
    ok = mean_ok and nn_ok and elapsed < 10.0
    _verdict(6, ok, f"mean preservation <= 1e-9: {mean_ok}; "
                    f"nearest-profile oracle match: {nn_ok}", elapsed)


def test_criterion_7_fisher_oracle():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 30
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(1000):
        r1, r2 = rng.uniform(-0.99, 0.99, size=2)
        n1, n2 = (int(v) for v in rng.integers(4, 10_000, size=2))
        t_got, p_got = fisher_z_pair(r1, n1, r2, n2)
        se = mpmath.sqrt(mpmath.mpf(1) / (n1 - 3) + mpmath.mpf(1) / (n2 - 3))
        t_ref = (mpmath.atanh(r1) - mpmath.atanh(r2)) / se
        p_ref = mpmath.erfc(abs(t_ref) / mpmath.sqrt(2))
        worst = max(worst, abs(t_got - float(t_ref)), abs(p_got - float(p_ref)))
    ok = worst <= 1e-12
    _verdict(7, ok, f"1000 random tuples, worst |err| {worst:.2e} (<= 1e-12)")


def _write_run_config(base: Path, fx: Path, out: Path, n_scen: int,
                      months: int, seed: int, **model_kw) -> Path:
    config = {
        "paths": {
            "vre": str(fx / "vre_hourly.csv"),
            "inflows": str(fx / "inflows_monthly.csv"),
            "meta": str(fx / "meta.csv"),
            "out_dir": str(out),
        },
        "model": {"max_parents": 6, "restarts": 3, **model_kw},
        "simulation": {"n_scenarios": n_scen,
                       "horizon": {"start": "2031-01", "months": months},
                       "seed": seed},
        "validation": {"alpha": 0.10},
    }
    path = base / "run.json"
    path.write_text(json.dumps(config))
    return path


_DETERMINISM_FILES = ("model.json", "manifest_fit.json",
                      "scenarios_monthly.csv", "scenarios_hourly.csv",
                      "provenance.csv", "clipping.csv",
                      "manifest_simulate.json")


def test_criterion_8_determinism(tmp_path):
    fx = tmp_path / "fx"
    assert main(["make-fixture", "--out", str(fx), "--seed", "5",
                 "--vre", "3", "--hydro", "1", "--years", "6"]) == 0
    out = tmp_path / "out"
    cfg = _write_run_config(tmp_path, fx, out, n_scen=10, months=6, seed=31,
                            max_parents=2, restarts=2)

    def run_once():
        assert main(["fit", "--config", str(cfg)]) == 0
        assert main(["simulate", "--config", str(cfg),
                     "--model", str(out / "model.json")]) == 0
        return {name: (out / name).read_bytes() for name in _DETERMINISM_FILES}

    first = run_once()
    second = run_once()
    diffs = [name for name in _DETERMINISM_FILES if first[name] != second[name]]
    ok = not diffs
    _verdict(8, ok, "fit + simulate reruns byte-identical"
             if ok else f"outputs differ: {diffs}")


def test_criterion_9_end_to_end_runtime(tmp_path):
    fx = tmp_path / "fx"
    assert main(["make-fixture", "--out", str(fx), "--seed", "42",
                 "--vre", "7", "--hydro", "3", "--years", "30"]) == 0
    out = tmp_path / "out"
    cfg = _write_run_config(tmp_path, fx, out, n_scen=100, months=12, seed=7)

    start = time.perf_counter()
    rc_fit = main(["fit", "--config", str(cfg)])
    rc_sim = main(["simulate", "--config", str(cfg),
                   "--model", str(out / "model.json")])
    rc_val = main(["validate", "--config", str(cfg),
                   "--model", str(out / "model.json"),
                   "--scenarios", str(out)])
    elapsed = time.perf_counter() - start
    hourly_rows = sum(1 for _ in open(out / "scenarios_hourly.csv")) - 1
    ok = (rc_fit == rc_sim == rc_val == 0
          and hourly_rows == 100 * 8760 * 7
          and elapsed < 60.0)
    _verdict(9, ok, f"10 stations, 30y, 100 scenarios incl. hourly "
                    f"disaggregation; {hourly_rows} hourly rows", elapsed)
    (out / "scenarios_hourly.csv").unlink()  # free ~300 MB of tmp space
