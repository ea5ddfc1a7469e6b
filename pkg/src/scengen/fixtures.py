"""Synthetic desk-scale datasets with known ground truth.

The generator draws monthly station values from an explicit Gaussian
copula: a sparse linear-Gaussian DAG (hydro stations upstream of
generation stations) defines the correlation matrix, hydro columns map to
seasonal lognormal inflows and generation columns to Beta capacity
factors.  Hourly series are built so each month's hourly mean equals the
monthly draw exactly, with kind-specific diurnal shapes.

The truth (correlation matrix, DAG, marginal parameters) is returned and
written alongside the CSVs so tests can score recovered models against it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.special import ndtr
from scipy.stats import beta as beta_dist

from .data import (
    CAPACITY_FACTOR,
    HOURLY,
    MONTHLY,
    VOLUME,
    HistoricalPanel,
    StationMeta,
    build_panel,
    hours_in_month,
    write_panel,
)

_VRE_KINDS = ("wind", "wind", "csp", "dgsp")

# Cap on the variance a node's parents may explain; keeps every innovation
# variance comfortably positive.
_MAX_EXPLAINED = 0.8


@dataclass(frozen=True)
class Fixture:
    stations: tuple[StationMeta, ...]
    inflows_monthly: HistoricalPanel
    vre_monthly: HistoricalPanel
    vre_hourly: HistoricalPanel | None
    truth: dict


def _make_stations(n_vre: int, n_hydro: int) -> tuple[list[StationMeta], list[StationMeta]]:
    hydro = [StationMeta(f"hyd{i + 1:02d}", "hydro", 0.0, True)
             for i in range(n_hydro)]
    vre = []
    counters: dict[str, int] = {}
    for i in range(n_vre):
        kind = _VRE_KINDS[i % len(_VRE_KINDS)]
        counters[kind] = counters.get(kind, 0) + 1
        vre.append(StationMeta(f"{kind[0]}{counters[kind]:02d}_{kind}",
                               kind, 100.0 + i, False))
    return hydro, vre


def _truth_dag(order: list[StationMeta], rng: np.random.Generator):
    """Sparse linear-Gaussian DAG in topological (hydro-first) order.

    Hydro stations are mutually independent in the copula: the inflow
    generator treats sites as cross-sectionally independent, so coupling
    them here would bake in a dependence no simulator of this design can
    reproduce.  Every edge carries a strong coefficient so the structure
    is recoverable from desk-scale sample sizes.

    Returns per-node parent index lists, coefficients, innovation stds and
    the implied unit-diagonal covariance matrix.
    """
    n = len(order)
    hydro_idx = [i for i, s in enumerate(order) if s.is_evidence]
    parents: list[list[int]] = []
    coeffs: list[np.ndarray] = []
    sigma_e = np.ones(n)
    cov = np.eye(n)
    for i in range(n):
        pa: list[int] = []
        a: list[float] = []
        if not order[i].is_evidence:
            prev_vre = [j for j in range(i) if not order[j].is_evidence]
            if not prev_vre or rng.random() < 0.5:
                h = int(rng.choice(hydro_idx))
                sign = -1.0 if rng.random() < 0.3 else 1.0
                pa.append(h)
                a.append(sign * float(rng.uniform(0.45, 0.6)))
            if prev_vre:
                v = (prev_vre[-1] if rng.random() < 0.7
                     else int(rng.choice(prev_vre)))
                if v not in pa:
                    pa.append(v)
                    a.append(float(rng.uniform(0.45, 0.65)))
        keep = np.argsort(pa)
        pa = [pa[k] for k in keep]
        a = np.array([a[k] for k in keep])
        if pa:
            sub = cov[np.ix_(pa, pa)]
            v = float(a @ sub @ a)
            if v > _MAX_EXPLAINED:
                a = a * np.sqrt(_MAX_EXPLAINED / v)
                v = _MAX_EXPLAINED
            for j in range(i):
                cov[i, j] = cov[j, i] = float(a @ cov[pa, j])
        else:
            v = 0.0
        sigma_e[i] = np.sqrt(1.0 - v)
        parents.append(list(pa))
        coeffs.append(np.asarray(a, dtype=float))
    return parents, coeffs, sigma_e, cov


def _sample_copula(parents, coeffs, sigma_e, n_rows: int,
                   rng: np.random.Generator) -> np.ndarray:
    n = len(parents)
    z = np.empty((n_rows, n))
    eps = rng.standard_normal((n_rows, n))
    for i in range(n):
        acc = sigma_e[i] * eps[:, i]
        for p, a in zip(parents[i], coeffs[i]):
            acc = acc + a * z[:, p]
        z[:, i] = acc
    return z


def _hourly_shape(kind: str, month: int, n_hours: int, day_phase: float) -> np.ndarray:
    hod = np.arange(n_hours) % 24
    day = np.arange(n_hours) // 24
    n_days = n_hours / 24.0
    daily_mod = 1.0 + 0.2 * np.sin(2.0 * np.pi * day / n_days + day_phase)
    if kind == "wind":
        s = 1.0 + 0.35 * np.sin(2.0 * np.pi * (hod + 3) / 24.0)
        s = np.maximum(s * daily_mod, 0.2)
    else:
        daylen = 12.0 + 3.0 * np.cos(2.0 * np.pi * (month - 6) / 12.0)
        sunrise = 12.0 - daylen / 2.0
        s = np.sin(np.pi * (hod + 0.5 - sunrise) / daylen)
        s = np.clip(s, 0.0, None) ** 1.2
        s = s * np.maximum(daily_mod, 0.0)
    return s


def _hourly_from_monthly(kind: str, monthly: np.ndarray,
                         periods: pd.PeriodIndex,
                         rng: np.random.Generator) -> np.ndarray:
    """Hourly capacity factors whose per-month mean equals `monthly` exactly.

    When the scaled diurnal shape would exceed 1, the shape is blended
    toward flat just enough to stay inside [0, 1]; the blend preserves the
    monthly mean.
    """
    cap = 1.0 - 1e-9  # headroom so float rounding cannot breach 1.0
    chunks = []
    for v, period in zip(monthly, periods):
        n_h = hours_in_month(period)
        s = _hourly_shape(kind, period.month, n_h, float(rng.uniform(0, 2 * np.pi)))
        ratio = s / s.mean()
        rmax = float(ratio.max())
        alpha = 0.0
        if v * rmax > cap:
            alpha = min((v * rmax - cap) / (v * rmax - v), 1.0)
        chunks.append(v * ((1.0 - alpha) * ratio + alpha))
    return np.concatenate(chunks)


def build_fixture(n_vre: int = 6, n_hydro: int = 2, years: int = 30,
                  seed: int = 42, start_year: int = 1990,
                  hourly: bool = True) -> Fixture:
    """Generate the in-memory fixture panels plus the ground-truth record."""
    if n_vre < 1 or n_hydro < 1:
        raise ValueError("need at least one VRE and one hydro station")
    rng = np.random.default_rng(seed)
    hydro, vre = _make_stations(n_vre, n_hydro)
    topo = hydro + vre  # generation order, hydro-first
    parents, coeffs, sigma_e, cov = _truth_dag(topo, rng)

    n_rows = years * 12
    z = _sample_copula(parents, coeffs, sigma_e, n_rows, rng)
    month_index = pd.date_range(f"{start_year}-01-01", periods=n_rows, freq="MS")
    months = month_index.month.to_numpy()

    # Marginal parameters.
    marginals: dict[str, dict] = {}
    x = np.empty_like(z)
    for i, st in enumerate(topo):
        if st.is_evidence:
            # Flat seasonal profile: pooled per-station marginals would leak
            # hydro seasonality into the sampled VRE columns, which the
            # seasonality-free VRE truth could never match.  Spatial copula
            # recovery is what this fixture is for.
            mu = float(rng.uniform(np.log(600.0), np.log(1400.0)))
            amp = 0.0
            sig = float(rng.uniform(0.35, 0.5))
            peak = int(rng.integers(1, 13))
            x[:, i] = np.exp(mu + amp * np.cos(2 * np.pi * (months - peak) / 12.0)
                             + sig * z[:, i])
            marginals[st.id] = {"family": "seasonal_lognormal", "log_mean": mu,
                                "log_amp": amp, "log_std": sig,
                                "peak_month": peak}
        else:
            a = float(rng.uniform(2.0, 3.5))
            b = float(rng.uniform(3.5, 6.5))
            x[:, i] = beta_dist.ppf(ndtr(z[:, i]), a, b)
            marginals[st.id] = {"family": "beta", "a": a, "b": b}

    # Storage order is sorted station id (matching load_panel).
    topo_ids = [s.id for s in topo]
    sorted_stations = tuple(sorted(topo, key=lambda s: s.id))
    perm = [topo_ids.index(s.id) for s in sorted_stations]
    x_sorted = x[:, perm]
    cov_sorted = cov[np.ix_(perm, perm)]

    hydro_ids = [s.id for s in sorted_stations if s.is_evidence]
    vre_stations = tuple(s for s in sorted_stations if not s.is_evidence)
    hydro_stations = tuple(s for s in sorted_stations if s.is_evidence)
    hydro_cols = [i for i, s in enumerate(sorted_stations) if s.is_evidence]
    vre_cols = [i for i, s in enumerate(sorted_stations) if not s.is_evidence]

    inflows = build_panel(hydro_stations, month_index, x_sorted[:, hydro_cols],
                          MONTHLY, VOLUME)
    vre_monthly = build_panel(vre_stations, month_index, x_sorted[:, vre_cols],
                              MONTHLY, CAPACITY_FACTOR)

    vre_hourly = None
    if hourly:
        periods = month_index.to_period("M")
        hourly_index = pd.date_range(
            month_index[0], periods=int(sum(hours_in_month(p) for p in periods)),
            freq="h")
        hv = np.empty((len(hourly_index), len(vre_stations)))
        for j, st in enumerate(vre_stations):
            hv[:, j] = _hourly_from_monthly(
                st.kind, vre_monthly.values[:, j], periods, rng)
        vre_hourly = build_panel(vre_stations, hourly_index, hv,
                                 HOURLY, CAPACITY_FACTOR)

    truth = {
        "seed": seed,
        "station_ids": [s.id for s in sorted_stations],
        "topo_ids": topo_ids,
        "correlation": cov_sorted.tolist(),
        "edges": [
            {"parent": topo_ids[p], "child": topo_ids[i],
             "coefficient": float(a)}
            for i in range(len(topo))
            for p, a in zip(parents[i], coeffs[i])
        ],
        "innovation_std": {topo_ids[i]: float(sigma_e[i])
                           for i in range(len(topo))},
        "marginals": marginals,
        "hydro_ids": hydro_ids,
    }
    return Fixture(sorted_stations, inflows, vre_monthly, vre_hourly, truth)


def write_fixture(out_dir, n_vre: int = 6, n_hydro: int = 2, years: int = 30,
                  seed: int = 42, start_year: int = 1990,
                  hourly: bool = True) -> dict[str, str]:
    """Write the fixture dataset as CSVs plus a truth.json sidecar."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fx = build_fixture(n_vre=n_vre, n_hydro=n_hydro, years=years, seed=seed,
                       start_year=start_year, hourly=hourly)

    meta_path = out / "meta.csv"
    pd.DataFrame({
        "station_id": [s.id for s in fx.stations],
        "kind": [s.kind for s in fx.stations],
        "capacity_mw": [s.capacity for s in fx.stations],
        "is_evidence": [str(s.is_evidence).lower() for s in fx.stations],
    }).to_csv(meta_path, index=False)

    inflow_path = out / "inflows_monthly.csv"
    write_panel(fx.inflows_monthly, inflow_path)

    if fx.vre_hourly is not None:
        vre_path = out / "vre_hourly.csv"
        write_panel(fx.vre_hourly, vre_path)
    else:
        vre_path = out / "vre_monthly.csv"
        write_panel(fx.vre_monthly, vre_path)

    truth_path = out / "truth.json"
    with open(truth_path, "w") as fh:
        json.dump(fx.truth, fh, indent=1, sort_keys=True)

    return {"meta": str(meta_path), "vre": str(vre_path),
            "inflows": str(inflow_path), "truth": str(truth_path)}
