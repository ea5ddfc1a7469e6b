"""Scenario generation from a fitted network.

Sampling walks the DAG in topological order once per (scenario, month):
evidence stations are clamped to externally supplied values (transformed to
z-space), every other station draws a bootstrap innovation from its
empirical residual vector and adds the weighted parent values.  Months are
sampled independently; temporal structure enters only through evidence
(inflows) and, later, hourly disaggregation profiles.

Scenario streams are counter-based (Philox keyed by seed, stream and
scenario index) so output is reproducible and independent of thread
scheduling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.special import ndtr, ndtri

from .bnet import BayesNet
from .data import CAPACITY_FACTOR, MONTHLY, HistoricalPanel, StationMeta
from .errors import (
    ConfigError,
    DataError,
    EvidenceCoverageError,
    InsufficientDataError,
    NumericError,
    RangeError,
)
from .marginal import TAIL_EPS

_STREAM_BNET = 0
_STREAM_INFLOW = 1

_MIN_OBS_PER_MONTH = 5
_AR_BURN_IN = 120


def scenario_rng(seed: int, stream: int, scenario: int) -> np.random.Generator:
    """Counter-based substream for one scenario."""
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=(int(stream), int(scenario)))
    return np.random.Generator(np.random.Philox(seed=ss))


@dataclass(frozen=True)
class ScenarioSet:
    """Generated scenarios in original units, (scenario x time x station)."""

    stations: tuple[StationMeta, ...]
    index: pd.DatetimeIndex
    values: np.ndarray
    seed: int
    resolution: str = MONTHLY

    @property
    def scenario_count(self) -> int:
        return self.values.shape[0]

    @property
    def station_ids(self) -> list[str]:
        return [s.id for s in self.stations]

    def __post_init__(self):
        expected = (len(self.index), len(self.stations))
        if self.values.shape[1:] != expected:
            raise ValueError(
                f"values shape {self.values.shape[1:]} != (time, station) {expected}")
        for j, st in enumerate(self.stations):
            col = self.values[:, :, j]
            if st.kind == "hydro":
                if np.any(col < 0):
                    raise RangeError(f"negative volume for station {st.id!r}")
            elif np.any((col < 0) | (col > 1)):
                raise RangeError(
                    f"capacity factor outside [0, 1] for station {st.id!r}")


@dataclass(frozen=True)
class ZScenarios:
    """Normal-space samples before the inverse transform."""

    stations: tuple[StationMeta, ...]
    index: pd.DatetimeIndex
    z_values: np.ndarray  # (scenario, time, station)

    @property
    def station_ids(self) -> list[str]:
        return [s.id for s in self.stations]


def _evidence_z(net: BayesNet, evidence: ScenarioSet,
                horizon: pd.DatetimeIndex, n_scenarios: int) -> dict[str, np.ndarray]:
    """Validate coverage and forward-transform evidence values to z-space."""
    needed = [s.id for s in net.stations if s.is_evidence]
    have = set(evidence.station_ids)
    missing = [sid for sid in needed if sid not in have]
    if missing:
        raise EvidenceCoverageError(f"evidence missing stations: {missing}")
    if evidence.scenario_count != n_scenarios:
        raise EvidenceCoverageError(
            f"evidence has {evidence.scenario_count} scenarios, need {n_scenarios}")
    if not evidence.index.equals(horizon):
        raise EvidenceCoverageError("evidence horizon differs from requested horizon")
    if np.isnan(evidence.values).any():
        raise EvidenceCoverageError("evidence contains missing values")
    out = {}
    for sid in needed:
        marg = net.marginals.get(sid)
        if marg is None:
            raise ConfigError(f"no marginal for evidence station {sid!r}")
        vals = evidence.values[:, :, evidence.station_ids.index(sid)]
        out[sid] = ndtri(marg.cdf(vals.ravel())).reshape(vals.shape)
    return out


def sample_network(net: BayesNet, n_scenarios: int, horizon,
                   evidence: ScenarioSet | None = None,
                   seed: int = 0, threads: int = 1) -> ZScenarios:
    """Ancestral sampling with bootstrap innovations.

    Each non-evidence node i takes sum_j a_ij * z_j + eps, with eps drawn
    uniformly with replacement from the node's empirical residual vector.
    Evidence nodes are clamped to the forward transform of the supplied
    values.
    """
    horizon = pd.DatetimeIndex(horizon)
    if len(horizon) == 0:
        raise ValueError("horizon must contain at least one month")
    if n_scenarios < 1:
        raise ValueError("n_scenarios must be >= 1")

    ids = net.station_ids
    col = {sid: j for j, sid in enumerate(ids)}
    topo = net.dag.topo_order()
    ev_z = (_evidence_z(net, evidence, horizon, n_scenarios)
            if evidence is not None else {})

    n_t = len(horizon)
    z_all = np.empty((n_scenarios, n_t, len(ids)))

    def one_scenario(s: int) -> None:
        rng = scenario_rng(seed, _STREAM_BNET, s)
        z = z_all[s]
        for node in topo:
            j = col[node]
            if node in ev_z:
                z[:, j] = ev_z[node][s]
                continue
            reg = net.regressions[node]
            res = reg.residuals
            draw = res[rng.integers(0, len(res), size=n_t)]
            for p, a in reg.coefficients.items():
                draw = draw + a * z[:, col[p]]
            z[:, j] = draw

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(one_scenario, range(n_scenarios)))
    else:
        for s in range(n_scenarios):
            one_scenario(s)
    return ZScenarios(net.stations, horizon, z_all)


def to_original(z_samples: ZScenarios, net: BayesNet,
                evidence: ScenarioSet | None = None, seed: int = 0,
                threads: int = 1) -> ScenarioSet:
    """Inverse-transform z samples to original units.

    Evidence stations, when their scenarios were supplied, are copied
    into the output verbatim instead of being round-tripped through the
    marginal, so they match the input bit for bit.
    """
    ids = z_samples.station_ids
    missing = [sid for sid in ids if sid not in net.marginals]
    if missing:
        raise ConfigError(f"stations without a fitted marginal: {missing}")
    s, t, n = z_samples.z_values.shape
    flat = z_samples.z_values.reshape(s * t, n)
    x = np.empty_like(flat)
    clamped = {st.id for st in z_samples.stations if st.is_evidence}
    clamped &= set(evidence.station_ids) if evidence is not None else set()

    def invert(j: int) -> None:
        if ids[j] in clamped:
            return  # replaced verbatim below
        u = np.clip(ndtr(flat[:, j]), TAIL_EPS, 1.0 - TAIL_EPS)
        x[:, j] = net.marginals[ids[j]].quantile(u)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(invert, range(n)))
    else:
        for j in range(n):
            invert(j)

    x = x.reshape(s, t, n)
    for sid in sorted(clamped):
        x[:, :, ids.index(sid)] = evidence.values[
            :, :, evidence.station_ids.index(sid)]
    return ScenarioSet(z_samples.stations, z_samples.index, x, seed=seed)


# ---------------------------------------------------------------------------
# Periodic log-space AR(p) inflow generator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InflowStationModel:
    month_log_mean: np.ndarray  # indexed by calendar month - 1
    month_log_std: np.ndarray
    phi: np.ndarray
    sigma_e: float
    zero_floor: float


@dataclass(frozen=True)
class InflowModel:
    stations: tuple[StationMeta, ...]
    order: int
    per_station: dict[str, InflowStationModel]


def fit_inflow_ar(panel: HistoricalPanel, order: int = 1) -> InflowModel:
    """Fit per-calendar-month log statistics and AR(p) coefficients.

    Zero inflows are replaced by half the smallest positive observation
    before the log transform.  The AR fit runs on the month-standardized
    log residual sequence via least squares.
    """
    if panel.resolution != MONTHLY or panel.units == CAPACITY_FACTOR:
        raise DataError("inflow model expects a monthly volume panel")
    if order < 0:
        raise ValueError("AR order must be >= 0")

    per_station: dict[str, InflowStationModel] = {}
    for j, st in enumerate(panel.stations):
        col = panel.values[:, j]
        obs = ~np.isnan(col)
        x = col[obs]
        months = panel.index.month.to_numpy()[obs]
        positive = x[x > 0]
        if len(positive) == 0:
            raise DataError(f"station {st.id!r} has no positive inflows")
        floor = 0.5 * float(positive.min())
        y = np.log(np.where(x > 0, x, floor))

        mu = np.full(12, np.nan)
        sd = np.full(12, np.nan)
        for m in range(12):
            ym = y[months == m + 1]
            if len(ym) < _MIN_OBS_PER_MONTH:
                raise InsufficientDataError(
                    f"station {st.id!r} month {m + 1} has {len(ym)} "
                    f"observations (< {_MIN_OBS_PER_MONTH})")
            mu[m] = ym.mean()
            sd[m] = ym.std(ddof=1)
            if sd[m] <= 0:
                raise DataError(
                    f"station {st.id!r} month {m + 1} has zero log variance")

        w = (y - mu[months - 1]) / sd[months - 1]
        if order == 0:
            phi = np.empty(0)
            resid = w
        else:
            if len(w) <= order + 1:
                raise InsufficientDataError(
                    f"station {st.id!r}: too few months for AR({order})")
            design = np.column_stack([w[order - k - 1:len(w) - k - 1]
                                      for k in range(order)])
            target = w[order:]
            phi, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
            resid = target - design @ phi
            if order == 1 and abs(phi[0]) >= 1.0:
                raise NumericError(
                    f"station {st.id!r}: nonstationary AR(1), phi={phi[0]:.3f}")
        sigma_e = float(np.sqrt(np.mean(resid ** 2)))
        if sigma_e <= 0:
            raise DataError(f"station {st.id!r}: degenerate AR innovations")
        per_station[st.id] = InflowStationModel(mu, sd, phi, sigma_e, floor)

    return InflowModel(panel.stations, order, per_station)


def generate_inflows(model: InflowModel, n_scenarios: int, horizon,
                     seed: int = 0) -> ScenarioSet:
    """Simulate the log-space AR recursion and exponentiate.

    The standardized series starts from unit-variance noise and runs a
    burn-in before the horizon, so initial-condition effects are washed out.
    """
    horizon = pd.DatetimeIndex(horizon)
    if len(horizon) == 0:
        raise ValueError("horizon must contain at least one month")
    months = horizon.month.to_numpy()
    p = model.order
    n_t = len(horizon)

    values = np.empty((n_scenarios, n_t, len(model.stations)))
    for s in range(n_scenarios):
        rng = scenario_rng(seed, _STREAM_INFLOW, s)
        for j, st in enumerate(model.stations):
            sm = model.per_station[st.id]
            total = _AR_BURN_IN + n_t
            eps = sm.sigma_e * rng.standard_normal(total)
            if p == 0:
                w = eps
            else:
                w = np.empty(total + p)
                w[:p] = rng.standard_normal(p)
                for t in range(total):
                    w[p + t] = w[p + t - np.arange(1, p + 1)] @ sm.phi + eps[t]
                w = w[p:]
            w = w[-n_t:]
            values[s, :, j] = np.exp(
                sm.month_log_mean[months - 1] + sm.month_log_std[months - 1] * w)
    return ScenarioSet(model.stations, horizon, values, seed=seed)


# ---------------------------------------------------------------------------
# Scenario CSV interchange
# ---------------------------------------------------------------------------

def write_scenario_csv(sset: ScenarioSet, path) -> None:
    """Long CSV export: scenario,timestamp,station_id,value."""
    n_s, n_t, n_st = sset.values.shape
    stamps = np.array([t.isoformat() for t in sset.index])
    df = pd.DataFrame({
        "scenario": np.repeat(np.arange(n_s), n_t * n_st),
        "timestamp": np.tile(np.repeat(stamps, n_st), n_s),
        "station_id": np.tile(np.array(sset.station_ids), n_s * n_t),
        "value": sset.values.ravel(),
    })
    df.to_csv(path, index=False)


def read_scenario_csv(path, stations: list[StationMeta],
                      resolution: str = MONTHLY) -> ScenarioSet:
    """Load a scenario CSV over the subset of `stations` present in it."""
    df = pd.read_csv(path, dtype={"station_id": str})
    if list(df.columns) != ["scenario", "timestamp", "station_id", "value"]:
        raise DataError("scenario header must be scenario,timestamp,station_id,value")
    df["timestamp"] = pd.to_datetime(df["timestamp"], format="ISO8601")
    by_id = {s.id: s for s in stations}
    unknown = set(df["station_id"]) - set(by_id)
    if unknown:
        raise DataError(f"scenario stations missing from metadata: {sorted(unknown)}")
    metas = tuple(by_id[sid] for sid in sorted(df["station_id"].unique()))
    stamps = pd.DatetimeIndex(sorted(df["timestamp"].unique()))
    scenarios = np.sort(df["scenario"].unique())
    wide = df.pivot(index=["scenario", "timestamp"], columns="station_id",
                    values="value")
    wide = wide.reindex(pd.MultiIndex.from_product([scenarios, stamps]))
    values = wide[[m.id for m in metas]].to_numpy().reshape(
        len(scenarios), len(stamps), len(metas))
    if np.isnan(values).any():
        raise EvidenceCoverageError(
            "scenario file does not cover every (scenario, timestamp, station)")
    return ScenarioSet(metas, stamps, values, seed=-1, resolution=resolution)
