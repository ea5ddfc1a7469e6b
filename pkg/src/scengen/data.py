"""Historical panel ingestion and hourly-to-monthly aggregation.

Input format is long CSV (`timestamp,station_id,value`) plus a station
metadata CSV (`station_id,kind,capacity_mw,is_evidence`).  Generation
stations arrive in MW and are normalized to capacity factors at load time;
hydro stations carry raw inflow volumes.  Panels are immutable after
construction and safe for shared concurrent reads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import (
    AggregationError,
    DataError,
    DuplicateError,
    ParseError,
    RangeError,
)

STATION_KINDS = ("hydro", "wind", "csp", "dgsp", "small_hydro", "other")

HOURLY = "hourly"
MONTHLY = "monthly"

CAPACITY_FACTOR = "capacity_factor"
VOLUME = "volume"
# Internal tag for merged hydro+generation panels; per-station semantics
# follow the station kind.
MIXED = "mixed"


@dataclass(frozen=True)
class StationMeta:
    id: str
    kind: str
    capacity: float
    is_evidence: bool


@dataclass(frozen=True)
class HistoricalPanel:
    """Aligned multi-station time series.

    `values` is (time x station) with NaN outside each station's coverage
    window; inside the window every timestamp is observed.
    """

    stations: tuple[StationMeta, ...]
    index: pd.DatetimeIndex
    values: np.ndarray
    resolution: str
    units: str

    @property
    def station_ids(self) -> list[str]:
        return [s.id for s in self.stations]

    def column(self, station_id: str) -> np.ndarray:
        return self.values[:, self.station_ids.index(station_id)]

    def observed(self, station_id: str) -> np.ndarray:
        """Non-NaN values of one station, in time order."""
        col = self.column(station_id)
        return col[~np.isnan(col)]


def load_station_meta(meta_path) -> list[StationMeta]:
    """Parse the station metadata CSV."""
    df = pd.read_csv(meta_path, dtype=str)
    expected = ["station_id", "kind", "capacity_mw", "is_evidence"]
    if list(df.columns) != expected:
        raise ParseError(f"metadata header must be {','.join(expected)}")
    stations: list[StationMeta] = []
    seen: set[str] = set()
    for pos, row in enumerate(df.itertuples(index=False), start=2):
        sid = str(row.station_id)
        if sid in seen:
            raise DuplicateError(f"duplicate station id {sid!r} (line {pos})")
        seen.add(sid)
        kind = str(row.kind)
        if kind not in STATION_KINDS:
            raise ParseError(f"unknown station kind {kind!r} (line {pos})")
        try:
            capacity = float(row.capacity_mw)
        except (TypeError, ValueError):
            raise ParseError(f"bad capacity_mw {row.capacity_mw!r} (line {pos})")
        flag = str(row.is_evidence).strip().lower()
        if flag not in ("true", "false", "0", "1"):
            raise ParseError(f"bad is_evidence {row.is_evidence!r} (line {pos})")
        is_evidence = flag in ("true", "1")
        if capacity < 0:
            raise RangeError(f"negative capacity for station {sid!r}")
        if kind != "hydro" and capacity <= 0:
            raise RangeError(
                f"generation station {sid!r} needs capacity > 0 to normalize MW")
        stations.append(StationMeta(sid, kind, capacity, is_evidence))
    return stations


def _infer_resolution(index: pd.DatetimeIndex) -> str:
    if len(index) < 2:
        raise DataError("panel needs at least two timestamps")
    deltas = np.diff(index.asi8)
    if np.all(deltas == 3_600_000_000_000):
        return HOURLY
    is_month_start = (index.day == 1) & (index.hour == 0) & (index.minute == 0)
    periods = index.to_period("M")
    if is_month_start.all() and np.all(np.diff(periods.asi8) == 1):
        return MONTHLY
    raise DataError("index is neither uniform hourly nor consecutive monthly")


def _check_contiguous_coverage(values: np.ndarray, station_ids: list[str]) -> None:
    for j, sid in enumerate(station_ids):
        obs = ~np.isnan(values[:, j])
        if not obs.any():
            raise DataError(f"station {sid!r} has no observations")
        first, last = np.flatnonzero(obs)[[0, -1]]
        if not obs[first:last + 1].all():
            raise DataError(
                f"station {sid!r} has missing timestamps inside its coverage window")


def build_panel(stations, index, values, resolution, units) -> HistoricalPanel:
    """Assemble and validate a panel from in-memory pieces."""
    stations = tuple(stations)
    index = pd.DatetimeIndex(index)
    values = np.array(values, dtype=float)
    if values.shape != (len(index), len(stations)):
        raise DataError(
            f"values shape {values.shape} does not match "
            f"{len(index)} timestamps x {len(stations)} stations")
    if len(index) >= 2 and _infer_resolution(index) != resolution:
        raise DataError(f"index step does not match declared {resolution} resolution")
    ids = [s.id for s in stations]
    if len(set(ids)) != len(ids):
        raise DuplicateError("station ids must be unique within a panel")
    _check_contiguous_coverage(values, ids)
    finite = values[~np.isnan(values)]
    if units == CAPACITY_FACTOR:
        if np.any((finite < 0.0) | (finite > 1.0)):
            raise RangeError("capacity factors must lie in [0, 1]")
    elif units == VOLUME:
        if np.any(finite < 0.0):
            raise RangeError("volumes must be nonnegative")
    elif units == MIXED:
        for j, st in enumerate(stations):
            col = values[:, j]
            col = col[~np.isnan(col)]
            if st.kind == "hydro":
                if np.any(col < 0.0):
                    raise RangeError(f"negative volume for station {st.id!r}")
            elif np.any((col < 0.0) | (col > 1.0)):
                raise RangeError(
                    f"capacity factor outside [0, 1] for station {st.id!r}")
    else:
        raise DataError(f"unknown units {units!r}")
    values.setflags(write=False)
    return HistoricalPanel(stations, index, values, resolution, units)


def load_panel(path, meta_path) -> HistoricalPanel:
    """Load and validate a long-format data CSV against station metadata.

    Generation values are divided by station capacity; the resulting
    capacity factors must lie in [0, 1].  A file mixing hydro (volume)
    stations with generation stations is rejected: the two live in
    separate files because their units and resolutions differ.
    """
    meta = {s.id: s for s in load_station_meta(meta_path)}

    df = pd.read_csv(path, dtype={"timestamp": str, "station_id": str})
    if list(df.columns) != ["timestamp", "station_id", "value"]:
        raise ParseError("data header must be timestamp,station_id,value")

    ts = pd.to_datetime(df["timestamp"], errors="coerce", format="ISO8601")
    bad = np.flatnonzero(ts.isna().to_numpy())
    if len(bad):
        raise ParseError(f"unparseable timestamp at line {bad[0] + 2}")
    vals = pd.to_numeric(df["value"], errors="coerce")
    bad = np.flatnonzero(vals.isna().to_numpy())
    if len(bad):
        raise ParseError(f"unparseable value at line {bad[0] + 2}")

    unknown = set(df["station_id"]) - set(meta)
    if unknown:
        raise DataError(f"stations missing from metadata: {sorted(unknown)}")

    dup = df.duplicated(subset=["timestamp", "station_id"])
    if dup.any():
        raise DuplicateError(
            f"duplicate (timestamp, station) at line {int(np.flatnonzero(dup)[0]) + 2}")

    station_ids = sorted(set(df["station_id"]))
    stations = tuple(meta[sid] for sid in station_ids)
    kinds = {s.kind == "hydro" for s in stations}
    if kinds == {True, False}:
        raise DataError("file mixes hydro (volume) and generation stations")
    units = VOLUME if kinds == {True} else CAPACITY_FACTOR

    wide = pd.DataFrame({"ts": ts, "sid": df["station_id"], "v": vals}).pivot(
        index="ts", columns="sid", values="v")
    wide = wide.sort_index()[station_ids]
    values = wide.to_numpy(dtype=float)
    index = pd.DatetimeIndex(wide.index)
    resolution = _infer_resolution(index)

    if units == CAPACITY_FACTOR:
        capacities = np.array([meta[sid].capacity for sid in station_ids])
        values = values / capacities[None, :]
        over = np.argwhere(~np.isnan(values) & ((values < 0) | (values > 1)))
        if len(over):
            i, j = over[0]
            raise RangeError(
                f"capacity factor {values[i, j]:.6g} outside [0, 1] for station "
                f"{station_ids[j]!r} at {index[i].isoformat()}")
    else:
        neg = np.argwhere(~np.isnan(values) & (values < 0))
        if len(neg):
            i, j = neg[0]
            raise RangeError(
                f"negative volume for station {station_ids[j]!r} "
                f"at {index[i].isoformat()}")

    return build_panel(stations, index, values, resolution, units)


def write_panel(panel: HistoricalPanel, path) -> None:
    """Write a panel back to the long CSV format, inverting load-time
    normalization (capacity factors go out as MW)."""
    frames = []
    for j, st in enumerate(panel.stations):
        col = panel.values[:, j]
        obs = ~np.isnan(col)
        out = col[obs]
        if panel.units == CAPACITY_FACTOR:
            out = out * st.capacity
        frames.append(pd.DataFrame({
            "timestamp": [t.isoformat() for t in panel.index[obs]],
            "station_id": st.id,
            "value": out,
        }))
    long = pd.concat(frames, ignore_index=True)
    long = long.sort_values(["timestamp", "station_id"], kind="stable")
    long.to_csv(path, index=False)


def hours_in_month(period: pd.Period) -> int:
    start = period.to_timestamp(how="start")
    end = (period + 1).to_timestamp(how="start")
    return int((end - start) / pd.Timedelta(hours=1))


def aggregate_to_monthly(panel: HistoricalPanel) -> HistoricalPanel:
    """Collapse an hourly panel to monthly means per station.

    A month enters a station's monthly series only when every hour of the
    calendar month is observed for that station; partially covered months
    are dropped (NaN) for that station.
    """
    if panel.resolution != HOURLY:
        raise DataError("aggregate_to_monthly expects an hourly panel")
    periods = panel.index.to_period("M")
    uniq = pd.PeriodIndex(sorted(set(periods)))
    if len(uniq) == 0:
        raise AggregationError("panel covers no months")

    n_st = len(panel.stations)
    out = np.full((len(uniq), n_st), np.nan)
    codes = uniq.get_indexer(periods)
    for m, period in enumerate(uniq):
        rows = panel.values[codes == m]
        if rows.shape[0] == 0:
            raise AggregationError(f"month {period} has zero hours")
        complete = (~np.isnan(rows)).all(axis=0) & (
            rows.shape[0] == hours_in_month(period))
        out[m, complete] = rows[:, complete].mean(axis=0)

    any_data = ~np.isnan(out).all(axis=1)
    if not any_data.any():
        raise AggregationError("no station has a single complete month")
    first, last = np.flatnonzero(any_data)[[0, -1]]
    out = out[first:last + 1]
    uniq = uniq[first:last + 1]
    index = pd.DatetimeIndex([p.to_timestamp(how="start") for p in uniq])
    return build_panel(panel.stations, index, out, MONTHLY, panel.units)
