"""Monthly-to-hourly disaggregation via PCA profile matching.

For every calendar month, historical years are summarized as station-wise
monthly capacity-factor vectors and decomposed with PCA.  A generated
monthly scenario is projected with the same loadings, matched to the
nearest historical year in projected space, and each station's hourly
profile from that year is rescaled so its mean hits the generated monthly
value.  Profile selection is joint across stations, which keeps
within-month cross-station hourly coherence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .data import CAPACITY_FACTOR, HOURLY, HistoricalPanel, StationMeta, hours_in_month
from .errors import DataError, InsufficientDataError
from .simulate import ScenarioSet

# Below this historical monthly mean the profile is treated as all-zero and
# replaced by a flat profile at the generated value.
_FLAT_PROFILE_CF = 1e-6

_MIN_YEARS = 3


@dataclass(frozen=True)
class MonthDecomposition:
    years: np.ndarray                    # ascending historical years
    col_means: np.ndarray                # (stations,)
    loadings: np.ndarray                 # (stations, k), orthonormal columns
    projections: np.ndarray              # (years, k)
    monthly_cf: np.ndarray               # (years, stations)
    profiles: dict[int, np.ndarray] = field(repr=False)  # year -> (hours, stations)


@dataclass(frozen=True)
class DisaggModel:
    stations: tuple[StationMeta, ...]
    variance_threshold: float
    months: dict[int, MonthDecomposition]

    @property
    def station_ids(self) -> list[str]:
        return [s.id for s in self.stations]


def fit_disagg(hourly_panel: HistoricalPanel,
               variance_threshold: float = 0.95) -> DisaggModel:
    """Per-calendar-month PCA of year vectors of monthly mean capacity factors.

    A historical year enters a month's decomposition only when every station
    observed every hour of that (year, month).  Components are retained up
    to `variance_threshold` cumulative explained variance, at least one.
    """
    if hourly_panel.resolution != HOURLY or hourly_panel.units != CAPACITY_FACTOR:
        raise DataError("disaggregation expects an hourly capacity-factor panel")
    if not 0.0 < variance_threshold <= 1.0:
        raise ValueError("variance_threshold must be in (0, 1]")

    periods = hourly_panel.index.to_period("M")
    values = hourly_panel.values
    months: dict[int, MonthDecomposition] = {}
    for m in sorted(set(periods.month)):
        year_rows: list[np.ndarray] = []
        years: list[int] = []
        profiles: dict[int, np.ndarray] = {}
        for period in sorted(set(periods[periods.month == m])):
            rows = values[periods == period]
            if rows.shape[0] != hours_in_month(period):
                continue
            if np.isnan(rows).any():
                continue
            years.append(period.year)
            year_rows.append(rows.mean(axis=0))
            profiles[period.year] = rows
        if len(years) < _MIN_YEARS:
            raise InsufficientDataError(
                f"calendar month {m} has {len(years)} complete years "
                f"(< {_MIN_YEARS})")
        monthly_cf = np.vstack(year_rows)
        col_means = monthly_cf.mean(axis=0)
        centered = monthly_cf - col_means
        _, svals, vt = np.linalg.svd(centered, full_matrices=False)
        var = svals ** 2
        total = var.sum()
        if total <= 0:
            k = 1
        else:
            k = int(np.searchsorted(np.cumsum(var) / total,
                                    variance_threshold) + 1)
            k = min(max(k, 1), len(svals))
        loadings = vt[:k].T
        months[m] = MonthDecomposition(
            years=np.array(years),
            col_means=col_means,
            loadings=loadings,
            projections=centered @ loadings,
            monthly_cf=monthly_cf,
            profiles=profiles,
        )
    return DisaggModel(hourly_panel.stations, variance_threshold, months)


@dataclass(frozen=True)
class DisaggResult:
    hourly: ScenarioSet
    provenance: pd.DataFrame   # scenario, month, selected_year
    clipping: pd.DataFrame     # scenario, month, station_id, rel_mean_deviation


def _fit_length(profile: np.ndarray, n_hours: int) -> np.ndarray:
    """Adjust a (hours x stations) profile to the target month's hour count
    (leap-February mismatches): truncate or wrap-pad whole rows."""
    if len(profile) == n_hours:
        return profile
    if len(profile) > n_hours:
        return profile[:n_hours]
    reps = int(np.ceil(n_hours / len(profile)))
    return np.tile(profile, (reps, 1))[:n_hours]


def disaggregate(monthly_scenarios: ScenarioSet, model: DisaggModel) -> DisaggResult:
    """Map each (scenario, month) to its nearest historical profile and
    rescale to the generated monthly capacity factor, clipping to [0, 1].

    Clipping damage is reported, not redistributed: the clipping table
    carries the relative mean deviation per (scenario, month, station),
    exactly zero whenever no hour was clipped.
    """
    sid_idx = [monthly_scenarios.station_ids.index(sid)
               for sid in model.station_ids]
    horizon = monthly_scenarios.index
    missing = sorted({ts.month for ts in horizon} - set(model.months))
    if missing:
        raise DataError(f"no disaggregation model for calendar months {missing}")

    n_s = monthly_scenarios.scenario_count
    hour_blocks = []
    for ts in horizon:
        period = pd.Period(ts, freq="M")
        start = period.to_timestamp(how="start")
        hour_blocks.append(pd.date_range(
            start, periods=hours_in_month(period), freq="h"))
    hourly_index = hour_blocks[0].append(hour_blocks[1:]) if len(hour_blocks) > 1 \
        else hour_blocks[0]

    out = np.empty((n_s, len(hourly_index), len(model.stations)))
    prov_rows = []
    clip_rows = []
    offset = 0
    for t, ts in enumerate(horizon):
        dec = model.months[ts.month]
        n_h = len(hour_blocks[t])
        vecs = monthly_scenarios.values[:, t, :][:, sid_idx]
        proj = (vecs - dec.col_means) @ dec.loadings
        d2 = ((proj[:, None, :] - dec.projections[None, :, :]) ** 2).sum(axis=2)
        nearest = np.argmin(d2, axis=1)  # first minimum = earliest year
        month_label = f"{ts.year:04d}-{ts.month:02d}"
        for s in range(n_s):
            year = int(dec.years[nearest[s]])
            prov_rows.append((s, month_label, year))
            profile = _fit_length(dec.profiles[year], n_h)
            cf_hist = profile.mean(axis=0)
            for j, sid in enumerate(model.station_ids):
                cf_gen = vecs[s, j]
                if cf_hist[j] < _FLAT_PROFILE_CF:
                    out[s, offset:offset + n_h, j] = cf_gen
                    deviation = 0.0
                else:
                    raw = profile[:, j] * (cf_gen / cf_hist[j])
                    clipped = np.clip(raw, 0.0, 1.0)
                    out[s, offset:offset + n_h, j] = clipped
                    if np.array_equal(raw, clipped):
                        deviation = 0.0
                    else:
                        denom = cf_gen if cf_gen > 0 else 1.0
                        deviation = float(
                            (clipped.mean() - raw.mean()) / denom)
                clip_rows.append((s, month_label, sid, deviation))
        offset += n_h

    hourly = ScenarioSet(model.stations, hourly_index, out,
                         seed=monthly_scenarios.seed, resolution=HOURLY)
    provenance = pd.DataFrame(prov_rows,
                              columns=["scenario", "month", "selected_year"])
    clipping = pd.DataFrame(clip_rows,
                            columns=["scenario", "month", "station_id",
                                     "rel_mean_deviation"])
    return DisaggResult(hourly, provenance, clipping)
