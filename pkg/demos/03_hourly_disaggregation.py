"""Disaggregate monthly scenarios to hourly profiles by PCA matching.

Run:  python demos/03_hourly_disaggregation.py
"""

import numpy as np
import pandas as pd

from scengen.disagg import disaggregate, fit_disagg
from scengen.fixtures import build_fixture
from scengen.simulate import ScenarioSet

# ----------------------------------------------------------------------------
# Hourly history for the VRE stations (10 years keeps the demo quick).
# ----------------------------------------------------------------------------
fx = build_fixture(n_vre=4, n_hydro=1, years=10, seed=8, hourly=True)
model = fit_disagg(fx.vre_hourly, variance_threshold=0.95)
print("per-month PCA decompositions:")
for m, dec in sorted(model.months.items()):
    print(f"  month {m:2d}: {len(dec.years)} years, "
          f"{dec.loadings.shape[1]} component(s)")

# ----------------------------------------------------------------------------
# A couple of synthetic monthly scenarios, scaled off historical vectors so
# nothing clips.
# ----------------------------------------------------------------------------
months = pd.DatetimeIndex([pd.Timestamp("2031-06-01"), pd.Timestamp("2031-07-01")])
rng = np.random.default_rng(0)
vals = np.stack([
    model.months[ts.month].monthly_cf[rng.integers(0, 5)] * 0.8
    for ts in months
])[None, :, :]
sset = ScenarioSet(model.stations, months, vals, seed=0)

result = disaggregate(sset, model)
print(f"\nhourly cube: {result.hourly.values.shape} (scenario x hour x station)")
print("profile provenance:")
print(result.provenance.to_string(index=False))

# Mean preservation: each month's hourly mean equals the monthly value.
offset = 0
for t, ts in enumerate(months):
    n_h = 24 * pd.Period(ts, freq="M").days_in_month
    hourly_mean = result.hourly.values[0, offset:offset + n_h, :].mean(axis=0)
    rel = np.abs(hourly_mean - vals[0, t]) / vals[0, t]
    print(f"{ts:%Y-%m}: max relative mean deviation {rel.max():.2e}")
    offset += n_h

clipped = result.clipping[result.clipping["rel_mean_deviation"] != 0]
print(f"hours clipped in {len(clipped)} (scenario, month, station) cells")
