import numpy as np
import pandas as pd
import pytest

from scengen.data import CAPACITY_FACTOR, HOURLY, StationMeta, build_panel
from scengen.disagg import disaggregate, fit_disagg
from scengen.errors import InsufficientDataError
from scengen.simulate import ScenarioSet


def _hourly_panel(values, stations, start="2015-01-01"):
    index = pd.date_range(start, periods=len(values), freq="h")
    return build_panel(stations, index, values, HOURLY, CAPACITY_FACTOR)


def _stations(n):
    return tuple(StationMeta(f"v{j}", "wind", 100.0, False) for j in range(n))


def _monthly_sset(stations, months, values, seed=0):
    return ScenarioSet(stations, pd.DatetimeIndex(months), values, seed=seed)


@pytest.fixture(scope="module")
def disagg_model(small_fixture):
    return fit_disagg(small_fixture.vre_hourly, 0.95)


def test_loadings_are_orthonormal(disagg_model):
    for dec in disagg_model.months.values():
        w = dec.loadings
        gram = w.T @ w
        assert np.allclose(gram, np.eye(w.shape[1]), atol=1e-9)
        assert w.shape[1] >= 1


def test_retained_variance_against_eigh_oracle(small_fixture, disagg_model):
    # Independent oracle: eigendecomposition of the covariance matrix.
    for m, dec in disagg_model.months.items():
        centered = dec.monthly_cf - dec.monthly_cf.mean(axis=0)
        cov = centered.T @ centered
        evals = np.sort(np.linalg.eigvalsh(cov))[::-1]
        k = dec.loadings.shape[1]
        total = evals.sum()
        if total <= 0:
            continue
        retained = evals[:k].sum() / total
        assert retained >= 0.95 - 1e-9, (m, retained)
        if k > 1:
            up_to_prev = evals[:k - 1].sum() / total
            assert up_to_prev < 0.95


def test_identical_years_degenerate_pca():
    stations = _stations(3)
    hours = pd.date_range("2015-01-01", periods=24 * (365 * 3 + 1), freq="h")
    base = 0.4 + 0.2 * np.sin(2 * np.pi * (np.arange(len(hours)) % 24) / 24.0)
    values = np.tile(base[:, None], (1, 3))
    panel = build_panel(stations, hours, values, HOURLY, CAPACITY_FACTOR)
    model = fit_disagg(panel)
    for dec in model.months.values():
        assert dec.loadings.shape[1] == 1
        assert np.allclose(dec.projections, 0.0, atol=1e-12)


def test_rank_one_years_reconstruct_exactly():
    # Two stations, year vectors on a line in station space.
    stations = _stations(2)
    hours = pd.date_range("2015-01-01", periods=24 * (365 * 4 + 1), freq="h")
    t = np.arange(len(hours))
    year = hours.year - 2015
    levels = 0.3 + 0.05 * year.to_numpy()
    base = 1.0 + 0.1 * np.sin(2 * np.pi * (t % 24) / 24.0)
    values = np.column_stack([levels * base, 2.0 * levels * base / 3.0])
    panel = build_panel(stations, hours, values, HOURLY, CAPACITY_FACTOR)
    model = fit_disagg(panel)
    for dec in model.months.values():
        assert dec.loadings.shape[1] == 1
        centered = dec.monthly_cf - dec.monthly_cf.mean(axis=0)
        recon = dec.projections @ dec.loadings.T
        assert np.max(np.abs(recon - centered)) <= 1e-9


def test_too_few_years_rejected():
    stations = _stations(2)
    hours = pd.date_range("2015-01-01", periods=24 * 400, freq="h")
    values = np.full((len(hours), 2), 0.5)
    values += 0.01 * np.sin(np.arange(len(hours)))[:, None]
    np.clip(values, 0.0, 1.0, out=values)
    panel = build_panel(stations, hours, values, HOURLY, CAPACITY_FACTOR)
    with pytest.raises(InsufficientDataError):
        fit_disagg(panel)


def test_exact_match_returns_historical_hours(small_fixture, disagg_model):
    # A scenario equal to a historical year vector selects that year with
    # distance zero and reproduces its hourly block.
    dec = disagg_model.months[5]
    year = int(dec.years[1])
    vec = dec.monthly_cf[1]
    months = [pd.Timestamp("2031-05-01")]
    sset = _monthly_sset(disagg_model.stations, months, vec[None, None, :])
    result = disaggregate(sset, disagg_model)
    assert result.provenance.iloc[0]["selected_year"] == year
    assert np.allclose(result.hourly.values[0], dec.profiles[year], atol=1e-12)
    assert (result.clipping["rel_mean_deviation"] == 0.0).all()


def test_halved_scenario_preserves_mean(disagg_model):
    dec = disagg_model.months[7]
    vec = 0.5 * dec.monthly_cf[0]
    months = [pd.Timestamp("2031-07-01")]
    sset = _monthly_sset(disagg_model.stations, months, vec[None, None, :])
    result = disaggregate(sset, disagg_model)
    means = result.hourly.values[0].mean(axis=0)
    assert np.max(np.abs(means - vec) / np.maximum(vec, 1e-12)) <= 1e-9


def test_nearest_neighbor_matches_brute_force(small_fixture, disagg_model, rng):
    months = pd.DatetimeIndex([pd.Timestamp(f"2031-{m:02d}-01")
                               for m in range(1, 13)])
    n_st = len(disagg_model.stations)
    values = rng.uniform(0.15, 0.55, size=(5, 12, n_st))
    sset = _monthly_sset(disagg_model.stations, months, values)
    result = disaggregate(sset, disagg_model)
    prov = result.provenance.set_index(["scenario", "month"])
    for s in range(5):
        for t, ts in enumerate(months):
            dec = disagg_model.months[ts.month]
            proj = (values[s, t] - dec.col_means) @ dec.loadings
            d2 = ((dec.projections - proj) ** 2).sum(axis=1)
            expected_year = int(dec.years[np.argmin(d2)])
            got = prov.loc[(s, f"{ts.year:04d}-{ts.month:02d}"),
                           "selected_year"]
            assert int(got) == expected_year


def test_clipping_is_reported(disagg_model):
    dec = disagg_model.months[1]
    vec = np.minimum(dec.monthly_cf[0] * 2.5, 0.93)
    months = [pd.Timestamp("2031-01-01")]
    sset = _monthly_sset(disagg_model.stations, months, vec[None, None, :])
    result = disaggregate(sset, disagg_model)
    assert np.all(result.hourly.values <= 1.0)
    clipped = result.clipping["rel_mean_deviation"] != 0.0
    assert clipped.any()
    means = result.hourly.values[0].mean(axis=0)
    for j, sid in enumerate(disagg_model.station_ids):
        row = result.clipping[result.clipping["station_id"] == sid].iloc[0]
        expected = means[j] - vec[j]
        assert row["rel_mean_deviation"] == pytest.approx(
            expected / vec[j], abs=1e-12)


def test_hourly_output_calendar(disagg_model):
    months = [pd.Timestamp("2032-02-01"), pd.Timestamp("2032-03-01")]
    n_st = len(disagg_model.stations)
    vals = np.full((2, 2, n_st), 0.3)
    result = disaggregate(_monthly_sset(disagg_model.stations, months, vals),
                          disagg_model)
    # 2032 is a leap year: 696 February hours + 744 March hours.
    assert result.hourly.values.shape == (2, 696 + 744, n_st)
    assert result.hourly.index[0] == pd.Timestamp("2032-02-01")
    assert result.hourly.index[-1] == pd.Timestamp("2032-03-31 23:00")
