"""Ragged-history behavior: stations with different start dates."""

import numpy as np
import pandas as pd
import pytest

from scengen.bnet import fit_regression, full_count, learn_structure, \
    parameter_count
from scengen.data import MONTHLY, StationMeta, build_panel, load_panel, \
    write_panel
from scengen.errors import DataError
from scengen.fixtures import build_fixture
from scengen.transform import NormalPanel


def _ragged_zpanel(rng, n_obs=400):
    z = rng.standard_normal((n_obs, 3))
    z[:, 1] += 0.8 * z[:, 0]
    z[:150, 1] = np.nan  # station n1 starts 150 rows late
    z[:80, 2] = np.nan
    stations = tuple(StationMeta(f"n{j}", "wind", 100.0, False)
                     for j in range(3))
    index = pd.date_range("1990-01-01", periods=n_obs, freq="h")
    return NormalPanel(stations, index, z, MONTHLY, "capacity_factor"), z


def test_structure_learning_uses_complete_cases(rng):
    panel, z = _ragged_zpanel(rng)
    dag = learn_structure(panel, max_parents=2, restarts=2, seed=1)
    assert frozenset({"n0", "n1"}) in {frozenset(e) for e in dag.edges()}


def test_regression_residual_counts_match_complete_cases(rng):
    panel, z = _ragged_zpanel(rng)
    dag = learn_structure(panel, max_parents=2, restarts=2, seed=1)
    net = fit_regression(dag, panel)
    for node, reg in net.regressions.items():
        cols = [dag.nodes.index(node)] + [dag.nodes.index(p)
                                          for p in dag.parents[node]]
        complete = int((~np.isnan(z[:, cols]).any(axis=1)).sum())
        assert len(reg.residuals) == complete
        assert not np.isnan(reg.residuals).any()


def test_interior_gap_rejected():
    stations = (StationMeta("a", "wind", 10.0, False),)
    index = pd.date_range("2000-01-01", periods=10, freq="MS")
    values = np.ones((10, 1)) * 0.4
    values[4, 0] = np.nan  # hole inside the coverage window
    with pytest.raises(DataError, match="coverage"):
        build_panel(stations, index, values, MONTHLY, "capacity_factor")


def test_sparsity_property(rng):
    # parameter_count < full_count whenever max_parents < (n - 1) / 2.
    for n, max_parents in ((6, 2), (9, 3), (12, 5)):
        z = rng.standard_normal((300, n))
        stations = tuple(StationMeta(f"s{j}", "wind", 100.0, False)
                         for j in range(n))
        panel = NormalPanel(stations,
                            pd.date_range("1990-01-01", periods=300, freq="h"),
                            z, MONTHLY, "capacity_factor")
        net = fit_regression(
            learn_structure(panel, max_parents, restarts=1, seed=0), panel)
        assert max_parents < (n - 1) / 2
        assert parameter_count(net) < full_count(n)


def test_file_level_round_trip(tmp_path):
    # write_panel(load_panel(f)) reproduces f's numeric content to 1e-9.
    fx_dir = tmp_path / "fx"
    from scengen.fixtures import write_fixture
    paths = write_fixture(fx_dir, n_vre=3, n_hydro=1, years=5, seed=2,
                          hourly=False)
    panel = load_panel(paths["vre"], paths["meta"])
    out = tmp_path / "rewritten.csv"
    write_panel(panel, out)

    a = pd.read_csv(paths["vre"]).set_index(["timestamp", "station_id"])
    b = pd.read_csv(out).set_index(["timestamp", "station_id"])
    joined = a.join(b, lsuffix="_orig", rsuffix="_back")
    assert len(joined) == len(a) == len(b)
    rel = np.abs(joined["value_back"] - joined["value_orig"]) / np.abs(
        joined["value_orig"])
    assert rel.max() <= 1e-9
