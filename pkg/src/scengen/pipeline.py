"""End-to-end fitting and simulation flows shared by the CLI and demos.

Fitting: aggregate hourly VRE history to monthly, fit per-station KDE
marginals, transform to normal, learn the DAG, fit node regressions, fit
the inflow AR model and the disaggregation decomposition.  Simulation:
generate (or ingest) inflow evidence, sample the network, map back to
original units and disaggregate to hourly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .bnet import BayesNet, fit_regression, learn_structure
from .data import (
    CAPACITY_FACTOR,
    HOURLY,
    MIXED,
    MONTHLY,
    HistoricalPanel,
    aggregate_to_monthly,
    build_panel,
)
from .disagg import DisaggModel, DisaggResult, disaggregate, fit_disagg
from .errors import DataError
from .marginal import GRID_PAD_BANDWIDTHS, MarginalModel, fit_kde, silverman_bandwidth
from .simulate import (
    InflowModel,
    ScenarioSet,
    ZScenarios,
    fit_inflow_ar,
    generate_inflows,
    sample_network,
    to_original,
)
from .transform import forward


@dataclass(frozen=True)
class ModelOptions:
    max_parents: int = 6
    restarts: int = 5
    kde_grid: int = 2048
    pca_variance: float = 0.95
    ar_order: int = 1
    seed: int = 0


@dataclass(frozen=True)
class FittedModel:
    net: BayesNet
    inflow_model: InflowModel | None
    disagg_model: DisaggModel | None
    options: ModelOptions

    @property
    def stations(self):
        return self.net.stations


def merge_monthly_panels(*panels: HistoricalPanel) -> HistoricalPanel:
    """Column-stack monthly panels over the union of their calendars.

    The result carries mixed units (volumes next to capacity factors);
    downstream code distinguishes columns by station kind.
    """
    panels = [p for p in panels if p is not None]
    if not panels:
        raise ValueError("nothing to merge")
    if any(p.resolution != MONTHLY for p in panels):
        raise DataError("only monthly panels can be merged")
    index = panels[0].index
    for p in panels[1:]:
        index = index.union(p.index)
    stations = sorted((s for p in panels for s in p.stations), key=lambda s: s.id)
    values = np.full((len(index), len(stations)), np.nan)
    ids = [s.id for s in stations]
    for p in panels:
        rows = index.get_indexer(p.index)
        for j, sid in enumerate(p.station_ids):
            values[rows, ids.index(sid)] = p.values[:, j]
    units = MIXED if len({p.units for p in panels}) > 1 else panels[0].units
    return build_panel(tuple(stations), index, values, MONTHLY, units)


def fit_marginals(panel: HistoricalPanel, grid_size: int = 2048
                  ) -> dict[str, MarginalModel]:
    """One KDE per station.

    Capacity factors get the closed [0, 1] support with boundary
    reflection; volumes get a support floored at zero and padded above the
    sample maximum so the upper tail stays effectively unbounded.
    """
    out: dict[str, MarginalModel] = {}
    for j, st in enumerate(panel.stations):
        x = panel.observed(st.id)
        if panel.units == CAPACITY_FACTOR or (
                panel.units == MIXED and st.kind != "hydro"):
            support = (0.0, 1.0)
        else:
            h = silverman_bandwidth(x)
            support = (0.0, float(x.max() + GRID_PAD_BANDWIDTHS * h))
        out[st.id] = fit_kde(x, support=support, grid_size=grid_size)
    return out


def fit_model(vre_panel: HistoricalPanel,
              inflow_panel: HistoricalPanel | None,
              options: ModelOptions = ModelOptions()) -> FittedModel:
    """Run the whole estimation sequence on historical panels."""
    if vre_panel.resolution == HOURLY:
        disagg_model = fit_disagg(vre_panel, options.pca_variance)
        vre_monthly = aggregate_to_monthly(vre_panel)
    else:
        disagg_model = None
        vre_monthly = vre_panel

    monthly = (merge_monthly_panels(vre_monthly, inflow_panel)
               if inflow_panel is not None else vre_monthly)
    marginals = fit_marginals(monthly, options.kde_grid)
    z_panel = forward(monthly, marginals)
    dag = learn_structure(z_panel, options.max_parents,
                          restarts=options.restarts, seed=options.seed)
    net = fit_regression(dag, z_panel, marginals)

    inflow_model = (fit_inflow_ar(inflow_panel, options.ar_order)
                    if inflow_panel is not None else None)
    return FittedModel(net, inflow_model, disagg_model, options)


def month_range(start: str, count: int) -> pd.DatetimeIndex:
    """Consecutive month starts, e.g. month_range('2030-01', 12)."""
    if count < 1:
        raise ValueError("horizon must contain at least one month")
    return pd.date_range(pd.Timestamp(start), periods=count, freq="MS")


@dataclass(frozen=True)
class SimulationResult:
    monthly: ScenarioSet
    z_samples: ZScenarios
    evidence: ScenarioSet | None
    disagg: DisaggResult | None


def simulate_model(model: FittedModel, n_scenarios: int, horizon,
                   seed: int = 0, evidence: ScenarioSet | None = None,
                   threads: int = 1,
                   disaggregate_hourly: bool = True) -> SimulationResult:
    """Evidence generation, network sampling, inverse transform and
    (when a disaggregation model is present) hourly disaggregation."""
    horizon = pd.DatetimeIndex(horizon)
    if evidence is None and model.inflow_model is not None:
        evidence = generate_inflows(model.inflow_model, n_scenarios, horizon,
                                    seed=seed)
    zs = sample_network(model.net, n_scenarios, horizon, evidence=evidence,
                        seed=seed, threads=threads)
    monthly = to_original(zs, model.net, evidence=evidence, seed=seed,
                          threads=threads)
    result = None
    if disaggregate_hourly and model.disagg_model is not None:
        result = disaggregate(monthly, model.disagg_model)
    return SimulationResult(monthly, zs, evidence, result)
