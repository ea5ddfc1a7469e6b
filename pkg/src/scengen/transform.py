"""Original <-> standard-normal transforms (the Nataf / PIT pipeline).

Forward maps each observation through its own marginal CDF and the standard
normal quantile, z = Phi^-1(F(x)); inverse undoes it, x = F^-1(Phi(z)).
Assuming joint normality of the transformed variables amounts to a Gaussian
copula over the originals.  Both directions are pure and elementwise, so
they preserve within-station rank ordering (up to clamped tails).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .data import HistoricalPanel, StationMeta, build_panel
from .errors import ConfigError
from .marginal import TAIL_EPS, MarginalModel

from scipy.special import ndtr, ndtri


@dataclass(frozen=True)
class NormalPanel:
    """Standard-normal-transformed panel sharing the source calendar index."""

    stations: tuple[StationMeta, ...]
    index: pd.DatetimeIndex
    z_values: np.ndarray
    source_resolution: str
    source_units: str

    @property
    def station_ids(self) -> list[str]:
        return [s.id for s in self.stations]


def _require_marginals(stations, marginals) -> None:
    missing = [s.id for s in stations if s.id not in marginals]
    if missing:
        raise ConfigError(f"stations without a fitted marginal: {missing}")


def forward(panel: HistoricalPanel,
            marginals: dict[str, MarginalModel]) -> NormalPanel:
    """Transform a panel to standard normal, column by column.

    CDF values are clamped to [1e-9, 1 - 1e-9] by the marginal, so z stays
    within roughly +-6.  NaN entries (outside a station's coverage) stay NaN.
    """
    _require_marginals(panel.stations, marginals)
    z = np.full_like(panel.values, np.nan)
    for j, st in enumerate(panel.stations):
        col = panel.values[:, j]
        obs = ~np.isnan(col)
        z[obs, j] = ndtri(marginals[st.id].cdf(col[obs]))
    return NormalPanel(panel.stations, panel.index, z,
                       panel.resolution, panel.units)


def inverse(z_panel: NormalPanel,
            marginals: dict[str, MarginalModel]) -> HistoricalPanel:
    """Map standard-normal values back to original units via the marginal
    quantile functions."""
    _require_marginals(z_panel.stations, marginals)
    x = np.full_like(z_panel.z_values, np.nan)
    for j, st in enumerate(z_panel.stations):
        col = z_panel.z_values[:, j]
        obs = ~np.isnan(col)
        u = np.clip(ndtr(col[obs]), TAIL_EPS, 1.0 - TAIL_EPS)
        x[obs, j] = marginals[st.id].quantile(u)
    return build_panel(z_panel.stations, z_panel.index, x,
                       z_panel.source_resolution, z_panel.source_units)
