"""Nonparametric Gaussian-copula Bayesian-network scenario generation."""

__version__ = "0.1.0"

from .bnet import (  # noqa: F401
    BayesNet,
    Dag,
    NodeRegression,
    fit_regression,
    full_count,
    learn_structure,
    parameter_count,
    score_dag,
)
from .data import (  # noqa: F401
    HistoricalPanel,
    StationMeta,
    aggregate_to_monthly,
    build_panel,
    load_panel,
    load_station_meta,
    write_panel,
)
from .disagg import DisaggModel, disaggregate, fit_disagg  # noqa: F401
from .marginal import MarginalModel, fit_kde  # noqa: F401
from .pipeline import (  # noqa: F401
    FittedModel,
    ModelOptions,
    fit_marginals,
    fit_model,
    merge_monthly_panels,
    month_range,
    simulate_model,
)
from .simulate import (  # noqa: F401
    InflowModel,
    ScenarioSet,
    fit_inflow_ar,
    generate_inflows,
    sample_network,
    to_original,
)
from .transform import NormalPanel, forward, inverse  # noqa: F401
from .validate import (  # noqa: F401
    ValidationReport,
    build_report,
    correlation_matrix,
    fisher_z_pair,
    write_report,
)
