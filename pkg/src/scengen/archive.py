"""Versioned single-file persistence of fitted models.

The archive is a JSON container with base-ten decimal numerics holding the
DAG, regression coefficients and residual vectors, KDE marginal parameters
and the inflow model.  Hourly disaggregation profiles are not copied into
the archive; the archive keeps a checksummed reference to the hourly data
file and the decomposition is refit (deterministically) on load.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict

import numpy as np

from . import marginal
from .bnet import BayesNet, Dag, NodeRegression
from .data import HistoricalPanel, StationMeta, load_panel
from .disagg import fit_disagg
from .errors import ConfigError, DataError
from .pipeline import FittedModel, ModelOptions
from .simulate import InflowModel, InflowStationModel

SCHEMA_VERSION = 1


def panel_digest(panel: HistoricalPanel) -> str:
    """Stable content hash of a panel (ids, calendar, values)."""
    h = hashlib.sha256()
    h.update(",".join(panel.station_ids).encode())
    h.update(panel.index.asi8.tobytes())
    h.update(panel.values.tobytes())
    return h.hexdigest()


def _marginal_to_dict(m) -> dict:
    return {
        "samples": m.samples.tolist(),
        "bandwidth": m.bandwidth,
        "support": [m.support[0], m.support[1]],
        "bounded": m.bounded,
        "grid_size": int(len(m.grid_x)),
    }


def save_model(model: FittedModel, path,
               hourly_ref: dict | None = None) -> None:
    """Write the archive.  `hourly_ref` carries {data, meta, sha256} for the
    hourly panel backing the disaggregation model, when one was fitted."""
    net = model.net
    doc = {
        "schema_version": SCHEMA_VERSION,
        "options": asdict(model.options),
        "stations": [
            {"id": s.id, "kind": s.kind, "capacity_mw": s.capacity,
             "is_evidence": s.is_evidence}
            for s in net.stations
        ],
        "dag": {
            "nodes": list(net.dag.nodes),
            "parents": {v: list(net.dag.parents[v]) for v in net.dag.nodes},
            "max_parents": net.dag.max_parents,
        },
        "score": net.score,
        "regressions": {
            node: {
                "parents": list(reg.coefficients.keys()),
                "coefficients": list(reg.coefficients.values()),
                "residuals": reg.residuals.tolist(),
                "residual_variance": reg.residual_variance,
            }
            for node, reg in net.regressions.items()
        },
        "marginals": {sid: _marginal_to_dict(m)
                      for sid, m in net.marginals.items()},
    }
    if model.inflow_model is not None:
        im = model.inflow_model
        doc["inflow_model"] = {
            "order": im.order,
            "stations": {
                sid: {
                    "month_log_mean": sm.month_log_mean.tolist(),
                    "month_log_std": sm.month_log_std.tolist(),
                    "phi": sm.phi.tolist(),
                    "sigma_e": sm.sigma_e,
                    "zero_floor": sm.zero_floor,
                }
                for sid, sm in im.per_station.items()
            },
        }
    if model.disagg_model is not None:
        if hourly_ref is None:
            raise ConfigError(
                "a disaggregation model needs an hourly data reference")
        doc["disagg"] = {
            "variance_threshold": model.disagg_model.variance_threshold,
            "hourly_ref": hourly_ref,
        }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)


def load_model(path) -> FittedModel:
    """Reload an archive, refitting the disaggregation decomposition from
    the referenced (and checksum-verified) hourly data file."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported archive schema {doc.get('schema_version')!r}")

    stations = tuple(
        StationMeta(d["id"], d["kind"], d["capacity_mw"], d["is_evidence"])
        for d in doc["stations"])
    dag = Dag(
        nodes=tuple(doc["dag"]["nodes"]),
        parents={v: tuple(pa) for v, pa in doc["dag"]["parents"].items()},
        max_parents=doc["dag"]["max_parents"],
    )
    regressions = {
        node: NodeRegression(
            node=node,
            coefficients=dict(zip(d["parents"], d["coefficients"])),
            residuals=np.asarray(d["residuals"], dtype=float),
            residual_variance=d["residual_variance"],
        )
        for node, d in doc["regressions"].items()
    }
    marginals = {
        sid: marginal.rebuild(d["samples"], d["bandwidth"], tuple(d["support"]),
                              d["bounded"], d["grid_size"])
        for sid, d in doc["marginals"].items()
    }
    net = BayesNet(dag=dag, regressions=regressions, marginals=marginals,
                   stations=stations, score=doc["score"])

    inflow_model = None
    if "inflow_model" in doc:
        im = doc["inflow_model"]
        hydro = tuple(s for s in stations if s.id in im["stations"])
        inflow_model = InflowModel(
            stations=hydro,
            order=im["order"],
            per_station={
                sid: InflowStationModel(
                    month_log_mean=np.asarray(d["month_log_mean"]),
                    month_log_std=np.asarray(d["month_log_std"]),
                    phi=np.asarray(d["phi"]),
                    sigma_e=d["sigma_e"],
                    zero_floor=d["zero_floor"],
                )
                for sid, d in im["stations"].items()
            },
        )

    disagg_model = None
    if "disagg" in doc:
        ref = doc["disagg"]["hourly_ref"]
        panel = load_panel(ref["data"], ref["meta"])
        if panel_digest(panel) != ref["sha256"]:
            raise DataError(
                f"hourly data file {ref['data']!r} no longer matches the "
                f"checksum recorded in the archive")
        disagg_model = fit_disagg(panel, doc["disagg"]["variance_threshold"])

    return FittedModel(net, inflow_model, disagg_model,
                       ModelOptions(**doc["options"]))
