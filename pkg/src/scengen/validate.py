"""Statistical validation of generated scenarios against history.

Correlation equality is tested pair by pair with Fisher's Z; per-station
distributions are compared with two-sample Kolmogorov-Smirnov distances;
per-calendar-month confidence bands summarize level and spread.  Pairs
between two evidence stations are attributed to the inflow model and
reported separately from the main pass fraction.

Plots themselves are out of scope; the report emits plot-ready CSVs.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.special import erfc
from scipy.stats import ks_2samp

from .data import HistoricalPanel
from .simulate import ScenarioSet

_MIN_PAIR_OBS = 4


def fisher_z_pair(r1: float, n1: int, r2: float, n2: int) -> tuple[float, float]:
    """Fisher's Z test for equality of two correlation coefficients.

    T = (atanh(r1) - atanh(r2)) / sqrt(1/(n1-3) + 1/(n2-3)), with a
    two-sided p-value from the standard normal.
    """
    if not (abs(r1) < 1.0 and abs(r2) < 1.0):
        raise ValueError("correlations must lie strictly inside (-1, 1)")
    if n1 < _MIN_PAIR_OBS or n2 < _MIN_PAIR_OBS:
        raise ValueError(f"sample sizes must be >= {_MIN_PAIR_OBS}")
    se = math.sqrt(1.0 / (n1 - 3) + 1.0 / (n2 - 3))
    statistic = (math.atanh(r1) - math.atanh(r2)) / se
    p_value = float(erfc(abs(statistic) / math.sqrt(2.0)))
    return statistic, p_value


def _pooled_matrix(obj) -> np.ndarray:
    """Rows x stations view of a panel or a scenario set (scenarios pooled)."""
    if isinstance(obj, HistoricalPanel):
        return obj.values
    if isinstance(obj, ScenarioSet):
        s, t, n = obj.values.shape
        return obj.values.reshape(s * t, n)
    return np.asarray(obj, dtype=float)


def correlation_matrix(obj) -> np.ndarray:
    """Pearson correlations on pairwise-complete observations.

    Pairs with fewer than 4 overlapping rows are untestable and come back
    NaN.  Scenario sets are pooled across scenarios and months.
    """
    x = _pooled_matrix(obj)
    if not np.isnan(x).any():
        r = np.corrcoef(x, rowvar=False)
        np.clip(r, -1.0, 1.0, out=r)
        np.fill_diagonal(r, 1.0)  # exact by definition
        return r
    n = x.shape[1]
    r = np.full((n, n), np.nan)
    np.fill_diagonal(r, 1.0)
    obs = ~np.isnan(x)
    for i in range(n):
        for j in range(i + 1, n):
            both = obs[:, i] & obs[:, j]
            if both.sum() < _MIN_PAIR_OBS:
                continue
            a, b = x[both, i], x[both, j]
            a = a - a.mean()
            b = b - b.mean()
            denom = math.sqrt(float(a @ a) * float(b @ b))
            if denom > 0:
                r[i, j] = r[j, i] = float(a @ b) / denom
    return r


def pair_counts(obj) -> np.ndarray:
    """Number of overlapping observations behind each correlation entry."""
    x = _pooled_matrix(obj)
    obs = (~np.isnan(x)).astype(np.int64)
    return obs.T @ obs


@dataclass(frozen=True)
class PairTest:
    station_a: str
    station_b: str
    r_hist: float
    r_synth: float
    n_hist: int
    n_synth: int
    statistic: float
    p_value: float
    passed: bool


@dataclass(frozen=True)
class ValidationReport:
    alpha: float
    band_level: float
    pair_tests: list[PairTest]
    evidence_pair_tests: list[PairTest]
    untestable_pairs: list[tuple[str, str]]
    pass_fraction: float
    pdf_distances: dict[str, float]
    confidence_bands: pd.DataFrame

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "band_level": self.band_level,
            "pass_fraction": self.pass_fraction,
            "pair_tests": [asdict(t) for t in self.pair_tests],
            "evidence_pair_tests": [asdict(t) for t in self.evidence_pair_tests],
            "untestable_pairs": [list(p) for p in self.untestable_pairs],
            "pdf_distances": self.pdf_distances,
            "confidence_bands": self.confidence_bands.to_dict(orient="records"),
        }


def build_report(historical: HistoricalPanel, synthetic: ScenarioSet,
                 alpha: float = 0.10, band_level: float = 0.90) -> ValidationReport:
    """Assemble the full validation report over the common stations.

    The synthetic effective sample size is scenarios x months (months are
    sampled independently), so Fisher's Z is well defined on both sides.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    hist_ids = historical.station_ids
    synth_ids = synthetic.station_ids
    common = [sid for sid in hist_ids if sid in synth_ids]
    if not common:
        raise ValueError("historical and synthetic station sets are disjoint")

    h_cols = [hist_ids.index(sid) for sid in common]
    s_cols = [synth_ids.index(sid) for sid in common]
    hv = historical.values[:, h_cols]
    sv = synthetic.values[:, :, s_cols]
    n_syn = sv.shape[0] * sv.shape[1]
    sv_flat = sv.reshape(n_syn, len(common))

    r_hist = correlation_matrix(hv)
    n_hist = pair_counts(hv)
    r_synth = correlation_matrix(sv_flat)

    evidence = {s.id for s in historical.stations if s.is_evidence}
    evidence |= {s.id for s in synthetic.stations if s.is_evidence}

    pair_tests: list[PairTest] = []
    evidence_tests: list[PairTest] = []
    untestable: list[tuple[str, str]] = []
    for i in range(len(common)):
        for j in range(i + 1, len(common)):
            rh, rs = r_hist[i, j], r_synth[i, j]
            n1 = int(n_hist[i, j])
            if (np.isnan(rh) or np.isnan(rs) or n1 < _MIN_PAIR_OBS
                    or abs(rh) >= 1.0 or abs(rs) >= 1.0):
                untestable.append((common[i], common[j]))
                continue
            stat, p = fisher_z_pair(float(rh), n1, float(rs), n_syn)
            test = PairTest(common[i], common[j], float(rh), float(rs),
                            n1, n_syn, stat, p, p > alpha)
            if common[i] in evidence and common[j] in evidence:
                evidence_tests.append(test)
            else:
                pair_tests.append(test)

    pass_fraction = (sum(t.passed for t in pair_tests) / len(pair_tests)
                     if pair_tests else 0.0)

    pdf_distances = {}
    for k, sid in enumerate(common):
        hist_sample = hv[:, k][~np.isnan(hv[:, k])]
        pdf_distances[sid] = float(ks_2samp(hist_sample, sv_flat[:, k]).statistic)

    lo_q = (1.0 - band_level) / 2.0
    hi_q = 1.0 - lo_q
    hist_months = historical.index.month.to_numpy()
    synth_months = synthetic.index.month.to_numpy()
    rows = []
    for k, sid in enumerate(common):
        for m in sorted(set(hist_months) & set(synth_months)):
            h = hv[hist_months == m, k]
            h = h[~np.isnan(h)]
            sy = sv[:, synth_months == m, k].ravel()
            if len(h) == 0 or len(sy) == 0:
                continue
            rows.append({
                "station": sid, "month": int(m),
                "hist_mean": float(h.mean()),
                "hist_lo": float(np.quantile(h, lo_q)),
                "hist_hi": float(np.quantile(h, hi_q)),
                "synth_mean": float(sy.mean()),
                "synth_lo": float(np.quantile(sy, lo_q)),
                "synth_hi": float(np.quantile(sy, hi_q)),
            })
    bands = pd.DataFrame(rows, columns=["station", "month", "hist_mean",
                                        "hist_lo", "hist_hi", "synth_mean",
                                        "synth_lo", "synth_hi"])

    return ValidationReport(
        alpha=alpha, band_level=band_level,
        pair_tests=pair_tests, evidence_pair_tests=evidence_tests,
        untestable_pairs=untestable, pass_fraction=pass_fraction,
        pdf_distances=pdf_distances, confidence_bands=bands,
    )


def write_report(report: ValidationReport, out_dir) -> None:
    """Report JSON plus the three plot-ready CSVs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=1, sort_keys=True)

    stats = [t.statistic for t in report.pair_tests]
    if stats:
        counts, edges = np.histogram(stats, bins=20)
    else:
        counts, edges = np.zeros(0, dtype=int), np.zeros(1)
    pd.DataFrame({
        "bin_lo": edges[:-1], "bin_hi": edges[1:], "count": counts,
    }).to_csv(out / "fisher_hist.csv", index=False)

    scatter = report.pair_tests + report.evidence_pair_tests
    pd.DataFrame({
        "station_a": [t.station_a for t in scatter],
        "station_b": [t.station_b for t in scatter],
        "r_hist": [t.r_hist for t in scatter],
        "r_synth": [t.r_synth for t in scatter],
    }).to_csv(out / "corr_scatter.csv", index=False)

    report.confidence_bands.to_csv(out / "bands.csv", index=False)
