"""Per-variable kernel density marginals with tabulated CDF and inverse.

Each variable gets a Gaussian-kernel KDE whose cumulative distribution is
available in closed form as a mixture of normal CDFs.  Bounded variables
(capacity factors on [0, 1]) use boundary reflection so no density mass
leaks outside the support.  The quantile function inverts the CDF by
bisection bracketed on a tabulated grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .errors import DataError, DegenerateMarginalError, InsufficientDataError

# Tail clamp keeping the downstream normal quantile finite.
TAIL_EPS = 1e-9

# Bisection stops when |F(x) - u| falls below this.
QUANTILE_TOL = 1e-9

# Unbounded grids span the sample range plus this many bandwidths on each
# side; 6.2 puts the grid-end CDF values below TAIL_EPS (Phi(-6.2) ~ 2.8e-10).
GRID_PAD_BANDWIDTHS = 6.2

MIN_SAMPLES = 30


def silverman_bandwidth(x: np.ndarray) -> float:
    """Rule-of-thumb bandwidth 0.9 * min(std, IQR/1.34) * n^(-1/5)."""
    std = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    iqr = q75 - q25
    a = min(std, iqr / 1.34) if iqr > 0 else std
    return 0.9 * a * len(x) ** (-0.2)


@dataclass(frozen=True)
class MarginalModel:
    """Fitted Gaussian-kernel KDE for one variable.

    Attributes
    ----------
    samples : ndarray
        The fitting data, in original units.
    bandwidth : float
        Kernel standard deviation (same units as the data).
    support : (float, float)
        Closed interval covered by the tabulated CDF.  For bounded models
        this is the declared support; otherwise the padded sample range.
    bounded : bool
        Whether density mass outside `support` is reflected back in.
    grid_x, grid_f : ndarray
        Tabulated (x, F(x)) pairs, both increasing.
    """

    samples: np.ndarray
    bandwidth: float
    support: tuple[float, float]
    bounded: bool
    grid_x: np.ndarray = field(repr=False)
    grid_f: np.ndarray = field(repr=False)

    def _reflected_mass(self, x: np.ndarray) -> np.ndarray:
        lo, hi = self.support
        s, h = self.samples, self.bandwidth
        return (_mixture_cdf(x, s, h)
                + _mixture_cdf(x, 2.0 * lo - s, h)
                + _mixture_cdf(x, 2.0 * hi - s, h))

    def _cdf_raw(self, x: np.ndarray) -> np.ndarray:
        """Analytic mixture CDF, unclamped.

        Bounded models add single-reflection images of every kernel at both
        boundaries and renormalize over the support, which makes F(lo) = 0
        and F(hi) = 1 exact.
        """
        x = np.asarray(x, dtype=float)
        if not self.bounded:
            return _mixture_cdf(x, self.samples, self.bandwidth)
        lo, hi = self.support
        g = self._reflected_mass(np.clip(x, lo, hi))
        g_lo, g_hi = self._norm_consts
        return (g - g_lo) / (g_hi - g_lo)

    @property
    def _norm_consts(self) -> tuple[float, float]:
        cached = self.__dict__.get("_norm_cache")
        if cached is None:
            lo, hi = self.support
            cached = (float(self._reflected_mass(np.array([lo]))[0]),
                      float(self._reflected_mass(np.array([hi]))[0]))
            object.__setattr__(self, "_norm_cache", cached)
        return cached

    def cdf(self, x) -> np.ndarray | float:
        """F(x), clamped to [TAIL_EPS, 1 - TAIL_EPS]."""
        scalar = np.isscalar(x)
        f = np.clip(self._cdf_raw(np.atleast_1d(np.asarray(x, dtype=float))),
                    TAIL_EPS, 1.0 - TAIL_EPS)
        return float(f[0]) if scalar else f

    def quantile(self, u) -> np.ndarray | float:
        """Inverse CDF by bisection bracketed on the tabulated grid.

        Returns x with |F(x) - u| <= QUANTILE_TOL for u inside the CDF's
        clamped codomain; u beyond the clamp maps to the nearest grid end.
        """
        scalar = np.isscalar(u)
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if np.any((u <= 0.0) | (u >= 1.0)):
            raise ValueError("quantile argument must lie in (0, 1)")
        uc = np.clip(u, max(TAIL_EPS, float(self.grid_f[0])),
                     min(1.0 - TAIL_EPS, float(self.grid_f[-1])))
        idx = np.searchsorted(self.grid_f, uc, side="left")
        idx = np.clip(idx, 1, len(self.grid_x) - 1)
        lo = self.grid_x[idx - 1].copy()
        hi = self.grid_x[idx].copy()
        x = 0.5 * (lo + hi)
        active = np.ones(len(x), dtype=bool)
        for _ in range(120):
            f = self._cdf_raw(x[active])
            diff = f - uc[active]
            done = np.abs(diff) <= QUANTILE_TOL
            go_left = diff > 0
            ia = np.flatnonzero(active)
            hi[ia[go_left]] = x[ia[go_left]]
            lo[ia[~go_left]] = x[ia[~go_left]]
            active[ia[done]] = False
            if not active.any():
                break
            x[active] = 0.5 * (lo[active] + hi[active])
        return float(x[0]) if scalar else x

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw fresh values from the fitted KDE (kernel smoothing bootstrap)."""
        idx = rng.integers(0, len(self.samples), size=n)
        x = self.samples[idx] + self.bandwidth * rng.standard_normal(n)
        if self.bounded:
            lo, hi = self.support
            for _ in range(64):
                out = (x < lo) | (x > hi)
                if not out.any():
                    break
                x = np.where(x < lo, 2.0 * lo - x, x)
                x = np.where(x > hi, 2.0 * hi - x, x)
        return x


def _mixture_cdf(x: np.ndarray, centers: np.ndarray, h: float) -> np.ndarray:
    """Mean of Phi((x - c) / h) over kernel centers, chunked to bound memory."""
    x = np.atleast_1d(x)
    out = np.empty(len(x), dtype=float)
    step = max(1, 2_000_000 // max(len(centers), 1))
    for start in range(0, len(x), step):
        blk = x[start:start + step]
        out[start:start + step] = ndtr(
            (blk[:, None] - centers[None, :]) / h
        ).mean(axis=1)
    return out


def fit_kde(samples, support: tuple[float, float] | None = None,
            grid_size: int = 2048) -> MarginalModel:
    """Fit a Gaussian-kernel KDE with Silverman's rule-of-thumb bandwidth.

    Parameters
    ----------
    samples : array-like
        At least MIN_SAMPLES finite observations.
    support : (lo, hi), optional
        Closed support; density mass outside is reflected back at the
        boundaries.  None means unbounded.
    grid_size : int
        Number of tabulated CDF points (>= 1024).

    Raises
    ------
    InsufficientDataError
        Fewer than MIN_SAMPLES observations.
    DegenerateMarginalError
        Zero sample variance; the caller must treat the variable as constant.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if len(x) < MIN_SAMPLES:
        raise InsufficientDataError(
            f"KDE needs at least {MIN_SAMPLES} samples, got {len(x)}")
    if not np.all(np.isfinite(x)):
        raise DataError("KDE samples must all be finite")
    if np.ptp(x) == 0.0:
        raise DegenerateMarginalError("zero sample variance")
    if grid_size < 1024:
        raise ValueError("grid_size must be >= 1024")

    h = silverman_bandwidth(x)
    if not h > 0.0:
        raise DegenerateMarginalError("degenerate bandwidth")
    if support is not None:
        lo, hi = float(support[0]), float(support[1])
        if not lo < hi:
            raise ValueError("support must satisfy lo < hi")
        if np.any(x < lo) or np.any(x > hi):
            raise DataError("samples fall outside the declared support")
        bounded = True
    else:
        pad = GRID_PAD_BANDWIDTHS * h
        lo, hi = float(x.min() - pad), float(x.max() + pad)
        bounded = False

    return rebuild(x, h, (lo, hi), bounded, grid_size)


def rebuild(samples: np.ndarray, bandwidth: float,
            support: tuple[float, float], bounded: bool,
            grid_size: int) -> MarginalModel:
    """Reassemble a model from stored parameters, recomputing the grid.

    Deterministic, so serialize / deserialize round-trips bit-identically.
    """
    model = MarginalModel(
        samples=np.asarray(samples, dtype=float),
        bandwidth=float(bandwidth),
        support=(float(support[0]), float(support[1])),
        bounded=bool(bounded),
        grid_x=np.linspace(support[0], support[1], grid_size),
        grid_f=np.empty(0),
    )
    object.__setattr__(model, "grid_f", model._cdf_raw(model.grid_x))
    return model
