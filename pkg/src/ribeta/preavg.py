"""Pre-averaging building blocks for noise-robust spot covariance estimation.

The module exposes two layers. The scalar reference operations
(:func:`preaveraged_increment`, :func:`local_average`,
:func:`noise_lag_statistic`, :func:`noise_weighted_stat`) implement the
defining sums directly and exist mainly for testing and exploration. The
block estimators (:func:`spot_covariance`, :func:`noise_moments`) run on a
vectorized per-day cache (:class:`DayStatistics`) that precomputes the
pre-averaged returns, local averages, and lagged noise statistics once per
day; the realized-beta layer reuses the same cache across all blocks of a
day.

Index convention: the scalar operations take positions in the stored panel
series; block estimators take a panel-global ``block_start`` and require the
block to sit inside a single trading day.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import PricePanel, TuningConfig, WeightKernel, discrete_phi_weights

__all__ = [
    "BlockError",
    "SpotCovEstimate",
    "NoiseMomentEstimate",
    "ThresholdSet",
    "DayStatistics",
    "day_statistics",
    "preaveraged_increment",
    "local_average",
    "noise_lag_statistic",
    "noise_weighted_stat",
    "spot_covariance",
    "noise_moments",
]

_PAIRS = ((1, 1), (1, 2), (2, 2))


class BlockError(ValueError):
    """Raised when a block does not fit the day or indices overflow."""


@dataclass(frozen=True)
class SpotCovEstimate:
    """Block spot covariance of the latent continuous parts.

    Entries are in variance-per-day units. ``sigma11_floored`` is the
    denominator actually used by the spot beta ratio. ``truncation_counts``
    holds the number of clipped pre-averaged products and clipped noise
    statistics across the three entries.
    """

    sigma11: float
    sigma12: float
    sigma22: float
    sigma11_floored: float
    block_start: int
    truncation_counts: dict = field(default_factory=dict)
    all_truncated: bool = False


@dataclass(frozen=True)
class NoiseMomentEstimate:
    """Block estimates of the long-run noise (co)variances.

    Diagonal entries are floored at zero before use in debiasing (a negative
    noise variance is meaningless); ``floor_count`` records how many entries
    the floor touched.
    """

    theta11: float
    theta12: float
    theta22: float
    block_start: int
    floor_count: int = 0
    truncation_count: int = 0


@dataclass(frozen=True)
class ThresholdSet:
    """Absolute truncation levels resolved for one trading day."""

    u1: float
    u2: float
    u11: float
    u12: float
    u22: float
    a_dot11: float
    a_dot12: float
    a_dot22: float

    def as_dict(self) -> dict[str, float]:
        return {
            "u1": self.u1, "u2": self.u2,
            "u11": self.u11, "u12": self.u12, "u22": self.u22,
            "a_dot11": self.a_dot11, "a_dot12": self.a_dot12,
            "a_dot22": self.a_dot22,
        }


# ---------------------------------------------------------------------------
# scalar reference operations
# ---------------------------------------------------------------------------


def _series(panel: PricePanel, which: int) -> np.ndarray:
    if which == 1:
        return panel.x1
    if which == 2:
        return panel.x2
    raise ValueError(f"series must be 1 or 2, got {which}")


def preaveraged_increment(panel: PricePanel, series: int, l: int, k_m: int, g) -> float:
    """Weighted increment sum ``sum_j g(j/k_m) (P_{l+j} - P_{l+j-1})``."""
    y = _series(panel, series)
    if l < 0 or l + k_m - 1 >= y.shape[0]:
        raise BlockError(
            f"pre-averaging window overflows series: l={l}, k_m={k_m}, "
            f"length={y.shape[0]}"
        )
    total = 0.0
    for j in range(1, k_m):
        total += g(j / k_m) * (y[l + j] - y[l + j - 1])
    return float(total)


def local_average(panel: PricePanel, series: int, l: int, l_m: int) -> float:
    """Arithmetic mean of ``l_m`` consecutive observations from ``l``."""
    y = _series(panel, series)
    if l < 0 or l + l_m - 1 >= y.shape[0]:
        raise BlockError(
            f"local average overflows series: l={l}, l_m={l_m}, length={y.shape[0]}"
        )
    return float(y[l : l + l_m].mean())


def noise_lag_statistic(
    panel: PricePanel, series_a: int, series_b: int, i: int, d: int, l_m: int
) -> float:
    """Lagged noise product ``(P_i - Pbar_{i+2l_m}) (P'_{i+d} - P'bar_{i+4l_m})``.

    Negative lags read the second price at the shifted index ``i + d`` while
    keeping both centering averages anchored at ``i``; the usable index
    range shifts accordingly.
    """
    ya = _series(panel, series_a)
    if i < 0 or i + d < 0 or i + abs(d) + 5 * l_m > ya.shape[0]:
        raise BlockError(
            f"noise statistic overflows series: i={i}, d={d}, l_m={l_m}, "
            f"length={ya.shape[0]}"
        )
    yb = _series(panel, series_b)
    left = ya[i] - local_average(panel, series_a, i + 2 * l_m, l_m)
    right = yb[i + d] - local_average(panel, series_b, i + 4 * l_m, l_m)
    return float(left * right)


def noise_weighted_stat(
    panel: PricePanel,
    pair: tuple[int, int],
    i: int,
    k_prime_m: int,
    phi: np.ndarray,
    l_m: int,
) -> float:
    """Kernel-weighted lag sum ``sum_d phi_d E^{m,d}`` over ``|d| <= k'_m``."""
    if phi.shape[0] != 2 * k_prime_m + 1:
        raise ValueError(
            f"phi weights must have length {2 * k_prime_m + 1}, got {phi.shape[0]}"
        )
    a, b = pair
    total = 0.0
    for idx, d in enumerate(range(-k_prime_m, k_prime_m + 1)):
        total += phi[idx] * noise_lag_statistic(panel, a, b, i, d, l_m)
    return float(total)


# ---------------------------------------------------------------------------
# vectorized per-day statistics
# ---------------------------------------------------------------------------


def _moving_average(y: np.ndarray, width: int) -> np.ndarray:
    """mean(y[l:l+width]) for every admissible l."""
    c = np.concatenate(([0.0], np.cumsum(y)))
    return (c[width:] - c[:-width]) / width


class DayStatistics:
    """Per-day precomputation shared by all block estimators.

    Builds the pre-averaged return arrays, the lagged noise statistics
    ``E^{m,d}``, their kernel-weighted (``ehat``) and raw (``edot``) lag
    sums, and the day's resolved truncation levels.
    """

    def __init__(
        self,
        y1: np.ndarray,
        y2: np.ndarray,
        cfg: TuningConfig,
        kernel: WeightKernel,
        day_offset: int = 0,
    ) -> None:
        m = y1.shape[0] - 1
        if m < 2 * cfg.k_m + 2:
            raise BlockError(f"day too short: m={m} < 2*k_m+2={2 * cfg.k_m + 2}")
        self.m = m
        self.cfg = cfg
        self.kernel = kernel
        self.day_offset = day_offset
        k, lm, kp = cfg.k_m, cfg.l_m, cfg.k_prime_m

        w = kernel.weights(k)
        d1 = np.diff(y1)
        d2 = np.diff(y2)
        # ytil[l] = sum_j g(j/k) dY[l+j-1], l = 0..m-k+1
        self.ytil1 = np.correlate(d1, w)
        self.ytil2 = np.correlate(d2, w)

        ma1 = _moving_average(y1, lm)
        ma2 = _moving_average(y2, lm)

        # lagged noise statistics over l = 0..lmax, first kp entries invalid
        lmax = m - 5 * lm + 1
        if lmax < kp:
            raise BlockError(f"day too short for noise statistics: m={m}")
        if kp > 5 * lm - 1:
            raise BlockError(
                f"noise-lag cutoff k'_m={kp} exceeds the reach of the local "
                f"averages (need k'_m <= 5*l_m - 1 = {5 * lm - 1})"
            )
        self.noise_lmax = lmax
        self.noise_lmin = kp
        idx = np.arange(lmax + 1)
        left1 = y1[: lmax + 1] - ma1[idx + 2 * lm]
        left2 = y2[: lmax + 1] - ma2[idx + 2 * lm]
        c41 = ma1[idx + 4 * lm]
        c42 = ma2[idx + 4 * lm]

        phi = discrete_phi_weights(k, kp, kernel.g)
        self._ehat = {}
        self._edot = {}
        for (a, b), lft, y_b, c4 in (
            ((1, 1), left1, y1, c41),
            ((1, 2), left1, y2, c42),
            ((2, 2), left2, y2, c42),
        ):
            ehat = np.zeros(lmax + 1)
            edot = np.zeros(lmax + 1)
            for widx, d in enumerate(range(-kp, kp + 1)):
                lo = max(0, -d)
                seg = lft[lo:] * (y_b[lo + d : lo + d + (lmax + 1 - lo)] - c4[lo:])
                ehat[lo:] += phi[widx] * seg
                edot[lo:] += seg
            ehat[:kp] = np.nan
            edot[:kp] = np.nan
            self._ehat[(a, b)] = ehat
            self._edot[(a, b)] = edot

        self.thresholds = self._resolve_thresholds()

    # -- thresholds ---------------------------------------------------------

    def _resolve_thresholds(self) -> ThresholdSet:
        """Data-driven absolute levels: 4x the day standard deviation of the
        pre-averaged returns, 0.2x the day standard deviation of each noise
        statistic. Explicit tuning values override."""
        cfg = self.cfg

        def sd(x: np.ndarray) -> float:
            x = x[np.isfinite(x)]
            return float(np.std(x, ddof=1)) if x.shape[0] > 1 else 0.0

        def pick(override: Optional[float], fallback: float) -> float:
            return float(override) if override is not None else fallback

        return ThresholdSet(
            u1=pick(cfg.u1, 4.0 * sd(self.ytil1)),
            u2=pick(cfg.u2, 4.0 * sd(self.ytil2)),
            u11=pick(cfg.u11, 0.2 * sd(self._ehat[(1, 1)])),
            u12=pick(cfg.u12, 0.2 * sd(self._ehat[(1, 2)])),
            u22=pick(cfg.u22, 0.2 * sd(self._ehat[(2, 2)])),
            a_dot11=pick(cfg.a_dot11, 0.2 * sd(self._edot[(1, 1)])),
            a_dot12=pick(cfg.a_dot12, 0.2 * sd(self._edot[(1, 2)])),
            a_dot22=pick(cfg.a_dot22, 0.2 * sd(self._edot[(2, 2)])),
        )

    # -- block estimators ----------------------------------------------------

    def _pre_sum(self, a: int, b: int, l0: int, u_a: float, u_b: float):
        k, bm = self.cfg.k_m, self.cfg.b_m
        n_terms = bm - 2 * k
        ya = self.ytil1 if a == 1 else self.ytil2
        yb = self.ytil1 if b == 1 else self.ytil2
        sa = ya[l0 : l0 + n_terms]
        sb = yb[l0 : l0 + n_terms]
        keep = (np.abs(sa) <= u_a) & (np.abs(sb) <= u_b)
        return float(np.sum(sa * sb * keep)), int(n_terms - keep.sum())

    def _noise_sum(self, pair, l0: int, level: float, weighted: bool):
        lm, bm = self.cfg.l_m, self.cfg.b_m
        arr = self._ehat[pair] if weighted else self._edot[pair]
        lo = l0
        hi = l0 + bm - 6 * lm  # inclusive
        if hi > self.noise_lmax:
            hi = self.noise_lmax
        seg = arr[lo : hi + 1]
        seg = seg[np.isfinite(seg)]
        keep = np.abs(seg) <= level
        return float(np.sum(seg * keep)), int(keep.size - keep.sum())

    def spot_covariance(self, l0: int) -> SpotCovEstimate:
        """Truncated, noise-corrected spot covariance of the block at
        day-local start ``l0``."""
        cfg = self.cfg
        if l0 < 0 or l0 + cfg.b_m > self.m:
            raise BlockError(
                f"block [{l0}, {l0 + cfg.b_m}) does not fit day of length {self.m}"
            )
        th = self.thresholds
        norm = (cfg.b_m - 2 * cfg.k_m) * (1.0 / self.m) * cfg.k_m * self.kernel.psi0
        out = {}
        n_pre = 0
        n_noise = 0
        all_trunc = False
        levels = {(1, 1): th.u11, (1, 2): th.u12, (2, 2): th.u22}
        u = {1: th.u1, 2: th.u2}
        n_terms = cfg.b_m - 2 * cfg.k_m
        for a, b in _PAIRS:
            s, cut_pre = self._pre_sum(a, b, l0, u[a], u[b])
            nsum, cut_noise = self._noise_sum((a, b), l0, levels[(a, b)], weighted=True)
            n_pre += cut_pre
            n_noise += cut_noise
            if cut_pre == n_terms:
                out[(a, b)] = 0.0
                all_trunc = True
            else:
                out[(a, b)] = (s - nsum / cfg.k_m) / norm
        return SpotCovEstimate(
            sigma11=out[(1, 1)],
            sigma12=out[(1, 2)],
            sigma22=out[(2, 2)],
            sigma11_floored=max(out[(1, 1)], cfg.delta_m),
            block_start=self.day_offset + l0,
            truncation_counts={"preavg": n_pre, "noise": n_noise},
            all_truncated=all_trunc,
        )

    def noise_moments(self, l0: int) -> NoiseMomentEstimate:
        """Block noise-moment estimates (raw lag sums, truncated, averaged)."""
        cfg = self.cfg
        if l0 < 0 or l0 + cfg.b_m > self.m:
            raise BlockError(
                f"block [{l0}, {l0 + cfg.b_m}) does not fit day of length {self.m}"
            )
        th = self.thresholds
        denom = cfg.b_m - 6 * cfg.l_m
        levels = {(1, 1): th.a_dot11, (1, 2): th.a_dot12, (2, 2): th.a_dot22}
        vals = {}
        cut_total = 0
        for pair in _PAIRS:
            s, cut = self._noise_sum(pair, l0, levels[pair], weighted=False)
            vals[pair] = s / denom
            cut_total += cut
        floor_count = int(vals[(1, 1)] < 0.0) + int(vals[(2, 2)] < 0.0)
        return NoiseMomentEstimate(
            theta11=max(vals[(1, 1)], 0.0),
            theta12=vals[(1, 2)],
            theta22=max(vals[(2, 2)], 0.0),
            block_start=self.day_offset + l0,
            floor_count=floor_count,
            truncation_count=cut_total,
        )


def day_statistics(
    panel: PricePanel, day: int, cfg: TuningConfig, kernel: WeightKernel
) -> DayStatistics:
    """Build the vectorized statistics cache for one trading day (1-based)."""
    y1, y2 = panel.day(day)
    lo, _ = panel.grid.day_bounds(day)
    return DayStatistics(y1, y2, cfg, kernel, day_offset=lo)


def _locate_block(panel: PricePanel, block_start: int, cfg: TuningConfig) -> tuple[int, int]:
    m = panel.grid.m
    if block_start < 0:
        raise BlockError(f"block start {block_start} outside panel")
    day = block_start // m + 1
    if day > panel.grid.n_days:
        raise BlockError(f"block start {block_start} outside panel")
    l0 = block_start - (day - 1) * m
    if l0 + cfg.b_m > m:
        raise BlockError(
            f"block [{block_start}, {block_start + cfg.b_m}) crosses a day boundary"
        )
    return day, l0


def spot_covariance(
    panel: PricePanel, block_start: int, cfg: TuningConfig, kernel: WeightKernel
) -> SpotCovEstimate:
    """Spot covariance for a single block at a panel-global start index."""
    day, l0 = _locate_block(panel, block_start, cfg)
    return day_statistics(panel, day, cfg, kernel).spot_covariance(l0)


def noise_moments(
    panel: PricePanel, block_start: int, cfg: TuningConfig,
    kernel: Optional[WeightKernel] = None,
) -> NoiseMomentEstimate:
    """Noise moments for a single block at a panel-global start index.

    The raw lag sums do not involve the weight kernel; one is only needed to
    resolve data-driven thresholds consistently with :func:`spot_covariance`
    (the default triangular kernel is used when omitted).
    """
    from .core import default_kernel

    day, l0 = _locate_block(panel, block_start, cfg)
    kern = kernel if kernel is not None else default_kernel()
    return day_statistics(panel, day, cfg, kern).noise_moments(l0)
