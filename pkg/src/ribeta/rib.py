"""Daily realized integrated beta: block spot betas, debiasing, integration,
asymptotic variance, and the two comparison estimators.

``rib_day`` tiles a day with non-overlapping blocks of ``b_m`` ticks, turns
each block's noise-corrected spot covariance into a debiased spot beta, and
averages the blocks. A trailing partial block is dropped; by default the
result is rescaled by the covered fraction so a constant spot beta is
recovered without tail bias (disable with ``renormalize=False`` to match the
raw block sum).

The comparison estimators share the tuning: ``chen_day`` is the block
volatility-functional estimator with its own bias terms and norm truncation,
``prvb_day`` the whole-day pre-averaged covariance ratio that presumes a
constant intraday beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import PricePanel, TuningConfig, WeightKernel
from .preavg import (
    BlockError,
    DayStatistics,
    NoiseMomentEstimate,
    SpotCovEstimate,
    day_statistics,
)

__all__ = [
    "RIBSeries",
    "DayEstimate",
    "spot_beta",
    "debias_term",
    "rib_day",
    "rib_avar_day",
    "chen_day",
    "prvb_day",
    "rib_series",
]


@dataclass(frozen=True)
class RIBSeries:
    """Per-day realized-beta estimates with optional asymptotic variances.

    ``avar`` entries are NaN where the estimator does not define one (the
    comparison estimators). Per-day failures are collected in ``failures``
    as ``{day: message}``; failed days carry NaN estimates.
    """

    rib: np.ndarray
    avar: np.ndarray
    m_per_day: np.ndarray
    estimator_tag: str = "RIB"
    failures: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.rib.shape[0]


@dataclass(frozen=True)
class DayEstimate:
    """One day's realized beta with its per-block diagnostics."""

    rib: float
    avar: float
    blocks: list
    noise: list
    thresholds: dict
    truncation_counts: dict
    negative_avar_blocks: int = 0


def spot_beta(est: SpotCovEstimate) -> float:
    """Block spot beta: covariance over floored market variance."""
    return est.sigma12 / est.sigma11_floored


def debias_term(
    est: SpotCovEstimate,
    nm: NoiseMomentEstimate,
    kernel: WeightKernel,
    cfg: TuningConfig,
    m: int,
) -> float:
    """Second-order noise-bias correction of the block spot beta.

    ``C_k`` is recovered from the realized window as ``k_m / sqrt(m)`` so the
    kernel constants and the prefactor stay mutually consistent.
    """
    dm = 1.0 / m
    ck = cfg.k_m * math.sqrt(dm)
    pref = 4.0 / (kernel.psi0**2 * ck**3 * cfg.b_m * math.sqrt(dm))
    s11 = est.sigma11_floored
    inner = (ck**2 * kernel.phi01 / s11 + kernel.phi11 * nm.theta11 / s11**2)
    gap = nm.theta11 * est.sigma12 / s11 - nm.theta12
    return float(pref * inner * gap)


def _block_starts(m: int, b_m: int) -> np.ndarray:
    n_blocks = m // b_m
    if n_blocks < 1:
        raise BlockError(f"day of length {m} shorter than one block b_m={b_m}")
    return np.arange(n_blocks) * b_m


def _day_estimate(
    stats: DayStatistics, m: int, renormalize: bool, with_avar: bool
) -> DayEstimate:
    cfg = stats.cfg
    kernel = stats.kernel
    starts = _block_starts(m, cfg.b_m)
    dm = 1.0 / m
    ck = cfg.k_m * math.sqrt(dm)

    blocks: list[SpotCovEstimate] = []
    noise: list[NoiseMomentEstimate] = []
    total = 0.0
    avar_total = 0.0
    neg_avar = 0
    counts = {"preavg": 0, "noise": 0, "theta_floor": 0}
    for l0 in starts:
        est = stats.spot_covariance(int(l0))
        nm = stats.noise_moments(int(l0))
        blocks.append(est)
        noise.append(nm)
        counts["preavg"] += est.truncation_counts["preavg"]
        counts["noise"] += est.truncation_counts["noise"] + nm.truncation_count
        counts["theta_floor"] += nm.floor_count
        total += spot_beta(est) - debias_term(est, nm, kernel, cfg, m)
        if with_avar:
            r2 = _r_squared(est, nm, kernel, ck)
            if r2 < 0.0:
                neg_avar += 1
                r2 = 0.0
            avar_total += r2

    scale = cfg.b_m * dm
    rib = total * scale
    avar = avar_total * scale if with_avar else math.nan
    if renormalize:
        covered = starts.shape[0] * cfg.b_m
        rib *= m / covered
        avar *= (m / covered) ** 2  # variance of the rescaled estimator
    return DayEstimate(
        rib=float(rib),
        avar=float(avar),
        blocks=blocks,
        noise=noise,
        thresholds=stats.thresholds.as_dict(),
        truncation_counts=counts,
        negative_avar_blocks=neg_avar,
    )


def _r_squared(
    est: SpotCovEstimate, nm: NoiseMomentEstimate, kernel: WeightKernel, ck: float
) -> float:
    """Block contribution to the asymptotic-variance estimator.

    Three groups weighted by Phi00, Phi01 / C_k^2 and Phi11 / C_k^3; the
    last group is the quadratic form 2 (beta theta11)^2 - 4 beta theta11
    theta12 + theta11 theta22 + theta12^2, all divided by the floored market
    variance to the appropriate power.
    """
    s11 = est.sigma11_floored
    s12 = est.sigma12
    s22 = est.sigma22
    t11, t12, t22 = nm.theta11, nm.theta12, nm.theta22
    g0 = kernel.phi00 * (s22 / s11 - s12**2 / s11**2)
    g1 = (kernel.phi01 / ck**2) * (
        t22 / s11 - 2.0 * s12 * t12 / s11**2 + s22 * t11 / s11**2
    )
    g2 = (kernel.phi11 / ck**3) * (
        2.0 * (s12 * t11) ** 2 / s11**4
        + t11 * t22 / s11**2
        - 4.0 * s12 * t11 * t12 / s11**3
        + t12**2 / s11**2
    )
    return float(2.0 * ck / kernel.psi0**2 * (g0 + g1 + g2))


def rib_day(
    panel: PricePanel,
    day: int,
    cfg: TuningConfig,
    kernel: WeightKernel,
    renormalize: bool = True,
) -> tuple[float, list]:
    """Realized integrated beta of one day and its per-block estimates."""
    stats = day_statistics(panel, day, cfg, kernel)
    result = _day_estimate(stats, panel.grid.m, renormalize, with_avar=False)
    return result.rib, result.blocks


def rib_avar_day(
    panel: PricePanel, day: int, cfg: TuningConfig, kernel: WeightKernel
) -> float:
    """Asymptotic-variance estimate of the day's realized integrated beta."""
    stats = day_statistics(panel, day, cfg, kernel)
    result = _day_estimate(stats, panel.grid.m, renormalize=False, with_avar=True)
    return result.avar


# ---------------------------------------------------------------------------
# comparison estimators
# ---------------------------------------------------------------------------


def _preavg_arrays(panel: PricePanel, day: int, kernel: WeightKernel, k: int):
    y1, y2 = panel.day(day)
    w = kernel.weights(k)
    yt1 = np.correlate(np.diff(y1), w)
    yt2 = np.correlate(np.diff(y2), w)
    return y1, y2, yt1, yt2


def _norm_threshold(cfg: TuningConfig, yt1: np.ndarray, yt2: np.ndarray) -> float:
    """Joint norm truncation level from the per-series levels (data-driven
    when not pinned in the tuning, same rule as the day cache)."""
    u1 = cfg.u1 if cfg.u1 is not None else 4.0 * float(np.std(yt1, ddof=1))
    u2 = cfg.u2 if cfg.u2 is not None else 4.0 * float(np.std(yt2, ddof=1))
    if math.isinf(u1) or math.isinf(u2):
        return math.inf
    return math.hypot(u1, u2)


def _bias_matrix_arrays(y1: np.ndarray, y2: np.ndarray, kernel: WeightKernel, k: int):
    """Per-window quadratic bias terms: (1/2) sum_r (dg_r)^2 dY_{l+r} dY_{l+r}^T."""
    gi = np.asarray(kernel.g(np.arange(k + 1) / k), dtype=float)
    gi[0] = 0.0
    gi[-1] = 0.0
    w2 = np.diff(gi) ** 2
    d1 = np.diff(y1)
    d2 = np.diff(y2)
    b11 = 0.5 * np.correlate(d1 * d1, w2)
    b12 = 0.5 * np.correlate(d1 * d2, w2)
    b22 = 0.5 * np.correlate(d2 * d2, w2)
    return b11, b12, b22


def chen_day(
    panel: PricePanel,
    day: int,
    cfg: TuningConfig,
    kernel: WeightKernel,
    renormalize: bool = True,
) -> float:
    """Block volatility-functional comparison estimator.

    Uses the same block and pre-averaging windows as the realized integrated
    beta, a joint norm truncation on the pre-averaged return vector, the
    quadratic bias-correction matrix, and a realized-covariance noise proxy
    over the first ``k_m`` increments of each block.
    """
    m = panel.grid.m
    k, bm = cfg.k_m, cfg.b_m
    y1, y2, yt1, yt2 = _preavg_arrays(panel, day, kernel, k)
    u_norm = _norm_threshold(cfg, yt1, yt2)
    b11, b12, b22 = _bias_matrix_arrays(y1, y2, kernel, k)
    d1 = np.diff(y1)
    d2 = np.diff(y2)

    starts = _block_starts(m, bm)
    dm = 1.0 / m
    ck = k * math.sqrt(dm)
    norm = (bm - k) * dm * k * kernel.psi0
    pref = 4.0 / (kernel.psi0**2 * ck**3 * bm * math.sqrt(dm))
    total = 0.0
    for l0 in starts:
        hi = min(l0 + bm - k + 1, yt1.shape[0] - 1, b11.shape[0] - 1)
        sl = slice(l0, hi + 1)
        a1 = yt1[sl]
        a2 = yt2[sl]
        keep = np.hypot(a1, a2) <= u_norm
        s11 = (np.sum(a1 * a1 * keep) - np.sum(b11[sl])) / norm
        s12 = (np.sum(a1 * a2 * keep) - np.sum(b12[sl])) / norm
        s11_star = max(s11, cfg.delta_m)

        # noise proxy: realized covariance of the first k_m block increments
        isl = slice(l0, l0 + k)
        t11 = float(np.sum(d1[isl] * d1[isl])) / (2.0 * k)
        t12 = float(np.sum(d1[isl] * d2[isl])) / (2.0 * k)

        inner = ck**2 * kernel.phi01 / s11_star + kernel.phi11 * t11 / s11_star**2
        gap = t11 * s12 / s11_star - t12
        total += s12 / s11_star - pref * inner * gap

    est = total * bm * dm
    if renormalize:
        est *= m / (starts.shape[0] * bm)
    return float(est)


def prvb_day(
    panel: PricePanel, day: int, cfg: TuningConfig, kernel: WeightKernel
) -> float:
    """Whole-day pre-averaged covariance ratio (constant-beta benchmark)."""
    m = panel.grid.m
    k = cfg.k_m
    if m < k:
        raise BlockError(f"day of length {m} shorter than k_m={k}")
    y1, y2, yt1, yt2 = _preavg_arrays(panel, day, kernel, k)
    u_norm = _norm_threshold(cfg, yt1, yt2)
    b11, b12, b22 = _bias_matrix_arrays(y1, y2, kernel, k)
    n = min(yt1.shape[0], b11.shape[0])
    a1 = yt1[:n]
    a2 = yt2[:n]
    keep = np.hypot(a1, a2) <= u_norm
    s11 = float(np.sum((a1 * a1 - b11[:n]) * keep))
    s12 = float(np.sum((a1 * a2 - b12[:n]) * keep))
    if s11 <= 0.0:
        raise BlockError(f"degenerate whole-day market variance: {s11}")
    return s12 / s11


_ESTIMATORS = ("RIB", "CHEN", "PRVB")


def rib_series(
    panel: PricePanel,
    cfg: TuningConfig,
    kernel: WeightKernel,
    estimator: str = "RIB",
    with_avar: bool = True,
    renormalize: bool = True,
) -> RIBSeries:
    """Per-day estimates over a multi-day panel; days are independent and
    per-day failures are collected rather than raised."""
    tag = estimator.upper()
    if tag not in _ESTIMATORS:
        raise ValueError(f"estimator must be one of {_ESTIMATORS}, got {estimator!r}")
    n = panel.grid.n_days
    m = panel.grid.m
    rib = np.full(n, np.nan)
    avar = np.full(n, np.nan)
    failures: dict[int, str] = {}
    for day in range(1, n + 1):
        try:
            if tag == "RIB":
                stats = day_statistics(panel, day, cfg, kernel)
                res = _day_estimate(stats, m, renormalize, with_avar=with_avar)
                rib[day - 1] = res.rib
                avar[day - 1] = res.avar
            elif tag == "CHEN":
                rib[day - 1] = chen_day(panel, day, cfg, kernel, renormalize)
            else:
                rib[day - 1] = prvb_day(panel, day, cfg, kernel)
        except (BlockError, ValueError) as exc:
            failures[day] = str(exc)
    return RIBSeries(
        rib=rib,
        avar=avar,
        m_per_day=np.full(n, m),
        estimator_tag=tag,
        failures=failures,
    )
