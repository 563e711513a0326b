"""Euler-scheme simulator for the Monte Carlo study's data-generating processes.

The simulator produces a latent bivariate log-price panel driven by a
time-varying spot beta, a GARCH-Ito market variance with price jumps, and an
observed panel contaminated by serially dependent, diurnally scaled
microstructure noise. One Euler step per observation tick by default; a
``refine`` factor subdivides each tick for convergence studies.

All randomness flows from a single integer seed through named substreams, so
any piece of the output can be regenerated in isolation (the spot-beta path
produced by :func:`simulate_beta` is bitwise identical to the one embedded in
the full :func:`simulate` output for the same seed).
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import solve_discrete_lyapunov
from scipy.signal import lfilter

from .core import PricePanel, TimeGrid

__all__ = [
    "SimulationError",
    "DRBetaParams",
    "JumpSizeSpec",
    "VolParams",
    "NoiseParams",
    "InitialState",
    "SimOutput",
    "NoiseSeries",
    "default_dr_params",
    "default_vol_params",
    "default_noise_params",
    "substream",
    "simulate",
    "simulate_beta",
    "simulate_daily",
    "simulate_noise_series",
    "true_integrated_beta",
    "d_variance_oracle",
]

_DIVERGENCE_LIMIT = 1e6


class SimulationError(RuntimeError):
    """Raised when a simulated path diverges or parameters are inadmissible."""


def substream(seed: int, *names) -> np.random.Generator:
    """Deterministic named RNG substream of a root seed.

    Names (strings or ints) are folded into the spawn key, so
    ``substream(seed, "rep", 7)`` is reproducible in isolation regardless of
    how many other substreams were consumed.
    """
    key = tuple(
        n if isinstance(n, int) else zlib.crc32(str(n).encode()) for n in names
    )
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


# ---------------------------------------------------------------------------
# parameter containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DRBetaParams:
    """Spot-beta dynamics: drift levels, feedback coefficients, and noise.

    ``gamma`` holds the day-lag coefficients on past day-boundary betas
    (order p) and ``alpha`` the coefficients on current/past integrated
    betas (order q, with ``alpha[0]`` the within-day feedback). ``rho`` is
    the correlation between the beta Brownian and the market-price Brownian,
    and ``beta_d`` the loading on market price jumps.
    """

    omega1: float = 0.7
    omega2: float = -0.5
    gamma: tuple[float, ...] = (0.1,)
    alpha: tuple[float, ...] = (0.37,)
    nu: float = 1.5
    rho: float = -0.6
    beta_d: float = 1.5

    def __post_init__(self) -> None:
        object.__setattr__(self, "gamma", tuple(float(x) for x in self.gamma))
        object.__setattr__(self, "alpha", tuple(float(x) for x in self.alpha))
        if sum(abs(x) for x in self.gamma) >= 1.0:
            raise SimulationError(
                f"need sum |gamma_i| < 1, got {sum(abs(x) for x in self.gamma)}"
            )
        if abs(self.rho) > 1.0:
            raise SimulationError(f"|rho| must be <= 1, got {self.rho}")
        if self.nu < 0.0:
            raise SimulationError(f"nu must be >= 0, got {self.nu}")
        if len(self.alpha) < 1:
            raise SimulationError("alpha must have at least one entry")

    @property
    def p(self) -> int:
        return len(self.gamma)

    @property
    def q(self) -> int:
        return len(self.alpha)


@dataclass(frozen=True)
class JumpSizeSpec:
    """Squared jump sizes are ``max(mean + N(0, sd^2), floor)``; the signed
    jump gets a symmetric random sign."""

    mean: float
    sd: float
    floor: float

    def __post_init__(self) -> None:
        if self.floor <= 0:
            raise SimulationError(f"jump-size floor must be > 0, got {self.floor}")


@dataclass(frozen=True)
class VolParams:
    """GARCH-Ito market variance, residual volatility, and jump intensities."""

    omega1_t: float = 3.02e-5
    omega2_t: float = 4.00e-6
    gamma_t: float = 0.35
    alpha_t: float = 0.4
    beta_t: float = 0.1
    nu_t: float = 1e-5
    rho_t: float = -0.424
    q_const: float = 0.012
    lambda1: float = 4.0
    lambda2: float = 5.0
    jump1: JumpSizeSpec = field(default_factory=lambda: JumpSizeSpec(2e-5, 2e-6, 4e-5))
    jump2: JumpSizeSpec = field(default_factory=lambda: JumpSizeSpec(1e-5, 1e-6, 2e-5))

    def __post_init__(self) -> None:
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise SimulationError("jump intensities must be >= 0")
        if self.q_const < 0:
            raise SimulationError("q_const must be >= 0")
        if abs(self.rho_t) > 1:
            raise SimulationError(f"|rho_t| must be <= 1, got {self.rho_t}")


@dataclass(frozen=True)
class NoiseParams:
    """Diurnal noise scales (OU) and the serially dependent noise core (VAR(1)).

    The two noise-scale processes mean-revert at speed ``mean_rev`` towards
    ``s_a * (1 + diurnal_amp * cos(2 pi t))`` and load on the price Brownians
    through ``mix1``/``mix2`` (per-unit ``s_a`` loadings on (dB, dW)). The
    noise core is a bivariate AR(1) with diagonal coefficient ``ar_coeff``
    and Gaussian innovations.
    """

    mean_rev: float = 10.0
    s1: float = 3.440e-4
    s2: float = 1.151e-3
    diurnal_amp: float = 0.1
    ar_coeff: float = 0.8
    innov_cov: tuple[tuple[float, float], tuple[float, float]] = (
        (0.360, 0.168),
        (0.168, 0.360),
    )
    mix1: tuple[float, float] = (1.0, 0.0)
    mix2: tuple[float, float] = (0.6, 0.8)

    def __post_init__(self) -> None:
        if abs(self.ar_coeff) >= 1.0:
            raise SimulationError(
                f"AR coefficient spectral radius must be < 1, got {self.ar_coeff}"
            )
        cov = np.asarray(self.innov_cov, dtype=float)
        if cov.shape != (2, 2) or not np.allclose(cov, cov.T):
            raise SimulationError("innov_cov must be a symmetric 2x2 matrix")
        eig = np.linalg.eigvalsh(cov)
        if eig.min() < -1e-12:
            raise SimulationError(f"innov_cov must be PSD, eigenvalues {eig}")

    def innov_cov_array(self) -> np.ndarray:
        return np.asarray(self.innov_cov, dtype=float)

    def stationary_cov(self) -> np.ndarray:
        """Stationary covariance of the AR(1) noise core (Lyapunov solve)."""
        a = np.eye(2) * self.ar_coeff
        return solve_discrete_lyapunov(a, self.innov_cov_array())


@dataclass(frozen=True)
class InitialState:
    beta0: float = 2.16
    sigma2_0: float = 3.12e-5
    x1_0: float = 16.0
    x2_0: float = 10.0


def default_dr_params() -> DRBetaParams:
    """Spot-beta parameters of the packaged Monte Carlo configuration."""
    return DRBetaParams()


def default_vol_params() -> VolParams:
    return VolParams()


def default_noise_params() -> NoiseParams:
    return NoiseParams()


@dataclass(frozen=True)
class SimOutput:
    """One simulated panel with its latent ground truth."""

    latent: PricePanel
    observed: PricePanel
    spot_beta: np.ndarray
    true_ibeta: np.ndarray
    true_h: np.ndarray
    seed: int
    jump_counts: tuple[int, int] = (0, 0)
    clamp_counts: dict = field(default_factory=dict)


@dataclass(frozen=True)
class NoiseSeries:
    eps: np.ndarray  # (length, 2)
    theta: np.ndarray  # (length, 2) noise-scale paths
    chi: np.ndarray  # (length, 2) AR(1) core
    clamp_count: int = 0


# ---------------------------------------------------------------------------
# inner helpers
# ---------------------------------------------------------------------------


def _ar1_day(coef: float, x: np.ndarray, y0: float) -> np.ndarray:
    """Solve y[j+1] = coef * y[j] + x[j] with y[0] = y0; returns y[1:]."""
    zi = np.array([coef * y0])
    out, _ = lfilter([1.0], [1.0, -coef], x, zi=zi)
    return out


def _mixing_loadings(rho: float, rho_t: float) -> tuple[float, float, float]:
    """Loadings building dZ and dBtilde from (dB, xi1, xi2) so that
    corr(Z,B)=rho, corr(Btilde,B)=rho_t, corr(Z,W)=corr(Btilde,W)=corr(Z,Btilde)=0."""
    c_z = math.sqrt(max(0.0, 1.0 - rho * rho))
    if c_z == 0.0:
        if rho_t != 0.0:
            raise SimulationError(
                "rho = +/-1 together with rho_t != 0 makes the orthogonality "
                "conditions unsatisfiable"
            )
        c1 = 0.0
    else:
        c1 = -rho * rho_t / c_z
    rest = 1.0 - rho_t * rho_t - c1 * c1
    if rest < -1e-12:
        raise SimulationError(
            f"correlation pair rho={rho}, rho_t={rho_t} is not jointly admissible"
        )
    c2 = math.sqrt(max(0.0, rest))
    return c_z, c1, c2


class _BetaDriftState:
    """Day-lag buffers entering the beta drift: past day-boundary betas
    (``beta_lags[0]`` is always the current day's start, which also anchors
    the linear pull term) and past integrated betas for lags ``j >= 2``.
    Missing history is backfilled with the initial beta level."""

    def __init__(self, dr: DRBetaParams, beta0: float) -> None:
        self.dr = dr
        self.beta_lags = [beta0] * max(dr.p, 1)
        self.ibeta_lags = [beta0] * max(dr.q - 1, 0)  # Ibeta_{n-1}, ...

    def drift_terms(self) -> tuple[float, float]:
        """(A, B): quadratic-term level and linear pull level for the day."""
        dr = self.dr
        a = dr.omega1
        a += sum(g * b for g, b in zip(dr.gamma, self.beta_lags))
        for j in range(2, dr.q + 1):
            a += dr.alpha[j - 1] * self.ibeta_lags[j - 2]
        b = dr.omega2 + self.beta_lags[0]
        return a, b

    def push(self, beta_end: float, ibeta: float) -> None:
        keep = max(self.dr.p, 1)
        self.beta_lags = ([beta_end] + self.beta_lags)[:keep]
        if self.ibeta_lags:
            self.ibeta_lags = [ibeta] + self.ibeta_lags[:-1]


def _h_exact(dr: DRBetaParams, state: _BetaDriftState) -> float:
    """Conditional one-day-ahead expected integrated beta from the current
    day-start state (exact under the spot dynamics)."""
    r1, r2, r3 = _rho_coeffs(dr.alpha[0])
    a, b = state.drift_terms()
    return r1 * state.beta_lags[0] - r2 * b + 2.0 * r3 * a


def _rho_coeffs(a1: float) -> tuple[float, float, float]:
    """The exponential moment coefficients (e^a - 1)/a and its two higher
    analogues, with a Taylor branch near zero."""
    if a1 == 0.0:
        raise SimulationError("alpha_1 = 0 is singular for the moment coefficients")
    if abs(a1) < 1e-4:
        r1 = 1.0 + a1 / 2.0 + a1 * a1 / 6.0 + a1**3 / 24.0
        r2 = 0.5 + a1 / 6.0 + a1 * a1 / 24.0 + a1**3 / 120.0
        r3 = 1.0 / 6.0 + a1 / 24.0 + a1 * a1 / 120.0 + a1**3 / 720.0
        return r1, r2, r3
    e = math.exp(a1)
    r1 = (e - 1.0) / a1
    r2 = (e - 1.0 - a1) / a1**2
    r3 = (e - 1.0 - a1 - a1 * a1 / 2.0) / a1**3
    return r1, r2, r3


def _beta_day(
    dr: DRBetaParams,
    state: _BetaDriftState,
    beta0: float,
    dz: np.ndarray,
    dt: float,
) -> np.ndarray:
    """One day of the spot-beta Euler recursion; returns the path including
    both endpoints (length len(dz) + 1)."""
    msteps = dz.shape[0]
    s = np.arange(msteps) * dt  # left endpoints within the day
    ztil = np.concatenate(([0.0], np.cumsum(dz[:-1])))
    a, b = state.drift_terms()
    drive = (2.0 * s * a - b - dr.nu * ztil) * dt + dr.nu * (1.0 - s) * dz
    coef = 1.0 + dr.alpha[0] * dt
    path = np.empty(msteps + 1)
    path[0] = beta0
    path[1:] = _ar1_day(coef, drive, beta0)
    return path


# ---------------------------------------------------------------------------
# public simulators
# ---------------------------------------------------------------------------


def simulate_beta(
    dr: DRBetaParams,
    grid: TimeGrid,
    seed: int,
    refine: int = 1,
    init: Optional[InitialState] = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Simulate only the spot-beta path on the (refined) grid.

    Returns ``(beta_path, true_ibeta, true_h)`` where ``beta_path`` has
    ``n_days * m * refine + 1`` points, ``true_ibeta`` the per-day left
    Riemann sums, and ``true_h`` the per-day conditional means evaluated
    exactly from each day-start state. Bitwise identical to the beta path
    embedded in :func:`simulate` for the same seed and grid.
    """
    init = init or InitialState()
    rng = substream(seed, "brownian")
    msteps = grid.m * refine
    dt = 1.0 / msteps
    sqdt = math.sqrt(dt)
    c_z = math.sqrt(max(0.0, 1.0 - dr.rho**2))

    state = _BetaDriftState(dr, init.beta0)
    beta_path = np.empty(grid.n_days * msteps + 1)
    beta_path[0] = init.beta0
    ibeta = np.empty(grid.n_days)
    h_true = np.empty(grid.n_days)
    for day in range(grid.n_days):
        shocks = rng.standard_normal((4, msteps)) * sqdt
        dz = dr.rho * shocks[0] + c_z * shocks[1]
        h_true[day] = _h_exact(dr, state)
        beta0 = beta_path[day * msteps]
        path = _beta_day(dr, state, beta0, dz, dt)
        if not np.isfinite(path).all() or np.abs(path).max() > _DIVERGENCE_LIMIT:
            raise SimulationError(f"spot beta diverged on day {day + 1}")
        beta_path[day * msteps + 1 : (day + 1) * msteps + 1] = path[1:]
        ibeta[day] = path[:-1].mean()
        state.push(path[-1], ibeta[day])
    return beta_path, ibeta, h_true


def simulate(
    dr: DRBetaParams,
    vol: VolParams,
    noise: NoiseParams,
    grid: TimeGrid,
    seed: int,
    init: Optional[InitialState] = None,
    refine: int = 1,
) -> SimOutput:
    """Full data-generating process: prices, volatility, jumps, and noise.

    One Euler step per tick divided by ``refine``. Jumps arrive by per-step
    Bernoulli thinning with probability ``lambda * dt``; squared jump sizes
    are floored Gaussians with random signs. The microstructure noise
    ``eps = theta * chi`` is attached at observation ticks only, with the
    noise-scale OU processes clamped at zero (events counted).
    """
    if grid.m < 100:
        raise SimulationError(f"need m >= 100, got {grid.m}")
    if refine < 1:
        raise SimulationError(f"refine must be >= 1, got {refine}")
    init = init or InitialState()

    rng_path = substream(seed, "brownian")
    rng_jump = substream(seed, "jumps")
    rng_noise = substream(seed, "noise")

    msteps = grid.m * refine
    dt = 1.0 / msteps
    sqdt = math.sqrt(dt)
    c_z, c1, c2 = _mixing_loadings(dr.rho, vol.rho_t)
    n_pts = grid.n_days * grid.m + 1

    # per-tick noise core over the whole panel (one stationary chain)
    chi = _chi_chain(noise, n_pts, rng_noise)

    x1 = np.empty(n_pts)
    x2 = np.empty(n_pts)
    beta_ticks = np.empty(n_pts)
    theta = np.empty((n_pts, 2))
    x1[0], x2[0] = init.x1_0, init.x2_0
    beta_ticks[0] = init.beta0
    mu0 = 1.0 + noise.diurnal_amp  # cos(0) = 1
    theta[0] = (noise.s1 * mu0, noise.s2 * mu0)

    state = _BetaDriftState(dr, init.beta0)
    ibeta = np.empty(grid.n_days)
    h_true = np.empty(grid.n_days)
    sigma2_day = init.sigma2_0
    beta_day0 = init.beta0
    x1_level, x2_level = init.x1_0, init.x2_0
    theta_level = np.array([noise.s1 * mu0, noise.s2 * mu0])
    jump_counts = [0, 0]
    clamps = {"sigma2": 0, "theta": 0}

    for day in range(grid.n_days):
        shocks = rng_path.standard_normal((4, msteps)) * sqdt
        db, xi1, xi2, dw = shocks
        dz = dr.rho * db + c_z * xi1
        dbt = vol.rho_t * db + c1 * xi1 + c2 * xi2

        # jumps: Bernoulli thinning, floored Gaussian squared sizes, random signs
        n1 = rng_jump.random(msteps) < vol.lambda1 * dt
        n2 = rng_jump.random(msteps) < vol.lambda2 * dt
        j1 = _jump_sizes(vol.jump1, msteps, rng_jump) * n1
        j2 = _jump_sizes(vol.jump2, msteps, rng_jump) * n2
        jump_counts[0] += int(n1.sum())
        jump_counts[1] += int(n2.sum())

        h_true[day] = _h_exact(dr, state)
        beta_path = _beta_day(dr, state, beta_day0, dz, dt)

        sigma2_path, nclamp = _sigma2_day(vol, sigma2_day, dz=dbt, db_other=db,
                                          jumps_sq=j1 * j1, dt=dt)
        clamps["sigma2"] += nclamp

        sig = np.sqrt(sigma2_path[:-1])
        bl = beta_path[:-1]
        dx1c = sig * db
        dx1 = dx1c + j1
        dx2 = bl * dx1c + dr.beta_d * j1 + vol.q_const * dw + j2

        if (np.abs(beta_path).max() > _DIVERGENCE_LIMIT
                or sigma2_path.max() > _DIVERGENCE_LIMIT
                or not np.isfinite(beta_path).all()):
            raise SimulationError(f"path diverged on day {day + 1}")

        x1_day = x1_level + np.cumsum(dx1)
        x2_day = x2_level + np.cumsum(dx2)

        # noise scales at tick resolution (aggregate refined increments)
        db_tick = db.reshape(grid.m, refine).sum(axis=1)
        dw_tick = dw.reshape(grid.m, refine).sum(axis=1)
        tick_times = day + np.arange(grid.m) / grid.m  # left endpoints
        theta_day, tclamp = _theta_day(noise, theta_level, db_tick, dw_tick,
                                       tick_times, 1.0 / grid.m)
        clamps["theta"] += tclamp

        ibeta[day] = bl.mean()
        state.push(beta_path[-1], ibeta[day])

        lo = day * grid.m
        sel = np.arange(refine - 1, msteps, refine)
        x1[lo + 1 : lo + grid.m + 1] = x1_day[sel]
        x2[lo + 1 : lo + grid.m + 1] = x2_day[sel]
        beta_ticks[lo + 1 : lo + grid.m + 1] = beta_path[1:][sel]
        theta[lo + 1 : lo + grid.m + 1] = theta_day

        beta_day0 = beta_path[-1]
        sigma2_day = sigma2_path[-1]
        x1_level, x2_level = x1_day[-1], x2_day[-1]
        theta_level = theta_day[-1].copy()

    eps = theta * chi
    latent = PricePanel(grid, x1, x2, kind="latent")
    observed = PricePanel(grid, x1 + eps[:, 0], x2 + eps[:, 1], kind="observed")
    return SimOutput(
        latent=latent,
        observed=observed,
        spot_beta=beta_ticks,
        true_ibeta=ibeta,
        true_h=h_true,
        seed=seed,
        jump_counts=(jump_counts[0], jump_counts[1]),
        clamp_counts=clamps,
    )


def _jump_sizes(spec: JumpSizeSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    sq = np.maximum(spec.mean + spec.sd * rng.standard_normal(n), spec.floor)
    signs = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    return signs * np.sqrt(sq)


def _sigma2_day(
    vol: VolParams,
    sigma2_0: float,
    dz: np.ndarray,
    db_other: np.ndarray,
    jumps_sq: np.ndarray,
    dt: float,
) -> tuple[np.ndarray, int]:
    """GARCH-Ito variance over one day. ``dz`` is the variance Brownian.

    The linear recursion is solved in one filtering pass; if the path dips
    below zero it is re-run stepwise with a clamp at zero (rare).
    """
    msteps = dz.shape[0]
    s = np.arange(msteps) * dt
    ztil = np.concatenate(([0.0], np.cumsum(dz[:-1])))
    a = vol.omega1_t + sigma2_0
    b = vol.omega2_t + sigma2_0
    drive = (
        (2.0 * vol.gamma_t * s * a - b - vol.nu_t * ztil * ztil) * dt
        + 2.0 * vol.nu_t * (1.0 - s) * ztil * dz
        + vol.beta_t * jumps_sq
    )
    coef = 1.0 + vol.alpha_t * dt
    path = np.empty(msteps + 1)
    path[0] = sigma2_0
    path[1:] = _ar1_day(coef, drive, sigma2_0)
    if path.min() >= 0.0:
        return path, 0
    nclamp = 0
    level = sigma2_0
    for j in range(msteps):
        level = coef * level + drive[j]
        if level < 0.0:
            level = 0.0
            nclamp += 1
        path[j + 1] = level
    return path, nclamp


def _theta_day(
    noise: NoiseParams,
    theta0: np.ndarray,
    db: np.ndarray,
    dw: np.ndarray,
    times: np.ndarray,
    dt: float,
) -> tuple[np.ndarray, int]:
    """Noise-scale OU pair over one day at tick resolution, clamped at zero."""
    mu = 1.0 + noise.diurnal_amp * np.cos(2.0 * math.pi * times)
    coef = 1.0 - noise.mean_rev * dt
    nclamp = 0
    out = np.empty((db.shape[0], 2))
    for a, (wb, ww) in enumerate((noise.mix1, noise.mix2)):
        scale = noise.s1 if a == 0 else noise.s2
        drive = noise.mean_rev * scale * mu * dt + scale * (wb * db + ww * dw)
        path = _ar1_day(coef, drive, float(theta0[a]))
        if path.min() < 0.0:
            level = float(theta0[a])
            for j in range(db.shape[0]):
                level = coef * level + drive[j]
                if level < 0.0:
                    level = 0.0
                    nclamp += 1
                path[j] = level
        out[:, a] = path
    return out, nclamp


def _chi_chain(noise: NoiseParams, length: int, rng: np.random.Generator) -> np.ndarray:
    """Stationary bivariate AR(1) noise core; the first row is the
    stationary draw itself."""
    cov = noise.innov_cov_array()
    chol = np.linalg.cholesky(cov + 1e-18 * np.eye(2))
    stat = noise.stationary_cov()
    chol0 = np.linalg.cholesky(stat + 1e-18 * np.eye(2))
    chi0 = chol0 @ rng.standard_normal(2)
    innov = rng.standard_normal((length - 1, 2)) @ chol.T
    out = np.empty((length, 2))
    out[0] = chi0
    for a in range(2):
        out[1:, a] = _ar1_day(noise.ar_coeff, innov[:, a], float(chi0[a]))
    return out


def simulate_noise_series(
    noise: NoiseParams, length: int, seed: int, m: int = 23400
) -> NoiseSeries:
    """Standalone noise simulator: ``eps = theta * chi`` at tick resolution.

    The noise core starts from its stationary distribution; the scale
    processes use independent Brownians (no price coupling here) and are
    clamped at zero with events counted.
    """
    if length < 1:
        raise SimulationError(f"length must be >= 1, got {length}")
    rng = substream(seed, "noise-standalone")
    chi = _chi_chain(noise, length, rng)
    dt = 1.0 / m
    sq = math.sqrt(dt)
    db = rng.standard_normal(length) * sq
    dw = rng.standard_normal(length) * sq
    times = np.arange(length) * dt
    mu0 = 1.0 + noise.diurnal_amp
    theta0 = np.array([noise.s1 * mu0, noise.s2 * mu0])
    theta, nclamp = _theta_day(noise, theta0, db, dw, times, dt)
    theta = np.vstack([theta0, theta[:-1]])
    return NoiseSeries(eps=theta * chi, theta=theta, chi=chi, clamp_count=nclamp)


def simulate_daily(
    dr: DRBetaParams,
    n_days: int,
    seed: int,
    init: Optional[InitialState] = None,
    burn_in: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact day-scale sampler of (integrated beta, conditional mean) pairs.

    The day-boundary state recursion is exact: each day's integrated beta is
    its conditional mean plus an independent Gaussian innovation whose
    variance is :func:`d_variance_oracle`, and the day-boundary beta follows
    the day-scale closed form. Useful as an Euler-free oracle and a fast
    source of measurement-error-free integrated betas for model fitting.
    """
    init = init or InitialState()
    rng = substream(seed, "daily")
    sd = math.sqrt(d_variance_oracle(dr.alpha[0], dr.nu))
    state = _BetaDriftState(dr, init.beta0)
    omega = dr.omega1 - dr.omega2
    total = n_days + burn_in
    ibeta = np.empty(total)
    h = np.empty(total)
    for day in range(total):
        h[day] = _h_exact(dr, state)
        ibeta[day] = h[day] + sd * rng.standard_normal()
        beta_end = (
            omega
            + sum(g * b for g, b in zip(dr.gamma, state.beta_lags))
            + dr.alpha[0] * ibeta[day]
            + sum(
                dr.alpha[j - 1] * state.ibeta_lags[j - 2]
                for j in range(2, dr.q + 1)
            )
        )
        state.push(beta_end, ibeta[day])
    return ibeta[burn_in:], h[burn_in:]


def true_integrated_beta(path: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Per-day left-endpoint Riemann sums of a spot path on the tick grid."""
    path = np.asarray(path, dtype=float)
    if path.shape != (grid.n_points,):
        raise ValueError(
            f"path length {path.shape} does not match grid ({grid.n_points},)"
        )
    days = path[:-1].reshape(grid.n_days, grid.m)
    return days.mean(axis=1)


def d_variance_oracle(
    alpha1: float, nu: float, quadrature_points: int = 4097
) -> float:
    """Day variance of the martingale innovation in the integrated beta.

    Computed by quadrature from the innovation's stochastic-integral
    representation (Ito isometry):

        Var = nu^2 * alpha1^-4 * int_0^1 F(t)^2 dt,
        F(t) = alpha1 * (1 - t - 1/alpha1) * exp(alpha1 * (1 - t)) + 1.

    Rejects ``alpha1 = 0`` (the closed form is singular there; the limit is
    ``nu^2 / 20``, not implemented).
    """
    if alpha1 == 0.0:
        raise ValueError("alpha1 = 0 is singular for the variance integral")
    t = np.linspace(0.0, 1.0, int(quadrature_points))
    f = alpha1 * (1.0 - t - 1.0 / alpha1) * np.exp(alpha1 * (1.0 - t)) + 1.0
    return float(nu * nu * alpha1**-4 * simpson(f * f, x=t))
