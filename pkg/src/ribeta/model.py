"""Parametric layer: day-scale parameter mapping, conditional-mean recursion,
quasi-maximum likelihood fitting, asymptotic inference, order selection,
forecasting, and evaluation metrics.

The day-scale model treats the realized integrated beta series as the
observable proxy for its conditional mean ``h``, which follows

    h_n = omega_g + sum_i gamma_i h_{n-i} + sum_j alpha_g_j RIB_{n-j},

and fits ``theta = (omega_g, gamma_1..p, alpha_g_1..(p v q))`` by minimizing
the mean squared one-step residual. :func:`map_params` converts the
continuous-time spot dynamics into these day-scale coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter, lfiltic
from scipy.stats import norm as _normal

from .sim import DRBetaParams, _rho_coeffs

__all__ = [
    "ModelError",
    "GarchParams",
    "FitResult",
    "FitOptions",
    "map_params",
    "h_recursion",
    "h_gradient",
    "quasi_likelihood",
    "fit",
    "avar_estimate",
    "z_statistics",
    "confidence_intervals",
    "bic_select",
    "forecast_h",
    "ArmaFit",
    "arma_forecaster",
    "evaluate",
    "ResidualDiagnostic",
    "residual_acf_diagnostic",
]


class ModelError(ValueError):
    """Raised for inadmissible parameters or degenerate fitting problems."""


@dataclass(frozen=True)
class GarchParams:
    """Day-scale coefficients: intercept, conditional-mean lags (p), and
    realized-beta lags (p v q)."""

    p: int
    q: int
    omega_g: float
    gamma: tuple[float, ...] = ()
    alpha_g: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "gamma", tuple(float(x) for x in self.gamma))
        object.__setattr__(self, "alpha_g", tuple(float(x) for x in self.alpha_g))
        if len(self.gamma) != self.p:
            raise ModelError(f"gamma must have length p={self.p}")
        if len(self.alpha_g) != max(self.p, self.q):
            raise ModelError(f"alpha_g must have length p v q = {max(self.p, self.q)}")
        viol = self.constraint_violation()
        if viol > 0.0:
            raise ModelError(
                f"parameters outside the stationarity region (violation {viol:.3g}): "
                f"gamma={self.gamma}, alpha_g={self.alpha_g}"
            )

    @property
    def r(self) -> int:
        """Number of lags entering the recursion."""
        return max(self.p, self.q)

    @property
    def k(self) -> int:
        """Number of free coefficients."""
        return 1 + self.p + max(self.p, self.q)

    def constraint_violation(self) -> float:
        v1 = sum(abs(g) for g in self.gamma) - 1.0
        both = [
            (self.gamma[i] if i < self.p else 0.0) + self.alpha_g[i]
            for i in range(max(self.p, self.q))
        ]
        v2 = sum(abs(x) for x in both) - 1.0
        return max(0.0, v1, v2)

    def to_vector(self) -> np.ndarray:
        return np.array((self.omega_g,) + self.gamma + self.alpha_g)

    @classmethod
    def from_vector(cls, vec: np.ndarray, p: int, q: int) -> "GarchParams":
        vec = np.asarray(vec, dtype=float)
        r = max(p, q)
        if vec.shape[0] != 1 + p + r:
            raise ModelError(f"vector length {vec.shape[0]} != {1 + p + r}")
        return cls(p=p, q=q, omega_g=float(vec[0]),
                   gamma=tuple(vec[1 : 1 + p]), alpha_g=tuple(vec[1 + p :]))

    def names(self) -> list[str]:
        return (["omega_g"]
                + [f"gamma{i+1}" for i in range(self.p)]
                + [f"alpha_g{j+1}" for j in range(max(self.p, self.q))])


@dataclass(frozen=True)
class FitResult:
    theta_hat: GarchParams
    loglik: float
    vhat: np.ndarray
    z_stats: np.ndarray
    p_values: np.ndarray
    n_used: int
    converged: bool
    multistart_spread: float
    condition_number: float = math.nan
    init: object = "mean"


def map_params(dr: DRBetaParams) -> GarchParams:
    """Map continuous-time spot-beta parameters to the day-scale coefficients.

    Evaluates the exponential moment coefficients (with a guarded Taylor
    branch near ``alpha_1 = 0``) and the intercept / lag-coefficient
    formulas; the conditional-mean lag coefficients pass through unchanged.
    Raises if ``alpha_1 = 0`` or if the result leaves the stationarity
    region.
    """
    a1 = dr.alpha[0]
    if a1 == 0.0:
        raise ModelError("alpha_1 = 0 is singular for the day-scale mapping")
    r1, r2, r3 = _rho_coeffs(a1)
    p, q = dr.p, dr.q
    omega = dr.omega1 - dr.omega2
    omega_g = (r1 - r2 + 2.0 * r3) * omega + (2.0 * r3 - r2) * (
        1.0 - sum(dr.gamma)
    ) * dr.omega2
    alpha_g = []
    for i in range(1, max(p, q) + 1):
        val = 0.0
        if i <= p:
            val += 2.0 * r3 * dr.gamma[i - 1] * a1
        if i <= q:
            val += (r1 - r2) * dr.alpha[i - 1]
        if i <= q - 1:
            val += 2.0 * r3 * dr.alpha[i]
        alpha_g.append(val)
    try:
        return GarchParams(p=p, q=q, omega_g=omega_g, gamma=dr.gamma,
                           alpha_g=tuple(alpha_g))
    except ModelError as exc:
        raise ModelError(f"mapped parameters are non-stationary: {exc}") from exc


def _resolve_init(init, rib: np.ndarray) -> float:
    if init == "mean":
        return float(np.mean(rib))
    if init == "zero":
        return 0.0
    if isinstance(init, (int, float)):
        return float(init)
    raise ModelError(f"unknown init policy {init!r}")


def h_recursion(theta: GarchParams, ibeta: np.ndarray, init="mean") -> np.ndarray:
    """Conditional-mean series; entry ``i`` uses only strictly earlier data.

    The first ``max(p, q)`` entries follow the initialization policy
    (``"mean"`` — the sample mean of the input series — ``"zero"``, or an
    explicit number).
    """
    y = np.asarray(ibeta, dtype=float)
    if not np.isfinite(y).all():
        raise ModelError("input series contains non-finite values")
    r = theta.r
    n = y.shape[0]
    if n < r + 1:
        raise ModelError(f"series length {n} too short for lag order {r}")
    c0 = _resolve_init(init, y)
    h = np.empty(n)
    h[:r] = c0
    x = np.full(n - r, theta.omega_g)
    for j, a in enumerate(theta.alpha_g, start=1):
        if a != 0.0:
            x += a * y[r - j : n - j]
    if theta.p == 0:
        h[r:] = x
        return h
    a_poly = np.concatenate(([1.0], -np.asarray(theta.gamma)))
    zi = lfiltic([1.0], a_poly, y=[c0] * theta.p)
    h[r:], _ = lfilter([1.0], a_poly, x, zi=zi)
    return h


def h_gradient(theta: GarchParams, ibeta: np.ndarray, init="mean") -> np.ndarray:
    """Exact derivative of the conditional-mean series in each coefficient.

    Differentiates the recursion: the initial values do not depend on theta
    under the supported policies, so the first ``max(p, q)`` rows are zero.
    Returns an array of shape ``(n, k)`` ordered like ``theta.to_vector()``.
    """
    y = np.asarray(ibeta, dtype=float)
    r = theta.r
    n = y.shape[0]
    h = h_recursion(theta, y, init)
    k = theta.k
    out = np.zeros((n, k))
    if theta.p == 0:
        out[r:, 0] = 1.0
        for j in range(1, r + 1):
            out[r:, theta.p + j] = y[r - j : n - j]
        return out
    a_poly = np.concatenate(([1.0], -np.asarray(theta.gamma)))
    zi = np.zeros(theta.p)

    def _filt(x):
        res, _ = lfilter([1.0], a_poly, x, zi=zi)
        return res

    out[r:, 0] = _filt(np.ones(n - r))
    for i in range(1, theta.p + 1):  # d/d gamma_i: driven by h_{n-i}
        out[r:, i] = _filt(h[r - i : n - i])
    for j in range(1, r + 1):  # d/d alpha_g_j: driven by y_{n-j}
        out[r:, theta.p + j] = _filt(y[r - j : n - j])
    return out


def quasi_likelihood(theta: GarchParams, rib: np.ndarray, init="mean") -> float:
    """Negative mean squared one-step residual (larger is better, max 0)."""
    y = np.asarray(rib, dtype=float)
    h = h_recursion(theta, y, init)
    resid = y - h
    return float(-np.mean(resid * resid))


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FitOptions:
    starts: int = 8
    max_iter: int = 4000
    tol: float = 1e-10
    init: object = "mean"
    omega_bounds: tuple[float, float] = (-50.0, 50.0)
    penalty: float = 1e4


_START_GRID = (
    (0.0, 0.2), (0.25, 0.25), (0.5, 0.2), (0.7, 0.1),
    (0.2, 0.5), (0.4, 0.4), (-0.2, 0.3), (0.1, 0.7),
)


def _start_vectors(rib: np.ndarray, p: int, q: int, n_starts: int) -> list[np.ndarray]:
    """Deterministic start grid plus one moment-based start."""
    r = max(p, q)
    mu = float(np.mean(rib))
    starts = []
    for gbar, abar in _START_GRID[:n_starts]:
        vec = np.zeros(1 + p + r)
        if p > 0:
            vec[1] = gbar
        vec[1 + p] = abar if r > 0 else 0.0
        persistence = (vec[1] if p > 0 else 0.0) + (vec[1 + p] if r > 0 else 0.0)
        vec[0] = mu * (1.0 - persistence)
        starts.append(vec)
    # moment-based: lag-1 autocorrelation as total persistence, split evenly
    y = rib - mu
    denom = float(np.dot(y, y))
    rho1 = float(np.dot(y[1:], y[:-1]) / denom) if denom > 0 else 0.0
    rho1 = min(max(rho1, -0.9), 0.9)
    vec = np.zeros(1 + p + r)
    if p > 0 and r > 0:
        vec[1] = rho1 / 2.0
        vec[1 + p] = rho1 / 2.0
    elif r > 0:
        vec[1 + p] = rho1
    elif p > 0:
        vec[1] = rho1
    vec[0] = mu * (1.0 - rho1)
    starts.append(vec)
    return starts


def _project_arrays(
    gamma: np.ndarray, alpha: np.ndarray, p: int, margin: float = 1e-9
) -> tuple[np.ndarray, np.ndarray, float]:
    """Shrink towards the stationarity region; returns the violation size."""
    viol = 0.0
    s1 = float(np.sum(np.abs(gamma)))
    if s1 >= 1.0:
        viol += s1 - 1.0
        gamma = gamma * (1.0 - margin) / s1
    both = alpha.copy()
    both[:p] += gamma
    s2 = float(np.sum(np.abs(both)))
    if s2 >= 1.0:
        viol += s2 - 1.0
        shrink = (1.0 - margin) / s2
        gamma = gamma * shrink
        alpha = alpha * shrink
    return gamma, alpha, viol


def _penalized_objective(vec, rib, p, q, opts: FitOptions) -> float:
    omega = float(vec[0])
    gamma = np.asarray(vec[1 : 1 + p], dtype=float)
    alpha = np.asarray(vec[1 + p :], dtype=float)
    pen = 0.0
    lo, hi = opts.omega_bounds
    omega_eval = min(max(omega, lo), hi)
    pen += (omega - omega_eval) ** 2
    gamma_eval, alpha_eval, viol = _project_arrays(gamma, alpha, p)
    pen += viol * viol
    # evaluate at the projected point so the surface stays informative and
    # finite outside the feasible region
    theta = _unchecked_params(p, q, omega_eval, gamma_eval, alpha_eval)
    val = -quasi_likelihood(theta, rib, opts.init)
    if not math.isfinite(val):
        return 1e12
    return val + opts.penalty * pen


def _unchecked_params(p, q, omega, gamma, alpha) -> GarchParams:
    obj = object.__new__(GarchParams)
    object.__setattr__(obj, "p", p)
    object.__setattr__(obj, "q", q)
    object.__setattr__(obj, "omega_g", float(omega))
    object.__setattr__(obj, "gamma", tuple(float(x) for x in gamma))
    object.__setattr__(obj, "alpha_g", tuple(float(x) for x in alpha))
    return obj


def fit(
    rib: np.ndarray,
    p: int = 1,
    q: int = 1,
    options: Optional[FitOptions] = None,
) -> FitResult:
    """Quasi-maximum likelihood fit by penalized Nelder-Mead multi-start.

    Runs the deterministic start grid plus a moment-based start, polishes
    the best point with a restart, and reports ``converged=False`` when the
    final objectives of the starts disagree by more than ``1e-6`` relative
    to the best.
    """
    opts = options or FitOptions()
    y = np.asarray(rib, dtype=float)
    if not np.isfinite(y).all():
        raise ModelError("series contains non-finite values")
    r = max(p, q)
    k = 1 + p + r
    if y.shape[0] < 10 * k:
        raise ModelError(f"need at least {10 * k} observations, got {y.shape[0]}")
    if float(np.var(y)) == 0.0:
        raise ModelError("constant series: parameters are not identified")

    results = []
    for x0 in _start_vectors(y, p, q, opts.starts):
        res = minimize(
            _penalized_objective, x0, args=(y, p, q, opts),
            method="Nelder-Mead",
            options={"maxiter": opts.max_iter, "xatol": 1e-8, "fatol": opts.tol,
                     "adaptive": k > 4},
        )
        results.append(res)
    if not results:
        raise ModelError("no feasible starting point")
    finals = np.array([res.fun for res in results])
    best = results[int(np.argmin(finals))]
    polish = minimize(
        _penalized_objective, best.x, args=(y, p, q, opts),
        method="Nelder-Mead",
        options={"maxiter": opts.max_iter, "xatol": 1e-10, "fatol": opts.tol / 10,
                 "adaptive": k > 4},
    )
    if polish.fun <= best.fun:
        best = polish
    spread = float(finals.max() - min(finals.min(), best.fun))
    converged = bool(best.success) and spread <= 1e-6 * max(abs(best.fun), 1e-12)

    vec = best.x.copy()
    # pull marginal boundary violations back inside the admissible region
    theta = _project_feasible(vec, p, q)
    loglik = quasi_likelihood(theta, y, opts.init)

    vhat, cond = _vhat_or_nan(theta, y, opts.init)
    z, pv = _z_from_vhat(theta, vhat, y.shape[0])
    return FitResult(
        theta_hat=theta,
        loglik=loglik,
        vhat=vhat,
        z_stats=z,
        p_values=pv,
        n_used=int(y.shape[0]),
        converged=converged,
        multistart_spread=spread,
        condition_number=cond,
        init=opts.init,
    )


def _project_feasible(vec: np.ndarray, p: int, q: int, margin: float = 1e-9) -> GarchParams:
    omega = float(vec[0])
    gamma = np.asarray(vec[1 : 1 + p], dtype=float)
    alpha = np.asarray(vec[1 + p :], dtype=float)
    s1 = np.sum(np.abs(gamma))
    if s1 >= 1.0:
        gamma *= (1.0 - margin) / s1
    both = alpha.copy()
    both[:p] += gamma
    s2 = np.sum(np.abs(both))
    if s2 >= 1.0:
        shrink = (1.0 - margin) / s2
        gamma *= shrink
        alpha *= shrink
    return GarchParams(p=p, q=q, omega_g=omega, gamma=tuple(gamma),
                       alpha_g=tuple(alpha))


def _vhat_or_nan(theta: GarchParams, y: np.ndarray, init) -> tuple[np.ndarray, float]:
    try:
        vhat, cond = avar_estimate(theta, y, init, return_cond=True)
        return vhat, cond
    except ModelError:
        k = theta.k
        return np.full((k, k), np.nan), math.inf


def _z_from_vhat(theta: GarchParams, vhat: np.ndarray, n: int,
                 null: Optional[np.ndarray] = None):
    k = theta.k
    if not np.isfinite(vhat).all():
        return np.full(k, np.nan), np.full(k, np.nan)
    dev = theta.to_vector() - (null if null is not None else 0.0)
    try:
        root_inv = _sym_inv_sqrt(vhat)
    except ModelError:
        return np.full(k, np.nan), np.full(k, np.nan)
    z = math.sqrt(n) * root_inv @ dev
    pv = 2.0 * _normal.sf(np.abs(z))
    return z, pv


def _sym_inv_sqrt(mat: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (mat + mat.T))
    if w.min() <= 0.0:
        raise ModelError(f"covariance not positive definite (eigenvalues {w})")
    return v @ np.diag(w**-0.5) @ v.T


def avar_estimate(
    theta: GarchParams, rib: np.ndarray, init="mean", return_cond: bool = False
):
    """Sandwich-free asymptotic covariance: mean squared residual times the
    inverse Gram matrix of the conditional-mean derivatives.

    The derivative system is exact (recursive); a near-singular Gram matrix
    raises with the most collinear coefficient pair named.
    """
    y = np.asarray(rib, dtype=float)
    grad = h_gradient(theta, y, init)
    h = h_recursion(theta, y, init)
    resid = y - h
    sigma2 = float(np.mean(resid * resid))
    gram = grad.T @ grad / y.shape[0]
    cond = float(np.linalg.cond(gram))
    if not np.isfinite(cond) or cond > 1e12:
        names = theta.names()
        corr = gram / np.sqrt(np.outer(np.diag(gram), np.diag(gram)) + 1e-300)
        np.fill_diagonal(corr, 0.0)
        i, j = np.unravel_index(np.argmax(np.abs(corr)), corr.shape)
        raise ModelError(
            f"derivative Gram matrix is near-singular (cond {cond:.3g}); "
            f"most collinear pair: {names[i]}, {names[j]}"
        )
    vhat = sigma2 * np.linalg.inv(gram)
    vhat = 0.5 * (vhat + vhat.T)
    if return_cond:
        return vhat, cond
    return vhat


def z_statistics(
    fit_result: FitResult, null: Optional[Sequence[float]] = None
) -> tuple[np.ndarray, np.ndarray]:
    """Studentized coefficient vector against a null (default zero) and
    two-sided normal p-values; uses the symmetric matrix square root.
    Raises on a non-positive-definite covariance."""
    theta = fit_result.theta_hat
    vhat = fit_result.vhat
    if not np.isfinite(vhat).all():
        raise ModelError("fit has no valid covariance estimate")
    null_vec = np.zeros(theta.k) if null is None else np.asarray(null, dtype=float)
    dev = theta.to_vector() - null_vec
    z = math.sqrt(fit_result.n_used) * _sym_inv_sqrt(vhat) @ dev
    return z, 2.0 * _normal.sf(np.abs(z))


def confidence_intervals(fit_result: FitResult, level: float = 0.95) -> np.ndarray:
    """Per-coefficient normal intervals from the covariance diagonal."""
    theta = fit_result.theta_hat.to_vector()
    se = np.sqrt(np.diag(fit_result.vhat) / fit_result.n_used)
    zq = _normal.ppf(0.5 + level / 2.0)
    return np.column_stack([theta - zq * se, theta + zq * se])


def bic_select(
    rib: np.ndarray,
    max_p: int = 3,
    max_q: int = 3,
    options: Optional[FitOptions] = None,
) -> tuple[int, int, dict]:
    """Order selection over the (p, q) grid by Gaussian pseudo-BIC.

    ``BIC = n log(RSS / n) + k log n`` with ``k = 1 + p + (p v q)``. Ties
    break towards smaller ``p + q``, then smaller ``p``. Failed cells are
    recorded in the table and skipped.
    """
    y = np.asarray(rib, dtype=float)
    n = y.shape[0]
    table: dict[tuple[int, int], float] = {}
    failures: dict[tuple[int, int], str] = {}
    best = None
    for p in range(max_p + 1):
        for q in range(max_q + 1):
            try:
                res = fit(y, p, q, options)
                rss = -res.loglik * n
                k = 1 + p + max(p, q)
                bic = n * math.log(max(rss / n, 1e-300)) + k * math.log(n)
            except ModelError as exc:
                failures[(p, q)] = str(exc)
                continue
            table[(p, q)] = bic
            key = (bic, p + q, p)
            if best is None or key < best[0]:
                best = (key, (p, q))
    if best is None:
        raise ModelError(f"every (p, q) cell failed: {failures}")
    table_out = {"bic": table, "failures": failures}
    return best[1][0], best[1][1], table_out


def forecast_h(
    theta: GarchParams, rib_history: np.ndarray, init="mean", horizon: int = 1
) -> float:
    """Conditional-mean forecast ``horizon`` days ahead.

    One-step extends the recursion; multi-step substitutes the forecasted
    conditional mean for the unobserved future realized betas.
    """
    if horizon < 1:
        raise ModelError(f"horizon must be >= 1, got {horizon}")
    y = np.asarray(rib_history, dtype=float)
    r = theta.r
    if y.shape[0] < r:
        raise ModelError(f"history length {y.shape[0]} shorter than lag order {r}")
    h = h_recursion(theta, y, init) if y.shape[0] > r else None
    h_hist = list(h) if h is not None else [_resolve_init(init, y)] * r
    y_ext = list(y)
    val = math.nan
    for _ in range(horizon):
        val = theta.omega_g
        for i, g in enumerate(theta.gamma, start=1):
            val += g * h_hist[-i]
        for j, a in enumerate(theta.alpha_g, start=1):
            val += a * y_ext[-j]
        h_hist.append(val)
        y_ext.append(val)  # future realized betas replaced by their forecasts
    return float(val)


# ---------------------------------------------------------------------------
# comparison forecaster and metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ArmaFit:
    """Conditional-least-squares ARMA fit with a one-step forecast."""

    p: int
    q: int
    const: float
    ar: tuple[float, ...]
    ma: tuple[float, ...]
    resid: np.ndarray
    invertible: bool

    def forecast_one(self, series: np.ndarray) -> float:
        y = np.asarray(series, dtype=float)
        val = self.const
        for i, phi in enumerate(self.ar, start=1):
            val += phi * y[-i]
        for j, th in enumerate(self.ma, start=1):
            val += th * self.resid[-j]
        return float(val)


def arma_forecaster(series: np.ndarray, p: int = 1, q: int = 1) -> ArmaFit:
    """Fit an ARMA(p, q) by conditional least squares (innovations
    recursion with zero pre-sample residuals) and return the fitted object.

    A fit whose moving-average polynomial has a root inside the unit circle
    is flagged non-invertible (``invertible=False``) but still returned.
    """
    y = np.asarray(series, dtype=float)
    n = y.shape[0]
    if n < 20:
        raise ModelError(f"need at least 20 observations, got {n}")
    if float(np.var(y)) == 0.0:
        ar = tuple(0.0 for _ in range(p))
        ma = tuple(0.0 for _ in range(q))
        return ArmaFit(p, q, float(y[0]), ar, ma, np.zeros(n), True)

    r = max(p, 1)

    def resid_of(vec: np.ndarray) -> np.ndarray:
        c = vec[0]
        phi = vec[1 : 1 + p]
        th = vec[1 + p :]
        u = y[r:] - c
        for i in range(1, p + 1):
            u = u - phi[i - 1] * y[r - i : n - i]
        if q == 0:
            return u
        e, _ = lfilter([1.0], np.concatenate(([1.0], th)), u, zi=np.zeros(q))
        return e

    def objective(vec: np.ndarray) -> float:
        th = vec[1 + p :]
        pen = 0.0
        s = np.sum(np.abs(th))
        if s > 0.98:
            pen = 1e4 * (s - 0.98) ** 2
        e = resid_of(vec)
        return float(np.mean(e * e)) + pen

    mu = float(np.mean(y))
    x0 = np.zeros(1 + p + q)
    x0[0] = mu * (0.5 if p else 1.0)
    if p:
        x0[1] = 0.5
    res = minimize(objective, x0, method="Nelder-Mead",
                   options={"maxiter": 4000, "xatol": 1e-9, "fatol": 1e-12})
    vec = res.x
    e = resid_of(vec)
    resid_full = np.concatenate([np.zeros(r), e])
    ma = tuple(float(v) for v in vec[1 + p :])
    invertible = True
    if q > 0 and any(abs(v) > 0 for v in ma):
        roots = np.roots(np.concatenate(([1.0], ma))[::-1])
        invertible = bool(np.all(np.abs(roots) > 1.0)) if roots.size else True
    return ArmaFit(
        p=p, q=q, const=float(vec[0]),
        ar=tuple(float(v) for v in vec[1 : 1 + p]),
        ma=ma, resid=resid_full, invertible=invertible,
    )


def evaluate(pred: np.ndarray, target: np.ndarray, metric: str = "MSFE") -> float:
    """Mean squared (``MSFE``) or mean absolute (``MAPE``) forecast error."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape or pred.ndim != 1 or pred.shape[0] < 1:
        raise ModelError(
            f"prediction/target length mismatch: {pred.shape} vs {target.shape}"
        )
    diff = pred - target
    key = metric.upper()
    if key == "MSFE":
        return float(np.mean(diff * diff))
    if key == "MAPE":
        return float(np.mean(np.abs(diff)))
    raise ModelError(f"unknown metric {metric!r}")


@dataclass(frozen=True)
class ResidualDiagnostic:
    intercept: float
    slope: float
    acf: np.ndarray
    degenerate: bool = False


def residual_acf_diagnostic(
    rib: np.ndarray, predicted: np.ndarray, max_lag: int = 20
) -> ResidualDiagnostic:
    """Regress the realized series on its predictions and report the
    residual autocorrelations at lags ``1..max_lag``."""
    y = np.asarray(rib, dtype=float)
    x = np.asarray(predicted, dtype=float)
    if y.shape != x.shape:
        raise ModelError(f"length mismatch: {y.shape} vs {x.shape}")
    n = y.shape[0]
    if n < max_lag + 10:
        raise ModelError(f"need at least {max_lag + 10} points, got {n}")
    sxx = float(np.var(x))
    if sxx == 0.0:
        raise ModelError("zero-variance predictor")
    slope = float(np.cov(x, y, bias=True)[0, 1] / sxx)
    intercept = float(np.mean(y) - slope * np.mean(x))
    resid = y - intercept - slope * x
    centered = resid - resid.mean()
    denom = float(np.dot(centered, centered))
    if denom <= 1e-300:
        return ResidualDiagnostic(intercept, slope, np.full(max_lag, np.nan), True)
    acf = np.array([
        float(np.dot(centered[lag:], centered[:-lag]) / denom)
        for lag in range(1, max_lag + 1)
    ])
    return ResidualDiagnostic(intercept, slope, acf, False)
