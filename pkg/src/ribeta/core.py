"""Shared domain types, weight-kernel constants, and tuning-parameter rules.

Everything in this module is immutable after construction and safe to share
across worker processes. The weight-kernel machinery evaluates the scalar
constants (psi0, psi1, Phi00, Phi01, Phi11) that scale every pre-averaging
estimator, and the tuning rules turn a sampling frequency ``m`` into the
window sizes and truncation levels used downstream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional

import numpy as np
from scipy.integrate import simpson

__all__ = [
    "KernelError",
    "TuningError",
    "PanelError",
    "TimeGrid",
    "PricePanel",
    "WeightKernel",
    "TuningConfig",
    "triangular",
    "triangular_derivative",
    "TRIANGULAR_CONSTANTS",
    "kernel_constants",
    "default_kernel",
    "discrete_phi_weights",
    "tuning_from_m",
    "power_law_thresholds",
    "DEFAULT_EXPONENTS",
]


class KernelError(ValueError):
    """Raised for degenerate or non-admissible weight functions."""


class TuningError(ValueError):
    """Raised when a tuning configuration violates its invariants."""


class PanelError(ValueError):
    """Raised for malformed price panels."""


# ---------------------------------------------------------------------------
# grids and panels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TimeGrid:
    """Regular intraday observation grid: ``m`` steps per day over ``n_days``.

    Day ``i`` (1-based) covers panel indices ``[(i-1)*m, i*m]`` inclusive, so
    consecutive days share their boundary observation and a panel holds
    ``n_days*m + 1`` points in total.
    """

    m: int
    n_days: int

    def __post_init__(self) -> None:
        if self.m < 2:
            raise ValueError(f"m must be >= 2, got {self.m}")
        if self.n_days < 1:
            raise ValueError(f"n_days must be >= 1, got {self.n_days}")

    @property
    def dt(self) -> float:
        """Day fraction per observation step."""
        return 1.0 / self.m

    @property
    def n_points(self) -> int:
        return self.n_days * self.m + 1

    def day_bounds(self, day: int) -> tuple[int, int]:
        """Inclusive-exclusive panel index range of day ``day`` (1-based),
        covering the day's ``m + 1`` grid points."""
        if not 1 <= day <= self.n_days:
            raise IndexError(f"day {day} outside 1..{self.n_days}")
        lo = (day - 1) * self.m
        return lo, lo + self.m + 1


@dataclass(frozen=True)
class PricePanel:
    """Bivariate regular-grid log-price panel (market ``x1``, asset ``x2``)."""

    grid: TimeGrid
    x1: np.ndarray
    x2: np.ndarray
    kind: str = "latent"  # "latent" | "observed"

    def __post_init__(self) -> None:
        x1 = np.asarray(self.x1, dtype=float)
        x2 = np.asarray(self.x2, dtype=float)
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)
        if self.kind not in ("latent", "observed"):
            raise PanelError(f"kind must be 'latent' or 'observed', got {self.kind!r}")
        n = self.grid.n_points
        if x1.shape != (n,) or x2.shape != (n,):
            raise PanelError(
                f"series length mismatch: expected {n}, got {x1.shape} / {x2.shape}"
            )
        if not (np.isfinite(x1).all() and np.isfinite(x2).all()):
            raise PanelError("price series contain non-finite values")

    @property
    def m(self) -> int:
        return self.grid.m

    @property
    def n_days(self) -> int:
        return self.grid.n_days

    def day(self, day: int) -> tuple[np.ndarray, np.ndarray]:
        """Views of the two log-price series for one day (``m + 1`` points)."""
        lo, hi = self.grid.day_bounds(day)
        return self.x1[lo:hi], self.x2[lo:hi]

    def value(self, day: int, j: int) -> tuple[float, float]:
        """Pointwise access by (day, intraday index)."""
        lo, hi = self.grid.day_bounds(day)
        if not 0 <= j <= self.grid.m:
            raise IndexError(f"intraday index {j} outside 0..{self.grid.m}")
        return float(self.x1[lo + j]), float(self.x2[lo + j])


# ---------------------------------------------------------------------------
# weight kernel
# ---------------------------------------------------------------------------


def triangular(x):
    """The usual triangular pre-averaging weight ``x ^ (1 - x)``."""
    x = np.asarray(x, dtype=float)
    return np.minimum(x, 1.0 - x)


def triangular_derivative(x):
    """Piecewise-analytic derivative of the triangular weight."""
    x = np.asarray(x, dtype=float)
    return np.where(x < 0.5, 1.0, -1.0)


# Closed forms for the triangular kernel, used as a cross-check table.
TRIANGULAR_CONSTANTS = {
    "psi0": Fraction(1, 12),
    "psi1": Fraction(1, 1),
    "phi00": Fraction(151, 80640),
    "phi01": Fraction(1, 96),
    "phi11": Fraction(1, 6),
}


@dataclass(frozen=True)
class WeightKernel:
    """A pre-averaging weight function with its derived scalar constants."""

    g: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    psi0: float
    psi1: float
    phi00: float
    phi01: float
    phi11: float
    quadrature_points: int

    def weights(self, k_m: int) -> np.ndarray:
        """Discrete pre-averaging weights ``g(j / k_m)`` for ``j = 1..k_m-1``."""
        return np.asarray(self.g(np.arange(1, k_m) / k_m), dtype=float)

    def constants_dict(self) -> dict[str, float]:
        return {
            "psi0": self.psi0,
            "psi1": self.psi1,
            "phi00": self.phi00,
            "phi01": self.phi01,
            "phi11": self.phi11,
        }


def _numerical_derivative(g: Callable, step: float = 1e-6) -> Callable:
    def dg(x):
        x = np.asarray(x, dtype=float)
        lo = np.clip(x - step, 0.0, 1.0)
        hi = np.clip(x + step, 0.0, 1.0)
        return (np.asarray(g(hi), dtype=float) - np.asarray(g(lo), dtype=float)) / (hi - lo)

    return dg


def kernel_constants(
    g: Callable[[np.ndarray], np.ndarray],
    quadrature_points: int = 4097,
    dg: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    tol: float = 1e-12,
) -> WeightKernel:
    """Evaluate the scalar kernel constants by composite Simpson quadrature.

    Parameters
    ----------
    g : callable
        Weight function on [0, 1] with ``g(0) = g(1) = 0``.
    quadrature_points : int
        Number of grid points (odd recommended). Doubling must move each
        constant by less than 1e-8 for an admissible kernel.
    dg : callable, optional
        Analytic derivative of ``g``. The triangular kernel gets its
        piecewise derivative automatically; any other kernel falls back to
        central differences unless ``dg`` is supplied.
    tol : float
        Degeneracy tolerance on the energy ``int g^2``.

    Returns
    -------
    WeightKernel
    """
    q = int(quadrature_points)
    if q < 9:
        raise KernelError("quadrature_points too small")
    grid = np.linspace(0.0, 1.0, q)
    h = grid[1] - grid[0]
    gv = np.asarray(g(grid), dtype=float)
    if abs(gv[0]) > 1e-12 or abs(gv[-1]) > 1e-12:
        raise KernelError(
            f"weight function must vanish at both ends, got g(0)={gv[0]!r}, g(1)={gv[-1]!r}"
        )
    gv[0] = 0.0
    gv[-1] = 0.0
    energy = simpson(gv * gv, dx=h)
    if energy <= tol:
        raise KernelError(f"degenerate kernel: int g^2 = {energy!r} <= {tol!r}")

    if dg is not None:
        dgv = np.asarray(dg(grid), dtype=float)
    elif g is triangular:
        dgv = triangular_derivative(grid)
    else:
        dgv = np.asarray(_numerical_derivative(g)(grid), dtype=float)

    phi0 = _phi_profile(gv, h)
    phi1 = _phi_profile(dgv, h)

    kernel = WeightKernel(
        g=g,
        psi0=float(phi0[0]),
        psi1=float(phi1[0]),
        phi00=float(simpson(phi0 * phi0, dx=h)),
        phi01=float(simpson(phi0 * phi1, dx=h)),
        phi11=float(simpson(phi1 * phi1, dx=h)),
        quadrature_points=q,
    )
    if kernel.psi0 <= 0.0:
        raise KernelError(f"psi0 must be positive, got {kernel.psi0}")
    return kernel


def _phi_profile(fv: np.ndarray, h: float) -> np.ndarray:
    """phi(s_k) = int_{s_k}^1 f(u) f(u - s_k) du on the sample grid of f."""
    q = fv.shape[0]
    out = np.empty(q)
    for k in range(q):
        prod = fv[k:] * fv[: q - k]
        out[k] = simpson(prod, dx=h) if prod.shape[0] >= 2 else 0.0
    return out


_DEFAULT_KERNEL_CACHE: dict[int, WeightKernel] = {}


def default_kernel(quadrature_points: int = 4097) -> WeightKernel:
    """The triangular kernel with cached constants."""
    kern = _DEFAULT_KERNEL_CACHE.get(quadrature_points)
    if kern is None:
        kern = kernel_constants(triangular, quadrature_points)
        _DEFAULT_KERNEL_CACHE[quadrature_points] = kern
    return kern


def discrete_phi_weights(
    k_m: int, k_prime_m: int, g: Callable[[np.ndarray], np.ndarray]
) -> np.ndarray:
    """Discrete lag weights ``phi_d^m`` for ``d = -k'_m .. k'_m``.

    ``phi_d^m = k_m * sum_i (g_{i+1} - g_i)(g_{i-d+1} - g_{i-d})`` with
    ``g_i = g(i / k_m)`` extended by zero outside ``0..k_m``. The result is
    symmetric in ``d`` and sums to zero over all lags (telescoping).
    """
    if k_m < 2:
        raise KernelError(f"k_m must be >= 2, got {k_m}")
    if k_prime_m < 0:
        raise KernelError(f"k_prime_m must be >= 0, got {k_prime_m}")
    gi = np.asarray(g(np.arange(k_m + 1) / k_m), dtype=float)
    gi[0] = 0.0
    gi[-1] = 0.0
    dgi = np.diff(gi)  # increments over i = 0..k_m-1
    full = k_m * np.correlate(dgi, dgi, mode="full")  # lags -(k_m-1)..k_m-1
    center = k_m - 1
    out = np.zeros(2 * k_prime_m + 1)
    for idx, d in enumerate(range(-k_prime_m, k_prime_m + 1)):
        if abs(d) <= k_m - 1:
            out[idx] = full[center + d]
    return out


# ---------------------------------------------------------------------------
# tuning configuration
# ---------------------------------------------------------------------------

#: Power-rule exponents: block window kappa, local-average varsigma,
#: noise-lag tau, and the two truncation exponents varpi1 / varpi2.
DEFAULT_EXPONENTS: Mapping[str, float] = {
    "kappa": 0.7,
    "varsigma": 0.15,
    "tau": 0.124,
    "varpi1": 0.47,
    "varpi2": 0.15,
}

_THRESHOLD_FIELDS = ("u1", "u2", "u11", "u12", "u22", "a_dot11", "a_dot12", "a_dot22")


@dataclass(frozen=True)
class TuningConfig:
    """Window sizes and truncation levels for one sampling frequency.

    Threshold fields left as ``None`` are resolved data-adaptively per day by
    the estimators (4x the daily standard deviation of the pre-averaged
    returns for ``u1``/``u2``; 0.2x the daily standard deviation of the
    corresponding noise statistic for the rest). Set them to finite values
    (or ``math.inf`` to disable truncation) to override.
    """

    k_m: int
    b_m: int
    l_m: int
    k_prime_m: int
    delta_m: float = 1e-5
    u1: Optional[float] = None
    u2: Optional[float] = None
    u11: Optional[float] = None
    u12: Optional[float] = None
    u22: Optional[float] = None
    a_dot11: Optional[float] = None
    a_dot12: Optional[float] = None
    a_dot22: Optional[float] = None

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.k_m < 2:
            raise TuningError(f"k_m must be >= 2, got k_m={self.k_m}")
        if not 0 < 6 * self.l_m < self.b_m:
            raise TuningError(
                f"need 0 < 6*l_m < b_m, got l_m={self.l_m}, b_m={self.b_m}"
            )
        if not 2 * self.k_m < self.b_m:
            raise TuningError(
                f"need 2*k_m < b_m, got k_m={self.k_m}, b_m={self.b_m}"
            )
        if self.k_prime_m < 1:
            raise TuningError(f"k_prime_m must be >= 1, got {self.k_prime_m}")
        if not self.delta_m > 0:
            raise TuningError(f"delta_m must be > 0, got {self.delta_m}")
        for name in _THRESHOLD_FIELDS:
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise TuningError(f"threshold {name} must be > 0, got {val}")

    def with_overrides(self, **overrides) -> "TuningConfig":
        """Return a copy with fields replaced; invariants re-validated."""
        return replace(self, **overrides)

    def without_truncation(self) -> "TuningConfig":
        """Copy with every truncation level set to +inf (no clipping)."""
        return replace(self, **{name: math.inf for name in _THRESHOLD_FIELDS})

    # -- JSON interface ----------------------------------------------------

    def to_json(self) -> str:
        payload = {}
        for f in fields(self):
            val = getattr(self, f.name)
            if isinstance(val, float) and math.isinf(val):
                val = "inf"
            payload[f.name] = val
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TuningConfig":
        raw = json.loads(text)
        if not isinstance(raw, dict):
            raise TuningError("tuning JSON must be a flat object")
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise TuningError(f"unknown tuning keys: {sorted(unknown)}")
        for key in _THRESHOLD_FIELDS:
            if raw.get(key) == "inf":
                raw[key] = math.inf
        return cls(**raw)


def tuning_from_m(
    m: int,
    overrides: Optional[Mapping[str, object]] = None,
    exponents: Optional[Mapping[str, float]] = None,
) -> TuningConfig:
    """Derive the default tuning configuration from a sampling frequency.

    Window sizes follow the floor-of-power rules
    ``k_m = floor(0.8 * m**0.5)``, ``b_m = floor(m**kappa)``,
    ``l_m = floor(m**varsigma)``, ``k'_m = floor(m**tau)`` and
    ``delta_m = 1e-5``. ``overrides`` replaces individual fields after the
    defaults are computed; the invariants are re-validated either way.
    """
    if m < 100:
        raise TuningError(f"m must be >= 100, got {m}")
    exp = dict(DEFAULT_EXPONENTS)
    if exponents:
        unknown = set(exponents) - set(exp)
        if unknown:
            raise TuningError(f"unknown exponents: {sorted(unknown)}")
        exp.update(exponents)
    cfg = dict(
        k_m=math.floor(0.8 * m**0.5),
        b_m=math.floor(m ** exp["kappa"]),
        l_m=math.floor(m ** exp["varsigma"]),
        k_prime_m=math.floor(m ** exp["tau"]),
        delta_m=1e-5,
    )
    if overrides:
        unknown = set(overrides) - {f.name for f in fields(TuningConfig)}
        if unknown:
            raise TuningError(f"unknown tuning overrides: {sorted(unknown)}")
        cfg.update(overrides)
    return TuningConfig(**cfg)


def power_law_thresholds(
    m: int,
    cfg: TuningConfig,
    a1: float,
    a2: float,
    a11: float,
    a12: float,
    a22: float,
    a_dot11: float,
    a_dot12: float,
    a_dot22: float,
    exponents: Optional[Mapping[str, float]] = None,
) -> TuningConfig:
    """Optional power-law threshold override.

    Maps proportionality constants to absolute truncation levels via
    ``u_a = a * (k_m / m) ** varpi1`` for the pre-averaged returns and
    ``u = a * m ** -varpi2`` for the noise statistics. The noise-statistic
    exponent is applied with the decaying sign, since those statistics
    shrink as ``m`` grows.
    """
    exp = dict(DEFAULT_EXPONENTS)
    if exponents:
        exp.update(exponents)
    km_dm = cfg.k_m / m
    scale_pre = km_dm ** exp["varpi1"]
    scale_noise = float(m) ** (-exp["varpi2"])
    return cfg.with_overrides(
        u1=a1 * scale_pre,
        u2=a2 * scale_pre,
        u11=a11 * scale_noise,
        u12=a12 * scale_noise,
        u22=a22 * scale_noise,
        a_dot11=a_dot11 * scale_noise,
        a_dot12=a_dot12 * scale_noise,
        a_dot22=a_dot22 * scale_noise,
    )
