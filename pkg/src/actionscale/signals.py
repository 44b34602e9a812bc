"""Uniform-grid time series, integration, convolution, and exponential bases.

All signals live on a fixed grid ``t0 + k*dt``. Sample times are always
recomputed from the index (never accumulated) so long records carry no
floating-point drift.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .errors import BadBasisSpec, EmptySignal, GridMismatch

__all__ = [
    "TimeSeries",
    "ExpBasis",
    "cumulative_integral",
    "cumulative_double_integral",
    "convolve",
    "make_exp_basis",
]


@dataclass
class TimeSeries:
    """Uniformly sampled signal: sample k lives at time ``t0 + k*dt``.

    ``values`` is a 1-D array for scalar signals or an ``(n, w)`` array for
    vector signals with fixed width ``w``.
    """

    t0: float
    dt: float
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.values.ndim not in (1, 2):
            raise ValueError("values must be 1-D (scalar) or 2-D (vector)")
        if len(self.values) < 1:
            raise EmptySignal("time series needs at least one sample")

    def __len__(self):
        return len(self.values)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.values))

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (len(self.values) - 1)

    def sample_at(self, t) -> np.ndarray:
        """Linear interpolation at arbitrary times (clamped at the ends)."""
        t = np.asarray(t, dtype=float)
        if self.values.ndim == 1:
            return np.interp(t, self.times, self.values)
        cols = [np.interp(t, self.times, self.values[:, j])
                for j in range(self.values.shape[1])]
        return np.stack(cols, axis=-1)

    def slice(self, t_start: float, t_stop: float) -> "TimeSeries":
        """Sub-series covering ``[t_start, t_stop]`` (indices clipped inward)."""
        k0 = max(0, int(np.ceil((t_start - self.t0) / self.dt - 1e-9)))
        k1 = min(len(self) - 1, int(np.floor((t_stop - self.t0) / self.dt + 1e-9)))
        if k1 < k0:
            raise EmptySignal("slice window contains no samples")
        return TimeSeries(self.t0 + k0 * self.dt, self.dt, self.values[k0:k1 + 1])


def cumulative_integral(u: TimeSeries) -> TimeSeries:
    """Cumulative trapezoid integral; output starts at zero."""
    if len(u) < 2:
        raise EmptySignal("need at least two samples to integrate")
    v = np.empty_like(u.values)
    if u.values.ndim == 1:
        v[0] = 0.0
        np.cumsum(0.5 * u.dt * (u.values[1:] + u.values[:-1]), out=v[1:])
    else:
        v[0] = 0.0
        v[1:] = np.cumsum(0.5 * u.dt * (u.values[1:] + u.values[:-1]), axis=0)
    return TimeSeries(u.t0, u.dt, v)


def cumulative_double_integral(u: TimeSeries) -> TimeSeries:
    """Double cumulative integral of a scalar signal.

    Two cascaded trapezoid cumulative sums; s(t0) = 0 and the inner
    integral also starts at zero, matching repeated integration from t0.
    """
    if u.values.ndim != 1:
        raise GridMismatch("double integral is defined for scalar signals")
    return cumulative_integral(cumulative_integral(u))


def convolve(g: TimeSeries, u: TimeSeries) -> TimeSeries:
    """Causal discrete convolution scaled by dt, truncated to len(u).

    out[k] = dt * sum_j g[j] * u[k-j] for j within the kernel support.
    The kernel g is finite (its own length is the truncation).
    """
    if abs(g.dt - u.dt) > 1e-12 * max(g.dt, u.dt):
        raise GridMismatch(f"kernel dt {g.dt} != signal dt {u.dt}")
    if g.values.ndim != 1 or u.values.ndim != 1:
        raise GridMismatch("convolve expects scalar-valued series")
    full = fftconvolve(g.values, u.values)[: len(u)]
    return TimeSeries(u.t0, u.dt, u.dt * full)


@dataclass
class ExpBasis:
    """Family of truncated first-order impulse responses.

    Column i samples exp(-t/tau_i) on [0, T_g], scaled so the discrete DC
    gain (sum of samples times dt) is exactly 1. Unit DC gain is what later
    lets a kernel's total gain be read off as the plain sum of basis weights.
    """

    tau: np.ndarray
    t_g: float
    dt: float
    columns: list[TimeSeries]

    @property
    def count(self) -> int:
        return len(self.columns)

    def matrix(self) -> np.ndarray:
        """Columns stacked as an (n_samples, N) array."""
        return np.stack([c.values for c in self.columns], axis=1)

    def dc_gains(self) -> np.ndarray:
        return np.array([c.values.sum() * self.dt for c in self.columns])


def make_exp_basis(n: int, tau_min: float, tau_max: float,
                   t_g: float, dt: float) -> ExpBasis:
    """Log-spaced exponential basis with unit discrete DC gain per column."""
    if n < 1:
        raise BadBasisSpec(f"need at least one basis function, got {n}")
    if not (0.0 < tau_min <= tau_max):
        raise BadBasisSpec(f"need 0 < tau_min <= tau_max, got [{tau_min}, {tau_max}]")
    if t_g <= 0.0 or dt <= 0.0:
        raise BadBasisSpec("truncation length and dt must be positive")
    taus = np.geomspace(tau_min, tau_max, n)
    t = dt * np.arange(int(round(t_g / dt)) + 1)
    cols = []
    for tau in taus:
        raw = np.exp(-t / tau) / tau
        raw /= raw.sum() * dt  # enforce discrete DC gain exactly 1
        cols.append(TimeSeries(0.0, dt, raw))
    return ExpBasis(tau=taus, t_g=t_g, dt=dt, columns=cols)
