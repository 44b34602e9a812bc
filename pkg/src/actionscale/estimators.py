"""Sliding-window estimation of state in action-implied units.

The agent knows only its control signal u and the unitless vision signal
Phi_W. Comparing what vision reports against the double integral of u
recovers distances either per unit of input gain (the ./b family) or per
unit of the visual characteristic scale (the ./d family). The multi-input
variant identifies the full actuator kernel as a nonnegative combination
of exponentials plus a gravity bias, all per unit d, and converts to action
units by dividing through the kernel's DC gain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DivisionDegenerate,
    NotPositiveDefinite,
    SingularGram,
    ZeroDcGain,
)
from .qp import least_squares, nnls
from .signals import ExpBasis, TimeSeries, convolve, cumulative_double_integral

__all__ = [
    "WindowData",
    "EmbodiedEstimate",
    "ImpulseEstimate",
    "EmbodiedReport",
    "estimate_biased",
    "estimate_unbiased",
    "estimate_impulse_response",
    "to_embodied",
    "to_embodied_value",
    "excitation_check",
]

# An input whose sup-norm sits below this is treated as identically zero,
# which makes the estimation problem non-unique.
ZERO_INPUT_TOL = 1e-12


@dataclass
class WindowData:
    """Measurements over one sliding window [t0, t0 + T].

    ``phi`` holds camera-rate Phi_W samples, ``u`` the control-rate input.
    The input grid must cover the window; phi timestamps must lie inside it.
    """

    phi: TimeSeries
    u: TimeSeries
    window: tuple[float, float]

    def __post_init__(self):
        t0, t1 = self.window
        if not t1 > t0:
            raise ValueError("window must have positive length")
        half = 0.5 * self.u.dt
        if self.u.t0 > t0 + half or self.u.t_end < t1 - half:
            raise ValueError("input signal does not cover the window")
        times = self.phi.times
        if times[0] < t0 - half or times[-1] > t1 + half:
            raise ValueError("phi samples fall outside the window")

    def input_slice(self) -> TimeSeries:
        return self.u.slice(self.window[0], self.window[1])


@dataclass
class EmbodiedEstimate:
    """State and scale in both unit families, plus excitation diagnostics."""

    x1_over_b: float
    x2_over_b: float
    d_over_b: float
    x1_over_d: float
    x2_over_d: float
    b_over_d: float
    gram_min_eig: float
    window_end: float = 0.0


@dataclass
class ImpulseEstimate:
    """Identified actuator kernel (per unit d) and companion quantities.

    ``c`` are the nonnegative basis weights; since every basis column has
    unit DC gain, the kernel's DC gain per unit d is plainly sum(c).
    """

    c: np.ndarray
    xdot0_over_d: float
    gb_over_d: float
    basis: ExpBasis = field(repr=False, default=None)
    gram_min_eig: float = float("nan")
    residual_rms: float = float("nan")

    @property
    def dc_gain_over_d(self) -> float:
        return float(self.c.sum())


@dataclass
class EmbodiedReport:
    """Quantities divided through to plain action units."""

    scale: float                   # the characteristic scale d itself
    velocity: float
    gravity: float | None = None
    position: float | None = None
    dc_gain_over_d: float = float("nan")


def _check_excited(u: TimeSeries):
    if np.abs(u.values).max() < ZERO_INPUT_TOL:
        raise SingularGram("input is identically zero on the window; "
                           "state is unobservable without acceleration")


def _window_regressors(w: WindowData):
    """Times, phi values, and the double-integral regressor at camera rate."""
    t0 = w.window[0]
    u_win = w.input_slice()
    _check_excited(u_win)
    s = cumulative_double_integral(u_win)
    t_cam = w.phi.times
    s_cam = s.sample_at(t_cam)
    return t_cam - t0, np.asarray(w.phi.values, dtype=float), s_cam


def estimate_biased(w: WindowData) -> EmbodiedEstimate:
    """Direct fit of the ./b family.

    Solves min || Phi*(d/b) - x1(t0)/b - (t-t0)*x2(t0)/b - iint u ||^2.
    Phi multiplies an unknown, so measurement noise on Phi biases the fit
    (use estimate_unbiased when noise matters).
    """
    tau, phi, s_cam = _window_regressors(w)
    a = np.column_stack([phi, -np.ones_like(tau), -tau])
    try:
        theta, gram = least_squares(a, s_cam)
    except NotPositiveDefinite as exc:
        raise SingularGram(str(exc)) from exc
    d_over_b, x1_over_b, x2_over_b = theta
    if abs(d_over_b) < 1e-15:
        raise DivisionDegenerate("estimated d/b is numerically zero")
    return EmbodiedEstimate(
        x1_over_b=x1_over_b,
        x2_over_b=x2_over_b,
        d_over_b=d_over_b,
        x1_over_d=x1_over_b / d_over_b,
        x2_over_d=x2_over_b / d_over_b,
        b_over_d=1.0 / d_over_b,
        gram_min_eig=float(np.linalg.eigvalsh(gram).min()),
        window_end=w.window[1],
    )


def estimate_unbiased(w: WindowData) -> EmbodiedEstimate:
    """Fit of the ./d family with Phi as the regression target.

    Phi is the dependent variable here, so zero-mean noise on it leaves the
    coefficient estimates unbiased. The ./b family follows by division
    (which reintroduces a little bias, shrinking with window length).
    """
    tau, phi, s_cam = _window_regressors(w)
    a = np.column_stack([np.ones_like(tau), tau, s_cam])
    try:
        theta, gram = least_squares(a, phi)
    except NotPositiveDefinite as exc:
        raise SingularGram(str(exc)) from exc
    x1_over_d, x2_over_d, b_over_d = theta
    if abs(b_over_d) < 1e-12:
        raise DivisionDegenerate("estimated b/d is numerically zero; "
                                 "./b quantities undefined")
    return EmbodiedEstimate(
        x1_over_b=x1_over_d / b_over_d,
        x2_over_b=x2_over_d / b_over_d,
        d_over_b=1.0 / b_over_d,
        x1_over_d=x1_over_d,
        x2_over_d=x2_over_d,
        b_over_d=b_over_d,
        gram_min_eig=float(np.linalg.eigvalsh(gram).min()),
        window_end=w.window[1],
    )


def estimate_impulse_response(w: WindowData, basis: ExpBasis,
                              with_gravity: bool = True,
                              fit_interval_start: float = 4.0) -> ImpulseEstimate:
    """Identify the actuator kernel, initial velocity, and gravity per unit d.

    Regressors are {t-t0, -(t-t0)^2/2, basis (x) iint u} evaluated at camera
    times with t - t0 >= fit_interval_start; the delayed start keeps
    pre-window actuator state and the kernel's own truncation length out of
    the fit. Kernel weights are constrained nonnegative (the overfitting
    guard); a positive gravity coefficient means downward gravity.
    """
    t0, t1 = w.window
    if t1 - t0 <= fit_interval_start:
        raise ValueError("window shorter than the fit start")
    u_win = w.input_slice()
    _check_excited(u_win)
    s = cumulative_double_integral(u_win)
    conv_cols = [convolve(col, s) for col in basis.columns]

    t_cam = w.phi.times
    keep = (t_cam - t0) >= fit_interval_start - 1e-9
    if not np.any(keep):
        raise ValueError("no camera samples at or after the fit start")
    t_fit = t_cam[keep]
    tau = t_fit - t0
    phi = np.asarray(w.phi.values, dtype=float)[keep]

    cols = [tau]
    if with_gravity:
        cols.append(-0.5 * tau ** 2)
    cols.extend(col.sample_at(t_fit) for col in conv_cols)
    a = np.column_stack(cols)
    n_free = 2 if with_gravity else 1

    theta = nnls(a, phi, free=n_free)
    resid = a @ theta - phi
    gram = a.T @ a
    return ImpulseEstimate(
        c=theta[n_free:],
        xdot0_over_d=float(theta[0]),
        gb_over_d=float(theta[1]) if with_gravity else 0.0,
        basis=basis,
        gram_min_eig=float(np.linalg.eigvalsh(gram).min()),
        residual_rms=float(np.sqrt(np.mean(resid ** 2))),
    )


def to_embodied_value(value_over_d: float, dc_gain_over_d: float) -> float:
    """Convert one ./d quantity to action units by dividing through DC/d."""
    if abs(dc_gain_over_d) < 1e-15:
        raise ZeroDcGain("cannot convert: DC gain estimate is zero")
    return value_over_d / dc_gain_over_d


def to_embodied(e) -> EmbodiedReport:
    """Convert an estimate's ./d quantities to plain action units.

    For kernel estimates the divisor is sum(c) (the DC gain per unit d);
    for the double-integrator estimate it is b/d, the degenerate one-tap
    kernel's gain.
    """
    if isinstance(e, ImpulseEstimate):
        dcg = e.dc_gain_over_d
        return EmbodiedReport(
            scale=to_embodied_value(1.0, dcg),
            velocity=to_embodied_value(e.xdot0_over_d, dcg),
            gravity=to_embodied_value(e.gb_over_d, dcg),
            dc_gain_over_d=dcg,
        )
    if isinstance(e, EmbodiedEstimate):
        dcg = e.b_over_d
        return EmbodiedReport(
            scale=to_embodied_value(1.0, dcg),
            velocity=to_embodied_value(e.x2_over_d, dcg),
            position=to_embodied_value(e.x1_over_d, dcg),
            dc_gain_over_d=dcg,
        )
    raise TypeError(f"cannot convert {type(e).__name__}")


def excitation_check(u: TimeSeries, basis: ExpBasis,
                     window: tuple[float, float]) -> tuple[np.ndarray, float]:
    """Gram matrix of the stacked kernel-input convolutions over a window.

    Builds phi = vec(u (x) f^T), integrates the outer product, and reports
    the minimum eigenvalue. Zero (to tolerance) means some kernel/input
    combination is indistinguishable and the identification is non-unique.
    """
    u_win = u.slice(window[0], window[1])
    vals = u_win.values if u_win.values.ndim == 2 else u_win.values[:, None]
    features = []
    for j in range(vals.shape[1]):
        uj = TimeSeries(u_win.t0, u_win.dt, vals[:, j])
        for col in basis.columns:
            features.append(convolve(col, uj).values)
    mat = np.stack(features, axis=1)
    gram = mat.T @ mat * u_win.dt
    return gram, float(np.linalg.eigvalsh(gram).min())
