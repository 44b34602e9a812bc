"""Ground-truth dynamics: the hidden-parameter plant the agent never sees.

Semi-implicit Euler for the translational states; exact zero-order-hold
discretization for the first-order actuator and the leaky velocity
integrator. The input gain ``b``, actuator rate ``alpha``, and gravity
``g_b`` are hidden truth: estimators only ever see inputs and camera
observations.

Axes follow the camera frame: index 0 lateral, index 1 vertical (up
positive), index 2 along the optical axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NoLanding, NumericFault
from .signals import TimeSeries

__all__ = [
    "PlantParams",
    "PlantState",
    "step_double_integrator",
    "step_first_order_actuator",
    "step_leaky_velocity_command",
    "simulate_flight",
]

VERTICAL = 1


@dataclass(frozen=True)
class PlantParams:
    b: float = 1.0                 # acceleration per unit input
    alpha: float = 10.0            # actuator rate, 1/s
    g_b: float = 9.81              # gravity bias, m/s^2
    body_half_width_l: float = 0.0955
    body_half_width_r: float = 0.0955
    leaky_tau: float = 10.0
    dt: float = 0.001

    def __post_init__(self):
        if self.b == 0.0:
            raise ValueError("input gain b must be nonzero")
        if self.alpha <= 0.0 or self.dt <= 0.0 or self.leaky_tau <= 0.0:
            raise ValueError("alpha, dt, leaky_tau must be positive")


@dataclass
class PlantState:
    x: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    x_act: float = 0.0             # applied specific force, input units
    mode: str = "grounded"

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.v = np.asarray(self.v, dtype=float)

    def copy(self) -> "PlantState":
        return PlantState(self.x.copy(), self.v.copy(), self.x_act, self.mode)


def _require_finite(u):
    if not np.all(np.isfinite(u)):
        raise NumericFault(f"non-finite input {u!r}")


def step_double_integrator(s: PlantState, u, p: PlantParams) -> PlantState:
    """Acceleration b*u on each commanded axis; semi-implicit Euler.

    A scalar input commands the optical axis only; a 3-vector commands all
    axes.
    """
    _require_finite(u)
    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        u = np.array([0.0, 0.0, float(u)])
    v = s.v + (p.b * u) * p.dt
    x = s.x + v * p.dt
    return PlantState(x, v, s.x_act, s.mode)


def step_first_order_actuator(s: PlantState, u: float, p: PlantParams) -> PlantState:
    """Vertical dynamics through the lagged actuator.

    x_act relaxes toward u with the exact one-step multiplier
    1 - e^(-alpha dt); net vertical acceleration is b*x_act - g_b.
    """
    _require_finite(u)
    x_act = s.x_act - math.expm1(-p.alpha * p.dt) * (u - s.x_act)
    accel = p.b * x_act - p.g_b
    v = s.v.copy()
    v[VERTICAL] += accel * p.dt
    x = s.x + v * p.dt
    return PlantState(x, v, x_act, s.mode)


def step_leaky_velocity_command(s: PlantState, u_accel, p: PlantParams) -> PlantState:
    """Acceleration command through a leaky integrator on a velocity base.

    The base tracks the commanded velocity instantaneously, so the plant
    velocity IS the leaky-integrator state: vdot = b*u - v/leaky_tau,
    discretized exactly for piecewise-constant input.
    """
    _require_finite(u_accel)
    u_accel = np.asarray(u_accel, dtype=float)
    rise = -math.expm1(-p.dt / p.leaky_tau)  # 1 - e^(-dt/tau), cancellation-free
    v = s.v * (1.0 - rise) + p.b * u_accel * p.leaky_tau * rise
    x = s.x + v * p.dt
    return PlantState(x, v, s.x_act, s.mode)


def simulate_flight(s0: PlantState, p: PlantParams,
                    residual_thrust: TimeSeries | None = None,
                    t_cap: float = 30.0) -> TimeSeries:
    """Ballistic flight from launch until height returns to launch level.

    Vertical acceleration is b*x_act - g_b with the actuator decaying from
    its launch value (input from residual_thrust, zero past its end);
    horizontal velocity is unaffected. Returns the position trajectory; the
    final sample is the first at or below launch height.
    """
    if s0.mode != "airborne":
        raise ValueError(f"flight requires airborne mode, got {s0.mode!r}")
    y0 = s0.x[VERTICAL]
    s = s0.copy()
    samples = [s.x.copy()]
    n_cap = int(round(t_cap / p.dt))
    for k in range(n_cap):
        if residual_thrust is not None and k < len(residual_thrust):
            u = float(residual_thrust.values[k])
        else:
            u = 0.0
        x_act = s.x_act - math.expm1(-p.alpha * p.dt) * (u - s.x_act)
        accel = p.b * x_act - p.g_b
        v = s.v.copy()
        v[VERTICAL] += accel * p.dt
        x = s.x + v * p.dt
        s = PlantState(x, v, x_act, "airborne")
        samples.append(s.x.copy())
        if s.x[VERTICAL] <= y0 and s.v[VERTICAL] < 0.0:
            return TimeSeries(0.0, p.dt, np.array(samples))
    raise NoLanding(f"no landing within {t_cap} s (net upward force?)")
